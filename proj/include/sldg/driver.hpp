#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sldg/dg_field.hpp"
#include "sldg/poisson_ldg.hpp"
#include "sldg/problems.hpp"
#include "sldg/remap.hpp"
#include "sldg/tracer.hpp"

namespace sldg {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SimConfig {
  std::string problem = "weak-landau";
  int nx = 64;
  int nv = 64;
  int degree = 2;
  bool qc = false;
  int time_order = 2;
  bool efficient = false;
  double cfl = 1.0;
  double t_max = 1.0;
  bool pp_limiter = true;
  /// Diagnostic spacing; 0 selects every step up to t = 1, then every 0.1.
  double diag_every = 0.0;
  std::optional<double> reverse_at;
  std::vector<double> snapshot_times;

  void validate() const {
    if (nx < 1 || nv < 1) throw ConfigError("nx and nv must be positive");
    if (degree < 0 || degree > 2) throw ConfigError("degree must be 0, 1 or 2");
    if (qc && degree != 2) throw ConfigError("--qc requires --degree 2");
    if (time_order != 2 && time_order != 3) throw ConfigError("time order must be 2 or 3");
    if (time_order == 3 && degree == 0) throw ConfigError("time order 3 needs degree >= 1");
    if (!(cfl > 0.0)) throw ConfigError("cfl must be positive");
    if (!(t_max > 0.0)) throw ConfigError("tmax must be positive");
    if (diag_every < 0.0) throw ConfigError("diag-every must be nonnegative");
    if (reverse_at && !(*reverse_at > 0.0 && *reverse_at < t_max)) {
      throw ConfigError("reverse-at must lie in (0, tmax)");
    }
    if (reverse_at && nv % 2 != 0) throw ConfigError("reversal needs an even nv");
  }

  UpstreamMode mode() const { return qc ? UpstreamMode::qc : UpstreamMode::quad; }
};

struct DiagnosticsRecord {
  double t = 0.0;
  double e_l2 = 0.0;
  double mass = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double energy = 0.0;
  double entropy = 0.0;
  // Relative deviations from t = 0 (absolute when the initial value is 0).
  double d_mass = 0.0;
  double d_l1 = 0.0;
  double d_l2 = 0.0;
  double d_energy = 0.0;
  double d_entropy = 0.0;
  /// Smallest sampled value of f (quadrature nodes and cell centers).
  double min_f = 0.0;
};

/// dt = CFL / (v_max/dx + max|E|/dv).
inline double compute_dt(const PhaseMesh& mesh, double max_abs_E, double cfl) {
  return cfl / (mesh.v_max() / mesh.dx() + max_abs_E / mesh.dv());
}

/// Functionals of f and E; deviations are left at zero.
inline DiagnosticsRecord diagnostics(const DGField& f, const Field1D& E, double t) {
  const PhaseMesh& mesh = f.mesh();
  DiagnosticsRecord r;
  r.t = t;
  r.e_l2 = E.l2_norm();
  r.mass = total_mass(f);
  double l1 = 0.0, l2 = 0.0, kin = 0.0, ent = 0.0, mn = std::numeric_limits<double>::infinity();
  for_each_quadrature_node(mesh, f.degree(), [&](int i, int j, double xi, double eta, double w) {
    const double val = eval_local(f.cell(mesh.linear(i, j)).data(), f.degree(), xi, eta);
    const double v = mesh.v_center(j) + 0.5 * mesh.dv() * eta;
    l1 += w * std::abs(val);
    l2 += w * val * val;
    kin += w * val * v * v;
    if (val > 0.0) ent += w * val * std::log(val);
    mn = std::min(mn, val);
  });
  r.l1 = l1;
  r.l2 = std::sqrt(l2);
  r.energy = kin + r.e_l2 * r.e_l2;
  r.entropy = ent;
  r.min_f = std::min(mn, min_center_value(f));
  return r;
}

inline void fill_deviations(DiagnosticsRecord& r, const DiagnosticsRecord& r0) {
  auto rel = [](double a, double a0) { return a0 != 0.0 ? (a - a0) / std::abs(a0) : a - a0; };
  r.d_mass = rel(r.mass, r0.mass);
  r.d_l1 = rel(r.l1, r0.l1);
  r.d_l2 = rel(r.l2, r0.l2);
  r.d_energy = rel(r.energy, r0.energy);
  r.d_entropy = rel(r.entropy, r0.entropy);
}

struct StepStats {
  long steps = 0;
  long parabola_fallbacks = 0;
  long limited_cells = 0;
  /// Largest per-step |mass_n - mass_{n+1} - outflow| (only when tracked).
  double max_mass_identity_defect = 0.0;
};

/// Time integrator holding f and its field state at the current time.
class Simulation {
 public:
  Simulation(const SimConfig& cfg, const ProblemSpec& problem)
      : cfg_(validated(cfg)),
        problem_(problem),
        mesh_(problem.length_x, problem.v_max, cfg.nx, cfg.nv),
        solver_(problem.length_x, cfg.nx, cfg.degree) {
    f_ = project(mesh_, problem.initial, cfg.degree);
    if (cfg_.pp_limiter) pp_limit_in_place(f_);
    initial_ = f_;
    refresh_state(true);
  }

  const SimConfig& config() const { return cfg_; }
  const PhaseMesh& mesh() const { return mesh_; }
  const DGField& f() const { return f_; }
  const DGField& initial() const { return initial_; }
  const FieldState& field() const { return state_; }
  double time() const { return t_; }
  const StepStats& stats() const { return stats_; }

  /// Track the per-step mass identity including outflow through |v| = v_max.
  void track_outflow(bool on) { track_outflow_ = on; }

  double next_dt() const { return compute_dt(mesh_, state_.E.max_abs(), cfg_.cfl); }

  void step(double dt) {
    const int K = cfg_.degree;
    const bool order3 = cfg_.time_order == 3;
    const UpstreamMode target = cfg_.mode();
    Stage s1{K, target}, s2{K, target};
    if (cfg_.efficient) {
      s1 = {0, UpstreamMode::quad};
      s2 = order3 ? Stage{std::min(1, K), UpstreamMode::quad} : Stage{K, target};
    }

    int ghost = 0;
    if (track_outflow_) ghost = 2 + static_cast<int>(std::ceil(2.0 * state_.E.max_abs() * dt / mesh_.dv()));
    NodeLattice l1(mesh_, ghost), l2(mesh_, ghost);
    trace_lattice_order1(l1, state_, dt);
    const DGField f1 = stage_remap(s1, l1);
    const FieldState st1 = state_of(f1, false);

    trace_lattice_order2(l2, l1, state_, st1, dt);
    DGField fnew;
    const NodeLattice* last = &l2;
    UpstreamMode last_mode = s2.mode;
    NodeLattice l3;
    if (!order3) {
      fnew = stage_remap(s2, l2);
    } else {
      const DGField f2 = stage_remap(s2, l2);
      const FieldState st2 = state_of(f2, true);
      l3 = NodeLattice(mesh_, ghost);
      trace_lattice_order3(l3, l2, state_, st2, dt);
      fnew = stage_remap(Stage{K, target}, l3);
      last = &l3;
      last_mode = target;
    }

    if (track_outflow_) {
      const double out = upstream_mass(f_, *last, last_mode, -ghost, 0) +
                         upstream_mass(f_, *last, last_mode, mesh_.nv(), mesh_.nv() + ghost);
      const double defect = std::abs(total_mass(f_) - total_mass(fnew) - out);
      stats_.max_mass_identity_defect = std::max(stats_.max_mass_identity_defect, defect);
    }

    f_ = std::move(fnew);
    t_ += dt;
    ++stats_.steps;
    refresh_state(false);
  }

  /// v -> -v reflection of the current solution; the field is re-solved and
  /// the reference mean current recomputed.
  void reverse_velocity() {
    f_ = flip_velocity(f_);
    refresh_state(true);
  }

  DiagnosticsRecord diagnostics_now() const { return diagnostics(f_, state_.E, t_); }

 private:
  struct Stage {
    int degree;
    UpstreamMode mode;
  };

  static const SimConfig& validated(const SimConfig& c) {
    c.validate();
    return c;
  }

  DGField stage_remap(const Stage& stage, const NodeLattice& lat) {
    RemapStats rs;
    DGField in = with_degree(f_, stage.degree);
    // Truncation can undershoot; the remap keeps averages nonnegative only
    // for nonnegative input.
    if (cfg_.pp_limiter && stage.degree < f_.degree()) pp_limit_in_place(in);
    DGField out = remap_step(in, lat, stage.mode, &rs);
    stats_.parabola_fallbacks += rs.parabola_fallbacks;
    if (cfg_.pp_limiter) stats_.limited_cells += static_cast<long>(pp_limit_in_place(out));
    return out;
  }

  FieldState state_of(const DGField& f, bool moments) const {
    return compute_field_state(f, solver_, jbar0_, moments, problem_.zero_field);
  }

  void refresh_state(bool recompute_jbar0) {
    if (recompute_jbar0) jbar0_ = problem_.zero_field ? 0.0 : jbar0(f_);
    state_ = state_of(f_, cfg_.time_order == 3);
  }

  SimConfig cfg_;
  ProblemSpec problem_;
  PhaseMesh mesh_;
  PoissonSolver solver_;
  DGField f_, initial_;
  FieldState state_;
  double jbar0_ = 0.0;
  double t_ = 0.0;
  bool track_outflow_ = false;
  StepStats stats_;
};

struct Snapshot {
  double t = 0.0;
  DGField f;
};

struct RunResult {
  std::vector<DiagnosticsRecord> series;
  std::vector<Snapshot> snapshots;
  DGField final_field;
  StepStats stats;
  /// Reversibility errors against the initial data (only with reverse_at).
  /// The L2 error is root-mean-square over the domain: ||e||_2 / sqrt(|Omega|).
  std::optional<double> reversal_l2;
  std::optional<double> reversal_linf;
};

struct RunCallbacks {
  std::function<void(const DiagnosticsRecord&)> on_diagnostics;
  std::function<void(const Snapshot&)> on_snapshot;
};

/// Full time loop. Steps are shortened to land exactly on t_max, the
/// reversal time and any snapshot time.
inline RunResult run(const SimConfig& cfg, const ProblemSpec& problem, const RunCallbacks& cb = {},
                     bool track_outflow = false) {
  cfg.validate();
  Simulation sim(cfg, problem);
  sim.track_outflow(track_outflow);
  RunResult res;

  std::vector<double> stops = cfg.snapshot_times;
  if (cfg.reverse_at) stops.push_back(*cfg.reverse_at);
  stops.push_back(cfg.t_max);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::remove_if(stops.begin(), stops.end(), [&](double s) { return s <= 0.0 || s > cfg.t_max; }),
              stops.end());

  const double eps = 1e-12 * std::max(1.0, cfg.t_max);
  DiagnosticsRecord r0 = sim.diagnostics_now();
  auto record = [&](DiagnosticsRecord r) {
    fill_deviations(r, r0);
    res.series.push_back(r);
    if (cb.on_diagnostics) cb.on_diagnostics(r);
  };
  auto snapshot = [&](double t) {
    Snapshot s{t, sim.f()};
    if (cb.on_snapshot) cb.on_snapshot(s);
    res.snapshots.push_back(std::move(s));
  };
  record(r0);
  for (double s : cfg.snapshot_times)
    if (std::abs(s) <= eps) snapshot(0.0);

  double last_diag = 0.0;
  bool reversed = false;
  std::size_t next_stop = 0;
  while (sim.time() < cfg.t_max - eps) {
    while (next_stop < stops.size() && stops[next_stop] <= sim.time() + eps) ++next_stop;
    double dt = sim.next_dt();
    const double target = stops[next_stop];
    if (sim.time() + dt > target - eps) dt = target - sim.time();
    sim.step(dt);
    const double t = sim.time();
    bool at_stop = std::abs(t - target) <= eps;

    const bool dense = cfg.diag_every == 0.0 ? t <= 1.0 + eps : false;
    const double spacing = cfg.diag_every == 0.0 ? 0.1 : cfg.diag_every;
    if (dense || t >= last_diag + spacing - eps || t >= cfg.t_max - eps) {
      record(sim.diagnostics_now());
      last_diag = t;
    }
    if (at_stop) {
      for (double s : cfg.snapshot_times)
        if (std::abs(s - t) <= eps) snapshot(t);
      if (cfg.reverse_at && !reversed && std::abs(t - *cfg.reverse_at) <= eps) {
        sim.reverse_velocity();
        reversed = true;
      }
    }
  }

  res.final_field = sim.f();
  res.stats = sim.stats();
  if (cfg.reverse_at) {
    // After T forward and T backward the solution is f0(x, -v).
    const DGField back = flip_velocity(res.final_field);
    const double area = sim.mesh().length_x() * 2.0 * sim.mesh().v_max();
    res.reversal_l2 = l2_error(back, sim.initial()) / std::sqrt(area);
    res.reversal_linf = linf_error(back, sim.initial());
  }
  return res;
}

// ---------------------------------------------------------------------------
// Growth and damping rates from the peaks of log ||E||_2
// ---------------------------------------------------------------------------

struct Peak {
  double t;
  double log_e;
};

/// Local maxima of log(e) in a time series, each refined by the parabola
/// through the sample and its neighbors. An oscillating series that starts by
/// decreasing counts its first sample as peak 1, so peak numbers follow the
/// oscillation count from the initial maximum. A monotone series has none.
inline std::vector<Peak> find_peaks(const std::vector<double>& t, const std::vector<double>& e) {
  std::vector<Peak> out;
  if (t.size() != e.size()) throw std::invalid_argument("find_peaks: size mismatch");
  for (std::size_t k = 1; k + 1 < e.size(); ++k) {
    if (!(e[k] > e[k - 1] && e[k] >= e[k + 1]) || !(e[k - 1] > 0.0 && e[k + 1] > 0.0)) continue;
    const double t0 = t[k - 1], t1 = t[k], t2 = t[k + 1];
    const double y0 = std::log(e[k - 1]), y1 = std::log(e[k]), y2 = std::log(e[k + 1]);
    // Divided differences of the interpolating parabola.
    const double d01 = (y1 - y0) / (t1 - t0), d12 = (y2 - y1) / (t2 - t1);
    const double c2 = (d12 - d01) / (t2 - t0);
    Peak p{t1, y1};
    if (c2 < 0.0) {
      const double c1 = d01 - c2 * (t0 + t1);
      const double tp = -c1 / (2.0 * c2);
      if (tp > t0 && tp < t2) p = {tp, y0 + d01 * (tp - t0) + c2 * (tp - t0) * (tp - t1)};
    }
    out.push_back(p);
  }
  if (!out.empty() && e[0] > e[1] && e[1] > 0.0) out.insert(out.begin(), Peak{t[0], std::log(e[0])});
  return out;
}

/// Slope between peaks a and b (1-based).
inline double peak_slope(const std::vector<Peak>& p, int a, int b) {
  const int need = std::max(a, b);
  if (static_cast<int>(p.size()) < need) {
    throw std::runtime_error("fit_rates: need " + std::to_string(need) + " peaks, found " + std::to_string(p.size()));
  }
  const Peak& pa = p[a - 1];
  const Peak& pb = p[b - 1];
  return (pb.log_e - pa.log_e) / (pb.t - pa.t);
}

/// Least-squares slope through all peaks with t in [t0, t1].
inline double peak_fit_slope(const std::vector<Peak>& p, double t0, double t1) {
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (const Peak& q : p) {
    if (q.t < t0 || q.t > t1) continue;
    n += 1;
    st += q.t;
    sy += q.log_e;
    stt += q.t * q.t;
    sty += q.t * q.log_e;
  }
  if (n < 2) throw std::runtime_error("peak_fit_slope: fewer than two peaks in range");
  return (n * sty - st * sy) / (n * stt - st * st);
}

struct Rates {
  double gamma1 = 0.0;  // peak 2 -> 3
  double gamma2 = 0.0;  // peak 10 -> 16
  std::vector<Peak> peaks;
};

inline Rates fit_rates(const std::vector<double>& t, const std::vector<double>& e_l2) {
  Rates r;
  r.peaks = find_peaks(t, e_l2);
  r.gamma1 = peak_slope(r.peaks, 2, 3);
  r.gamma2 = peak_slope(r.peaks, 10, 16);
  return r;
}

inline Rates fit_rates(const std::vector<DiagnosticsRecord>& series) {
  std::vector<double> t, e;
  for (const auto& r : series) {
    t.push_back(r.t);
    e.push_back(r.e_l2);
  }
  return fit_rates(t, e);
}

}  // namespace sldg
