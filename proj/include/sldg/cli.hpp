#pragma once

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sldg/driver.hpp"

namespace sldg {

// ---------------------------------------------------------------------------
// Command line and configuration files
// ---------------------------------------------------------------------------

enum class StudyMode { none, spatial, temporal };

struct CliOptions {
  SimConfig sim;
  std::string out_dir = "out";
  bool fit_rates = false;
  StudyMode study = StudyMode::none;
  std::vector<int> meshes;
  std::vector<double> cfls;
  double reference_cfl = 0.1;
};

/// Registers every option on `app`, bound to `o`. Files given with --config
/// use "key = value" lines with the long flag names as keys; flags given on
/// the command line take precedence over the file.
inline void add_options(CLI::App& app, CliOptions& o, std::string& pp, double& reverse_at, std::string& study) {
  SimConfig& c = o.sim;
  app.set_config("--config", "", "Read options from a \"key = value\" file");
  app.add_option("--problem", c.problem, "Benchmark id")->check(CLI::IsMember(problem_ids()))->capture_default_str();
  app.add_option("--nx", c.nx, "Cells in x")->capture_default_str();
  app.add_option("--nv", c.nv, "Cells in v")->capture_default_str();
  app.add_option("--degree", c.degree, "Polynomial degree")->check(CLI::IsMember({0, 1, 2}))->capture_default_str();
  app.add_flag("--qc", c.qc, "Quadratic-curved upstream cells (degree 2 only)");
  app.add_option("--time-order", c.time_order, "Characteristic tracing order")
      ->check(CLI::IsMember({2, 3}))
      ->capture_default_str();
  app.add_flag("--efficient", c.efficient, "Low-degree prediction stages");
  app.add_option("--cfl", c.cfl, "CFL number")->capture_default_str();
  app.add_option("--tmax", c.t_max, "Final time")->capture_default_str();
  app.add_option("--pp-limiter", pp, "Positivity-preserving limiter")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--reverse-at", reverse_at, "Flip v at this time and run to 2T");
  app.add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  app.add_option("--snapshot-times", c.snapshot_times, "Times at which to write f")->delimiter(',');
  app.add_option("--diag-every", c.diag_every, "Diagnostic spacing (0: every step to t=1, then 0.1)");
  app.add_flag("--fit-rates", o.fit_rates, "Fit damping/growth rates from the E peaks");
  app.add_option("--study", study, "Convergence study")->check(CLI::IsMember({"spatial", "temporal"}));
  app.add_option("--meshes", o.meshes, "Mesh sizes n (n x n) for a spatial study")->delimiter(',');
  app.add_option("--cfls", o.cfls, "CFL numbers for a temporal study")->delimiter(',');
  app.add_option("--reference-cfl", o.reference_cfl, "CFL of the temporal reference run")->capture_default_str();
}

/// Parses argv into options. Throws CLI::ParseError (including help) for
/// malformed input and ConfigError for contradictory settings.
inline CliOptions parse_cli(int argc, const char* const* argv) {
  CliOptions o;
  CLI::App app{"Semi-Lagrangian DG Vlasov-Poisson solver"};
  std::string pp = "on", study;
  double reverse_at = 0.0;
  add_options(app, o, pp, reverse_at, study);
  app.parse(argc, argv);

  o.sim.pp_limiter = pp == "on";
  if (app.count("--reverse-at") > 0) o.sim.reverse_at = reverse_at;
  if (study == "spatial") o.study = StudyMode::spatial;
  if (study == "temporal") o.study = StudyMode::temporal;
  o.sim.validate();
  if (o.study == StudyMode::spatial && o.meshes.size() < 2) throw ConfigError("a spatial study needs at least two meshes");
  if (o.study == StudyMode::temporal && o.cfls.size() < 2) throw ConfigError("a temporal study needs at least two CFL numbers");
  if (o.study == StudyMode::spatial && !o.sim.reverse_at) o.sim.reverse_at = 0.5 * o.sim.t_max;
  return o;
}

inline CliOptions parse_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"sldg_vp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_cli(static_cast<int>(argv.size()), argv.data());
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// The resolved configuration in the same "key = value" format --config reads.
inline std::string config_echo(const SimConfig& c) {
  std::ostringstream s;
  s << "problem = \"" << c.problem << "\"\n"
    << "nx = " << c.nx << "\n"
    << "nv = " << c.nv << "\n"
    << "degree = " << c.degree << "\n"
    << "qc = " << (c.qc ? "true" : "false") << "\n"
    << "time-order = " << c.time_order << "\n"
    << "efficient = " << (c.efficient ? "true" : "false") << "\n"
    << "cfl = " << format_double(c.cfl) << "\n"
    << "tmax = " << format_double(c.t_max) << "\n"
    << "pp-limiter = \"" << (c.pp_limiter ? "on" : "off") << "\"\n"
    << "diag-every = " << format_double(c.diag_every) << "\n";
  if (c.reverse_at) s << "reverse-at = " << format_double(*c.reverse_at) << "\n";
  if (!c.snapshot_times.empty()) {
    s << "snapshot-times = [";
    for (std::size_t k = 0; k < c.snapshot_times.size(); ++k) s << (k ? ", " : "") << format_double(c.snapshot_times[k]);
    s << "]\n";
  }
  return s.str();
}

inline bool operator==(const SimConfig& a, const SimConfig& b) {
  return a.problem == b.problem && a.nx == b.nx && a.nv == b.nv && a.degree == b.degree && a.qc == b.qc &&
         a.time_order == b.time_order && a.efficient == b.efficient && a.cfl == b.cfl && a.t_max == b.t_max &&
         a.pp_limiter == b.pp_limiter && a.diag_every == b.diag_every && a.reverse_at == b.reverse_at &&
         a.snapshot_times == b.snapshot_times;
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Creates `dir` if needed and checks that files can be written there.
inline void prepare_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".write_test";
  {
    std::ofstream f(probe);
    if (!(f << "ok\n")) throw OutputError("output directory " + dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw OutputError("cannot open " + p.string() + " for writing");
  f << std::setprecision(17);
  return f;
}

inline const char* diagnostics_header() {
  return "t,e_l2,mass,l1,l2,energy,entropy,d_mass,d_l1,d_l2,d_energy,d_entropy";
}

inline void write_diagnostics_row(std::ostream& os, const DiagnosticsRecord& r) {
  os << r.t << ',' << r.e_l2 << ',' << r.mass << ',' << r.l1 << ',' << r.l2 << ',' << r.energy << ',' << r.entropy
     << ',' << r.d_mass << ',' << r.d_l1 << ',' << r.d_l2 << ',' << r.d_energy << ',' << r.d_entropy << '\n';
}

inline std::string snapshot_filename(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "f_t%g.dat", t);
  return buf;
}

/// "x v f" at every cell center, v fastest within each x column.
inline void write_snapshot(std::ostream& os, const Snapshot& s) {
  const PhaseMesh& m = s.f.mesh();
  os << "# t = " << s.t << "; f sampled at cell centers; columns: x v f\n";
  for (int i = 0; i < m.nx(); ++i)
    for (int j = 0; j < m.nv(); ++j)
      os << m.x_center(i) << ' ' << m.v_center(j) << ' '
         << eval_local(s.f.cell(m.linear(i, j)).data(), s.f.degree(), 0.0, 0.0) << '\n';
}

inline void write_rates(std::ostream& os, const Rates& r) {
  os << "gamma1 " << r.gamma1 << "  # slope of log ||E||_2 from peak 2 to peak 3\n";
  os << "gamma2 " << r.gamma2 << "  # slope from peak 10 to peak 16\n";
  os << "# peak t log_e\n";
  for (std::size_t k = 0; k < r.peaks.size(); ++k) os << "# " << k + 1 << ' ' << r.peaks[k].t << ' ' << r.peaks[k].log_e << '\n';
}

// ---------------------------------------------------------------------------
// Convergence studies
// ---------------------------------------------------------------------------

struct StudyRow {
  double param = 0.0;  // n for spatial studies, CFL for temporal ones
  double l2 = 0.0;
  double linf = 0.0;
  double order_l2 = std::nan("");
  double order_linf = std::nan("");
};

/// Spatial: forward to T, flip v, back to 2T on n x n meshes; errors against
/// the initial data. Temporal: run to t_max at each CFL and compare with a
/// same-mesh run at `reference_cfl`. Orders are log(error ratio) over
/// log(resolution ratio), with dt ~ CFL for the temporal case.
inline std::vector<StudyRow> convergence_study(const SimConfig& base, const ProblemSpec& problem, StudyMode mode,
                                               const std::vector<double>& params, double reference_cfl = 0.1,
                                               std::ostream* progress = nullptr) {
  if (params.size() < 2) throw ConfigError("convergence_study needs at least two resolutions");
  std::vector<StudyRow> rows;
  std::optional<DGField> reference;
  if (mode == StudyMode::temporal) {
    SimConfig c = base;
    c.cfl = reference_cfl;
    c.reverse_at.reset();
    c.snapshot_times.clear();
    reference = run(c, problem).final_field;
  }
  for (double p : params) {
    SimConfig c = base;
    c.snapshot_times.clear();
    StudyRow row;
    row.param = p;
    if (mode == StudyMode::spatial) {
      c.nx = c.nv = static_cast<int>(p);
      if (!c.reverse_at) c.reverse_at = 0.5 * c.t_max;
      const RunResult r = run(c, problem);
      row.l2 = *r.reversal_l2;
      row.linf = *r.reversal_linf;
    } else {
      c.cfl = p;
      c.reverse_at.reset();
      const RunResult r = run(c, problem);
      const PhaseMesh& m = r.final_field.mesh();
      row.l2 = l2_error(r.final_field, *reference) / std::sqrt(m.length_x() * 2.0 * m.v_max());
      row.linf = linf_error(r.final_field, *reference);
    }
    if (!rows.empty()) {
      const StudyRow& prev = rows.back();
      // Finer resolution means larger n but smaller CFL.
      const double ratio = mode == StudyMode::spatial ? std::log(p / prev.param) : std::log(prev.param / p);
      row.order_l2 = std::log(prev.l2 / row.l2) / ratio;
      row.order_linf = std::log(prev.linf / row.linf) / ratio;
    }
    if (progress) *progress << (mode == StudyMode::spatial ? "n = " : "cfl = ") << p << ": L2 " << row.l2 << '\n';
    rows.push_back(row);
  }
  return rows;
}

inline void write_study(std::ostream& os, StudyMode mode, const std::vector<StudyRow>& rows) {
  os << (mode == StudyMode::spatial ? "# n" : "# cfl") << " l2 order_l2 linf order_linf\n";
  for (const StudyRow& r : rows) {
    os << r.param << ' ' << r.l2 << ' ';
    if (std::isnan(r.order_l2)) os << "- "; else os << r.order_l2 << ' ';
    os << r.linf << ' ';
    if (std::isnan(r.order_linf)) os << "-"; else os << r.order_linf;
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

enum ExitCode { exit_ok = 0, exit_failure = 1, exit_usage = 2, exit_breakdown = 3 };

/// Full command-line program; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliOptions o;
  try {
    o = parse_cli(argc, argv);
  } catch (const CLI::CallForHelp&) {
    CliOptions dummy;
    CLI::App app{"Semi-Lagrangian DG Vlasov-Poisson solver"};
    std::string pp, study;
    double rev = 0.0;
    app.name("sldg_vp");
    add_options(app, dummy, pp, rev, study);
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_usage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_usage;
  }

  const std::filesystem::path dir(o.out_dir);
  try {
    prepare_output_dir(dir);
    open_output(dir / "config.txt") << config_echo(o.sim);
  } catch (const OutputError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_usage;
  }

  try {
    const ProblemSpec problem = problem_library(o.sim.problem);
    if (o.study != StudyMode::none) {
      std::vector<double> params;
      if (o.study == StudyMode::spatial) params.assign(o.meshes.begin(), o.meshes.end());
      else params = o.cfls;
      const auto rows = convergence_study(o.sim, problem, o.study, params, o.reference_cfl, &out);
      auto f = open_output(dir / "study.txt");
      write_study(f, o.study, rows);
      write_study(out, o.study, rows);
      return exit_ok;
    }

    auto csv = open_output(dir / "diagnostics.csv");
    csv << diagnostics_header() << '\n';
    RunCallbacks cb;
    cb.on_diagnostics = [&](const DiagnosticsRecord& r) { write_diagnostics_row(csv, r); };
    cb.on_snapshot = [&](const Snapshot& s) {
      auto f = open_output(dir / snapshot_filename(s.t));
      write_snapshot(f, s);
    };
    const RunResult res = run(o.sim, problem, cb);
    csv.flush();

    out << std::setprecision(6) << "steps " << res.stats.steps << ", final t " << res.series.back().t
        << ", mass deviation " << res.series.back().d_mass << "\n";
    if (res.reversal_l2) out << "reversal error: L2 " << *res.reversal_l2 << ", Linf " << *res.reversal_linf << "\n";
    if (o.fit_rates) {
      const Rates rates = fit_rates(res.series);
      auto f = open_output(dir / "rates.txt");
      write_rates(f, rates);
      out << "gamma1 " << rates.gamma1 << ", gamma2 " << rates.gamma2 << "\n";
    }
    return exit_ok;
  } catch (const DistortedCellError& e) {
    err << "numerical breakdown: " << e.what() << "\n";
    return exit_breakdown;
  } catch (const GeometryError& e) {
    err << "numerical breakdown: " << e.what() << "\n";
    return exit_breakdown;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_failure;
  }
}

}  // namespace sldg
