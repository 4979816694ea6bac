#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "sldg/geometry.hpp"
#include "sldg/mesh.hpp"
#include "sldg/poisson_ldg.hpp"

namespace sldg {

// ---------------------------------------------------------------------------
// Point-wise backward characteristic tracing. E at the new level is always
// sampled at the Eulerian point; E at t^n at the previous prediction.
// ---------------------------------------------------------------------------

inline Point trace_order1(Point q, const FieldState& sn, double dt) {
  return {q.x - q.v * dt, q.v - sn.eval_E(q.x) * dt};
}

inline Point trace_order2(Point q, Point p1, const FieldState& sn, const FieldState& s1, double dt) {
  return {q.x - 0.5 * (q.v + p1.v) * dt, q.v - 0.5 * (sn.eval_E(p1.x) + s1.eval_E(q.x)) * dt};
}

inline Point trace_order3(Point q, Point p2, const FieldState& sn, const FieldState& s2, double dt) {
  const double e_new = s2.eval_E(q.x);
  const double e_old = sn.eval_E(p2.x);
  const double d_new = s2.material_derivative_E(q.x, q.v);
  const double d_old = sn.material_derivative_E(p2.x, p2.v);
  const double h = 0.5 * dt * dt;
  return {q.x - q.v * dt + h * (2.0 / 3.0 * e_new + 1.0 / 3.0 * e_old),
          q.v - e_new * dt + h * (2.0 / 3.0 * d_new + 1.0 / 3.0 * d_old)};
}

// ---------------------------------------------------------------------------
// Global node lattice: corners, edge midpoints and centers of every cell, at
// x = p dx/2 (p = 0..2nx-1, periodic) and v = -v_max + r dv/2. Optional ghost
// cell rows beyond the velocity domain are traced as well. Every node is
// traced once, so neighboring upstream cells share vertices bitwise.
// ---------------------------------------------------------------------------

class NodeLattice {
 public:
  NodeLattice() = default;
  NodeLattice(const PhaseMesh& mesh, int ghost_rows = 0)
      : mesh_(mesh), ghost_(ghost_rows), np_(2 * mesh.nx()), rmin_(-2 * ghost_rows), nr_(2 * mesh.nv() + 4 * ghost_rows + 1) {
    x_.resize(static_cast<std::size_t>(np_) * nr_);
    v_.resize(x_.size());
  }

  const PhaseMesh& mesh() const { return mesh_; }
  int ghost_rows() const { return ghost_; }
  int np() const { return np_; }
  int r_min() const { return rmin_; }
  int r_max() const { return rmin_ + nr_ - 1; }

  double x_node(int p) const { return 0.5 * p * mesh_.dx(); }
  double v_node(int r) const { return -mesh_.v_max() + 0.5 * r * mesh_.dv(); }
  Point source(int p, int r) const { return {x_node(p), v_node(r)}; }

  std::size_t index(int p, int r) const { return static_cast<std::size_t>(p) * nr_ + (r - rmin_); }

  /// Traced position of node (p, r); p == np() is the periodic image of p == 0.
  Point traced(int p, int r) const {
    if (p == np_) {
      const std::size_t k = index(0, r);
      return {x_[k] + mesh_.length_x(), v_[k]};
    }
    const std::size_t k = index(p, r);
    return {x_[k], v_[k]};
  }
  void set(int p, int r, Point q) {
    const std::size_t k = index(p, r);
    x_[k] = q.x;
    v_[k] = q.v;
  }

  /// Identity (t = t^{n+1}) positions.
  void reset_to_sources() {
    for (int p = 0; p < np_; ++p)
      for (int r = rmin_; r <= r_max(); ++r) set(p, r, source(p, r));
  }

 private:
  PhaseMesh mesh_;
  int ghost_ = 0;
  int np_ = 0;
  int rmin_ = 0;
  int nr_ = 0;
  std::vector<double> x_, v_;
};

/// Column-cached field values at Eulerian nodes.
struct ColumnCache {
  std::vector<double> E, J, rho;
  void fill(const NodeLattice& lat, const FieldState& s, bool moments) {
    E.resize(lat.np());
    J.resize(lat.np());
    rho.resize(lat.np());
    for (int p = 0; p < lat.np(); ++p) {
      const double x = lat.x_node(p);
      E[p] = s.eval_E(x);
      J[p] = moments ? s.J(x) : 0.0;
      rho[p] = moments ? s.rho(x) : 0.0;
    }
  }
};

inline void trace_lattice_order1(NodeLattice& out, const FieldState& sn, double dt) {
  ColumnCache c;
  c.fill(out, sn, false);
  for (int p = 0; p < out.np(); ++p)
    for (int r = out.r_min(); r <= out.r_max(); ++r) {
      const Point q = out.source(p, r);
      out.set(p, r, {q.x - q.v * dt, q.v - c.E[p] * dt});
    }
}

inline void trace_lattice_order2(NodeLattice& out, const NodeLattice& first, const FieldState& sn,
                                 const FieldState& s1, double dt) {
  ColumnCache c;
  c.fill(out, s1, false);
  for (int p = 0; p < out.np(); ++p)
    for (int r = out.r_min(); r <= out.r_max(); ++r) {
      const Point q = out.source(p, r);
      const Point p1 = first.traced(p, r);
      out.set(p, r, {q.x - 0.5 * (q.v + p1.v) * dt, q.v - 0.5 * (sn.eval_E(p1.x) + c.E[p]) * dt});
    }
}

inline void trace_lattice_order3(NodeLattice& out, const NodeLattice& second, const FieldState& sn,
                                 const FieldState& s2, double dt) {
  ColumnCache c;
  c.fill(out, s2, true);
  const double h = 0.5 * dt * dt;
  for (int p = 0; p < out.np(); ++p)
    for (int r = out.r_min(); r <= out.r_max(); ++r) {
      const Point q = out.source(p, r);
      const Point p2 = second.traced(p, r);
      const double e_old = sn.eval_E(p2.x);
      const double d_new = s2.jbar0 - c.J[p] + q.v * c.rho[p];
      const double d_old = sn.material_derivative_E(p2.x, p2.v);
      out.set(p, r,
              {q.x - q.v * dt + h * (2.0 / 3.0 * c.E[p] + 1.0 / 3.0 * e_old),
               q.v - c.E[p] * dt + h * (2.0 / 3.0 * d_new + 1.0 / 3.0 * d_old)});
    }
}

// ---------------------------------------------------------------------------
// Upstream cells
// ---------------------------------------------------------------------------

enum class UpstreamMode { quad, qc };

/// Traced image of an Eulerian cell. Points use the 3x3 layout
///   c7 c8 c9
///   c4 c5 c6
///   c1 c2 c3
/// stored row-major from the bottom (pts[0] = c1). Edges run counterclockwise:
/// bottom c1->c3, right c3->c9, top c9->c7, left c7->c1.
struct UpstreamCell {
  CellIndex cell;
  UpstreamMode mode = UpstreamMode::quad;
  std::array<Point, 9> pts{};
  std::array<Edge, 4> edges{};
  double area = 0.0;

  Point corner(int k) const {
    static constexpr int idx[4] = {0, 2, 8, 6};
    return pts[idx[k]];
  }
};

inline bool segments_cross(Point a0, Point a1, Point b0, Point b1) {
  auto orient = [](Point p, Point q, Point r) { return (q.x - p.x) * (r.v - p.v) - (q.v - p.v) * (r.x - p.x); };
  const double d1 = orient(b0, b1, a0), d2 = orient(b0, b1, a1);
  const double d3 = orient(a0, a1, b0), d4 = orient(a0, a1, b1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

/// Whether two edges meet away from their endpoints. f is expressed in e's
/// frame, where e is eta = K (xi^2 - 1); sign changes of the residual along f
/// inside |xi| < 1 are crossings. Samples are uniform in the interior and
/// geometrically graded toward both ends of f, where thin cells cross right
/// next to a shared corner.
inline bool edges_cross(const Edge& e, const Edge& f) {
  auto residual = [&](double t, double& xi) {
    const auto l = e.to_local(f.at(t));
    xi = l[0];
    return l[1] - e.K * (l[0] * l[0] - 1.0);
  };
  constexpr int n = 64, graded = 30;
  std::array<double, n - 1 + 2 * (graded - 5)> ts;
  std::size_t m = 0;
  for (int k = graded; k > 5; --k) ts[m++] = -1.0 + std::ldexp(1.0, -k);
  for (int k = 1; k < n; ++k) ts[m++] = -1.0 + 2.0 * k / n;
  for (int k = 6; k <= graded; ++k) ts[m++] = 1.0 - std::ldexp(1.0, -k);

  double xi_prev = 0.0, t_prev = ts[0];
  double r_prev = residual(t_prev, xi_prev);
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const double t = ts[k];
    double xi = 0.0;
    const double r = residual(t, xi);
    if ((r < 0) != (r_prev < 0)) {
      double lo = t_prev, hi = t, xm = 0.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((residual(mid, xm) < 0) == (r_prev < 0)) lo = mid; else hi = mid;
      }
      residual(0.5 * (lo + hi), xm);
      if (std::abs(xm) < 1.0) return true;
    }
    t_prev = t;
    r_prev = r;
  }
  return false;
}

/// Cheap exclusion test. A parabolic edge stays within |K| |chord| / 2 of its
/// chord and, seen from either endpoint, inside a cone of half-angle
/// atan(2 |K|) about the chord.
inline bool edges_may_cross(const Edge& e, const Edge& f, bool opposite) {
  const double he = std::hypot(e.a, e.b), hf = std::hypot(f.a, f.b);
  if (opposite) {
    auto seg_dist = [](Point p, Point a, Point b) {
      const double dx = b.x - a.x, dv = b.v - a.v, l2 = dx * dx + dv * dv;
      const double t = l2 > 0.0 ? std::clamp(((p.x - a.x) * dx + (p.v - a.v) * dv) / l2, 0.0, 1.0) : 0.0;
      return std::hypot(p.x - a.x - t * dx, p.v - a.v - t * dv);
    };
    const double d = std::min(std::min(seg_dist(e.p0, f.p0, f.p1), seg_dist(e.p1, f.p0, f.p1)),
                              std::min(seg_dist(f.p0, e.p0, e.p1), seg_dist(f.p1, e.p0, e.p1)));
    return d <= std::abs(e.K) * he + std::abs(f.K) * hf;
  }
  // Adjacent: rays from the shared corner along each chord.
  Point c, re, rf;
  if (e.p1.x == f.p0.x && e.p1.v == f.p0.v) {
    c = e.p1;
    re = {e.p0.x - c.x, e.p0.v - c.v};
    rf = {f.p1.x - c.x, f.p1.v - c.v};
  } else {
    c = e.p0;
    re = {e.p1.x - c.x, e.p1.v - c.v};
    rf = {f.p0.x - c.x, f.p0.v - c.v};
  }
  const double angle = std::atan2(std::abs(re.x * rf.v - re.v * rf.x), re.x * rf.x + re.v * rf.v);
  return angle <= std::atan(2.0 * std::abs(e.K)) + std::atan(2.0 * std::abs(f.K));
}

/// Assembles edges from the nine traced points and validates the geometry.
inline void finalize_upstream(UpstreamCell& u, const PhaseMesh& mesh, long* fallbacks) {
  const auto& c = u.pts;
  if (u.mode == UpstreamMode::qc) {
    u.edges = {make_curved_edge(c[0], c[1], c[2], fallbacks), make_curved_edge(c[2], c[5], c[8], fallbacks),
               make_curved_edge(c[8], c[7], c[6], fallbacks), make_curved_edge(c[6], c[3], c[0], fallbacks)};
  } else {
    u.edges = {make_straight_edge(c[0], c[2]), make_straight_edge(c[2], c[8]), make_straight_edge(c[8], c[6]),
               make_straight_edge(c[6], c[0])};
  }
  u.area = signed_area(u.edges);
  if (!(u.area > 0.0)) throw DistortedCellError(u.cell, "non-positive signed area");
  if (segments_cross(c[0], c[2], c[8], c[6]) || segments_cross(c[2], c[8], c[6], c[0])) {
    throw DistortedCellError(u.cell, "self-intersecting corners");
  }
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      const Edge &ea = u.edges[a], &eb = u.edges[b];
      if (!ea.curved() && !eb.curved()) continue;
      if (!edges_may_cross(ea, eb, b - a == 2)) continue;
      if (edges_cross(ea.curved() ? ea : eb, ea.curved() ? eb : ea)) {
        throw DistortedCellError(u.cell, "self-intersecting edges");
      }
    }
  double xmin = c[0].x, xmax = c[0].x, vmin = c[0].v, vmax = c[0].v;
  for (const Point& p : c) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    vmin = std::min(vmin, p.v);
    vmax = std::max(vmax, p.v);
  }
  if (xmax - xmin > mesh.length_x() || vmax - vmin > 2.0 * mesh.v_max()) {
    throw DistortedCellError(u.cell, "span exceeds the mesh extent");
  }
}

/// Upstream cell of Eulerian cell (i, j) from a traced lattice. Row j may be a
/// ghost row within the lattice range.
inline UpstreamCell build_upstream(const NodeLattice& lat, int i, int j, UpstreamMode mode, long* fallbacks = nullptr) {
  UpstreamCell u;
  u.cell = {i, j};
  u.mode = mode;
  for (int lr = 0; lr < 3; ++lr)
    for (int lp = 0; lp < 3; ++lp) u.pts[lr * 3 + lp] = lat.traced(2 * i + lp, 2 * j + lr);
  finalize_upstream(u, lat.mesh(), fallbacks);
  return u;
}

/// Upstream cell from explicit points in the 3x3 layout (tests, tools).
inline UpstreamCell build_upstream_from_points(const PhaseMesh& mesh, CellIndex cell, const std::array<Point, 9>& pts,
                                               UpstreamMode mode, long* fallbacks = nullptr) {
  UpstreamCell u;
  u.cell = cell;
  u.mode = mode;
  u.pts = pts;
  finalize_upstream(u, mesh, fallbacks);
  return u;
}

/// Four-corner quadrilateral; edge midpoints and center are chord midpoints.
inline UpstreamCell build_upstream_quad(const PhaseMesh& mesh, CellIndex cell, const std::array<Point, 4>& corners) {
  auto mid = [](Point a, Point b) { return Point{0.5 * (a.x + b.x), 0.5 * (a.v + b.v)}; };
  const Point c1 = corners[0], c3 = corners[1], c9 = corners[2], c7 = corners[3];
  const std::array<Point, 9> pts{c1,          mid(c1, c3), c3,          mid(c1, c7), mid(mid(c1, c9), mid(c3, c7)),
                                 mid(c3, c9), c7,          mid(c7, c9), c9};
  return build_upstream_from_points(mesh, cell, pts, UpstreamMode::quad);
}

}  // namespace sldg
