#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "sldg/geometry.hpp"
#include "sldg/mesh.hpp"
#include "sldg/quadrature.hpp"
#include "sldg/tracer.hpp"

namespace sldg {

/// Piece of an upstream edge lying inside one background cell. The cell
/// index is unwrapped in x and may lie outside the velocity rows.
struct OuterPiece {
  int edge = 0;
  double s0 = -1.0, s1 = 1.0;  // edge parameter interval, in travel order
  int ci = 0, cj = 0;
};

/// Grid-aligned piece inside the upstream region, traversed from t0 to t1.
/// Vertical pieces lie on x = line and run in v; horizontal ones the reverse.
struct InnerPiece {
  bool vertical = true;
  double line = 0.0;
  double t0 = 0.0, t1 = 0.0;
  int ci = 0, cj = 0;
};

struct Decomposition {
  std::vector<OuterPiece> outer;
  std::vector<InnerPiece> inner;
  void clear() {
    outer.clear();
    inner.clear();
  }
};

struct ClipOptions {
  /// Horizontal inner pieces integrate to zero with the remap kernel, so they
  /// are only produced on request.
  bool horizontal_inner = false;
  /// Cross-check the sub-area sum against the upstream area.
  bool check_area = true;
};

/// Splits upstream cells along the background grid.
class Clipper {
 public:
  explicit Clipper(const PhaseMesh& mesh, ClipOptions opt = {})
      : mesh_(mesh), opt_(opt), tol_(1e-12 * (mesh.dx() + mesh.dv())) {}

  double tolerance() const { return tol_; }

  void decompose(const UpstreamCell& u, Decomposition& out) {
    out.clear();
    vtouch_.clear();
    htouch_.clear();
    vcol_.clear();
    hcol_.clear();
    for (int e = 0; e < 4; ++e) split_edge(u.edges[e], e, out);
    for (const Edge& e : u.edges) {
      const Point p = e.p0;
      const int i = static_cast<int>(std::lround(p.x / mesh_.dx()));
      if (std::abs(p.x - mesh_.x_face(i)) <= tol_) vtouch_.push_back({i, p.v});
      const int j = static_cast<int>(std::lround((p.v + mesh_.v_max()) / mesh_.dv()));
      if (std::abs(p.v - mesh_.v_face(j)) <= tol_) htouch_.push_back({j, p.x});
    }
    inner_vertical(u, out);
    if (opt_.horizontal_inner) inner_horizontal(u, out);
    if (opt_.check_area) {
      const double total = decomposition_area(u, out);
      const double scale = std::max(std::abs(u.area), mesh_.cell_area());
      if (!(std::abs(total - u.area) <= 1e-9 * scale)) {
        throw GeometryError(u.cell, "sub-areas do not tile the upstream cell");
      }
    }
  }

  Decomposition decompose(const UpstreamCell& u) {
    Decomposition d;
    decompose(u, d);
    return d;
  }

  /// Crossing-number test against the upstream boundary, ray towards +x.
  bool inside(const UpstreamCell& u, double X, double V) const {
    int count = 0;
    for (const Edge& e : u.edges) {
      double splits[3] = {-1.0, 1.0, 1.0};
      int ns = 2;
      const double vc = e.v_critical();
      if (vc > -1.0 && vc < 1.0) {
        splits[1] = vc;
        splits[2] = 1.0;
        ns = 3;
      }
      for (int k = 0; k + 1 < ns; ++k) {
        const double sa = splits[k], sb = splits[k + 1];
        const Point pa = e.at(sa), pb = e.at(sb);
        if (!((pa.v <= V && V < pb.v) || (pb.v <= V && V < pa.v))) continue;
        double xc;
        if (!e.curved()) {
          xc = pa.x + (V - pa.v) / (pb.v - pa.v) * (pb.x - pa.x);
        } else {
          double lo = std::min(pa.x, pb.x), hi = std::max(pa.x, pb.x);
          const double xcr = e.x_critical();
          if (xcr > sa && xcr < sb) {
            const double xm = e.at(xcr).x;
            lo = std::min(lo, xm);
            hi = std::max(hi, xm);
          }
          if (lo > X) {
            ++count;
            continue;
          }
          if (hi < X) continue;
          double a = sa, b = sb;
          const bool increasing = pb.v > pa.v;
          for (int it = 0; it < 80; ++it) {
            const double m = 0.5 * (a + b);
            if ((e.at(m).v < V) == increasing) a = m; else b = m;
          }
          xc = e.at(0.5 * (a + b)).x;
        }
        if (xc > X) ++count;
      }
    }
    return count % 2 == 1;
  }

 private:
  struct Touch {
    int line;
    double t;
  };
  struct Collinear {
    int line;
    double lo, hi;
  };

  void split_edge(const Edge& e, int edge_id, Decomposition& out) {
    // Bounding box including interior extrema of a parabola.
    Point p0 = e.p0, p1 = e.p1;
    double xlo = std::min(p0.x, p1.x), xhi = std::max(p0.x, p1.x);
    double vlo = std::min(p0.v, p1.v), vhi = std::max(p0.v, p1.v);
    if (e.curved()) {
      const double xc = e.x_critical(), vc = e.v_critical();
      if (xc > -1.0 && xc < 1.0) {
        xlo = std::min(xlo, e.at(xc).x);
        xhi = std::max(xhi, e.at(xc).x);
      }
      if (vc > -1.0 && vc < 1.0) {
        vlo = std::min(vlo, e.at(vc).v);
        vhi = std::max(vhi, e.at(vc).v);
      }
    }
    params_.clear();
    params_.push_back(-1.0);
    params_.push_back(1.0);
    const double dx = mesh_.dx(), dv = mesh_.dv(), vmax = mesh_.v_max();
    for (int i = static_cast<int>(std::ceil((xlo - tol_) / dx)); i <= static_cast<int>(std::floor((xhi + tol_) / dx)); ++i) {
      const double X = mesh_.x_face(i);
      const Roots r = intersect_edge_x(e, X);
      for (int k = 0; k < r.count; ++k) {
        params_.push_back(r.r[k]);
        vtouch_.push_back({i, e.at(r.r[k]).v});
      }
    }
    for (int j = static_cast<int>(std::ceil((vlo + vmax - tol_) / dv)); j <= static_cast<int>(std::floor((vhi + vmax + tol_) / dv)); ++j) {
      const double V = mesh_.v_face(j);
      const Roots r = intersect_edge_v(e, V);
      for (int k = 0; k < r.count; ++k) {
        params_.push_back(r.r[k]);
        htouch_.push_back({j, e.at(r.r[k]).x});
      }
    }
    std::sort(params_.begin(), params_.end());

    // Merge parameters whose points coincide; endpoints win.
    merged_.clear();
    for (double s : params_) {
      if (!merged_.empty()) {
        const Point a = e.at(merged_.back()), b = e.at(s);
        if (std::abs(a.x - b.x) <= tol_ && std::abs(a.v - b.v) <= tol_) {
          if (s == 1.0) merged_.back() = 1.0;
          continue;
        }
      }
      merged_.push_back(s);
    }
    if (merged_.front() != -1.0) merged_.front() = -1.0;
    if (merged_.back() != 1.0) merged_.back() = 1.0;

    for (std::size_t k = 0; k + 1 < merged_.size(); ++k) {
      OuterPiece piece{edge_id, merged_[k], merged_[k + 1], 0, 0};
      const Point a = e.at(piece.s0), b = e.at(piece.s1);
      const Point m = e.at(0.5 * (piece.s0 + piece.s1));
      const int li = static_cast<int>(std::lround(m.x / dx));
      const int lj = static_cast<int>(std::lround((m.v + vmax) / dv));
      const double X = mesh_.x_face(li), V = mesh_.v_face(lj);
      if (!e.curved() && std::abs(a.x - X) <= tol_ && std::abs(b.x - X) <= tol_) {
        // Runs along x = X: interior (left of travel) decides the owner.
        piece.ci = b.v > a.v ? li - 1 : li;
        piece.cj = mesh_.row_of(m.v);
        vcol_.push_back({li, std::min(a.v, b.v), std::max(a.v, b.v)});
        // Split the line at the run ends so the skip test sees the run alone.
        vtouch_.push_back({li, a.v});
        vtouch_.push_back({li, b.v});
      } else if (!e.curved() && std::abs(a.v - V) <= tol_ && std::abs(b.v - V) <= tol_) {
        piece.ci = mesh_.column_of(m.x);
        piece.cj = b.x > a.x ? lj : lj - 1;
        hcol_.push_back({lj, std::min(a.x, b.x), std::max(a.x, b.x)});
        htouch_.push_back({lj, a.x});
        htouch_.push_back({lj, b.x});
      } else {
        piece.ci = mesh_.column_of(m.x);
        piece.cj = mesh_.row_of(m.v);
      }
      out.outer.push_back(piece);
    }
  }

  static bool covered(const std::vector<Collinear>& c, int line, double t) {
    for (const Collinear& s : c)
      if (s.line == line && t > s.lo && t < s.hi) return true;
    return false;
  }

  template <class Emit>
  void inner_on_lines(std::vector<Touch>& touch, const std::vector<Collinear>& col, Emit&& emit,
                      const UpstreamCell& u, bool vertical) {
    std::sort(touch.begin(), touch.end(),
              [](const Touch& a, const Touch& b) { return a.line != b.line ? a.line < b.line : a.t < b.t; });
    std::size_t k = 0;
    while (k < touch.size()) {
      std::size_t end = k;
      while (end < touch.size() && touch[end].line == touch[k].line) ++end;
      const int line = touch[k].line;
      pts_.clear();
      for (std::size_t q = k; q < end; ++q)
        if (pts_.empty() || touch[q].t - pts_.back() > tol_) pts_.push_back(touch[q].t);
      for (std::size_t q = 0; q + 1 < pts_.size(); ++q) {
        const double ta = pts_[q], tb = pts_[q + 1];
        const double tm = 0.5 * (ta + tb);
        if (covered(col, line, tm)) continue;
        const bool in = vertical ? inside(u, mesh_.x_face(line), tm) : inside_h(u, tm, mesh_.v_face(line));
        if (in) emit(line, ta, tb);
      }
      k = end;
    }
  }

  void inner_vertical(const UpstreamCell& u, Decomposition& out) {
    const double dv = mesh_.dv(), vmax = mesh_.v_max();
    inner_on_lines(vtouch_, vcol_, [&](int line, double ta, double tb) {
      const double X = mesh_.x_face(line);
      double start = ta;
      int j = static_cast<int>(std::floor((ta + vmax) / dv));
      while (tb - start > tol_) {
        const double stop = std::min(tb, mesh_.v_face(j + 1));
        if (stop - start > tol_) {
          const int row = mesh_.row_of(0.5 * (start + stop));
          out.inner.push_back({true, X, start, stop, line - 1, row});
          out.inner.push_back({true, X, stop, start, line, row});
        }
        start = std::max(start, stop);
        ++j;
      }
    }, u, true);
  }

  void inner_horizontal(const UpstreamCell& u, Decomposition& out) {
    const double dx = mesh_.dx();
    inner_on_lines(htouch_, hcol_, [&](int line, double ta, double tb) {
      const double V = mesh_.v_face(line);
      double start = ta;
      int i = static_cast<int>(std::floor(ta / dx));
      while (tb - start > tol_) {
        const double stop = std::min(tb, mesh_.x_face(i + 1));
        if (stop - start > tol_) {
          const int col = mesh_.column_of(0.5 * (start + stop));
          out.inner.push_back({false, V, stop, start, col, line - 1});  // top of the lower cell, leftwards
          out.inner.push_back({false, V, start, stop, col, line});      // bottom of the upper cell, rightwards
        }
        start = std::max(start, stop);
        ++i;
      }
    }, u, false);
  }

  /// Point-in-region for points on horizontal grid lines; same ray test.
  bool inside_h(const UpstreamCell& u, double X, double V) const { return inside(u, X, V); }

  double decomposition_area(const UpstreamCell& u, const Decomposition& d) const;

  PhaseMesh mesh_;
  ClipOptions opt_;
  double tol_;
  std::vector<double> params_, merged_, pts_;
  std::vector<Touch> vtouch_, htouch_;
  std::vector<Collinear> vcol_, hcol_;
};

/// int (x - x_L) dv over one piece, x_L the owner's left face: the piece's
/// contribution to its sub-area's area.
inline double piece_area(const UpstreamCell& u, const OuterPiece& p, const PhaseMesh& mesh) {
  const Edge& e = u.edges[p.edge];
  const double xl = mesh.x_face(p.ci);
  if (!e.curved()) {
    const Point a = e.at(p.s0), b = e.at(p.s1);
    return (0.5 * (a.x + b.x) - xl) * (b.v - a.v);
  }
  const GaussRule& g = gauss_legendre(2);
  const double h = 0.5 * (p.s1 - p.s0);
  double s = 0.0;
  for (int q = 0; q < g.size(); ++q) {
    const double xi = p.s0 + h * (1.0 + g.nodes[q]);
    s += g.weights[q] * (e.at(xi).x - xl) * e.tangent(xi).v;
  }
  return s * h;
}

inline double piece_area(const InnerPiece& p, const PhaseMesh& mesh) {
  return p.vertical ? (p.line - mesh.x_face(p.ci)) * (p.t1 - p.t0) : 0.0;
}

inline double Clipper::decomposition_area(const UpstreamCell& u, const Decomposition& d) const {
  double s = 0.0;
  for (const OuterPiece& p : d.outer) s += piece_area(u, p, mesh_);
  for (const InnerPiece& p : d.inner) s += piece_area(p, mesh_);
  return s;
}

/// Area of each sub-area keyed by unwrapped owner cell.
inline std::map<std::pair<int, int>, double> subarea_areas(const UpstreamCell& u, const Decomposition& d,
                                                           const PhaseMesh& mesh) {
  std::map<std::pair<int, int>, double> out;
  for (const OuterPiece& p : d.outer) out[{p.ci, p.cj}] += piece_area(u, p, mesh);
  for (const InnerPiece& p : d.inner) out[{p.ci, p.cj}] += piece_area(p, mesh);
  return out;
}

}  // namespace sldg
