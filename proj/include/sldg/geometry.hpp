#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sldg/mesh.hpp"

namespace sldg {

struct Point {
  double x = 0.0;
  double v = 0.0;
};

/// Upstream cell is too deformed for the remap; a smaller time step helps.
class DistortedCellError : public std::runtime_error {
 public:
  DistortedCellError(CellIndex c, const std::string& what)
      : std::runtime_error("distorted upstream cell (" + std::to_string(c.i) + "," + std::to_string(c.j) +
                           "): " + what + "; use a smaller time step"),
        cell(c) {}
  CellIndex cell;
};

/// Clipping produced an inconsistent decomposition.
class GeometryError : public std::runtime_error {
 public:
  GeometryError(CellIndex c, const std::string& what)
      : std::runtime_error("geometry error in upstream cell (" + std::to_string(c.i) + "," + std::to_string(c.j) +
                           "): " + what + "; use a smaller time step"),
        cell(c) {}
  CellIndex cell;
};

// ---------------------------------------------------------------------------
// Edge in a local frame. With a = (x3 - x1)/2, b = (v3 - v1)/2 and (cx, cv)
// the chord midpoint,
//   x = a xi + b eta + cx,   v = b xi - a eta + cv,
// so the endpoints sit at (xi, eta) = (-1, 0) and (1, 0). A curved edge is the
// parabola eta = K (xi^2 - 1); straight edges have K = 0.
// ---------------------------------------------------------------------------

struct Edge {
  Point p0, p1;
  double a = 0, b = 0, cx = 0, cv = 0, K = 0;

  Point at(double xi) const {
    if (xi == -1.0) return p0;
    if (xi == 1.0) return p1;
    const double eta = K * (xi * xi - 1.0);
    return {a * xi + b * eta + cx, b * xi - a * eta + cv};
  }
  /// d(x, v)/d(xi).
  Point tangent(double xi) const { return {a + 2.0 * b * K * xi, b - 2.0 * a * K * xi}; }

  /// Local coordinates of a physical point.
  std::array<double, 2> to_local(Point p) const {
    const double n = a * a + b * b;
    const double dx = p.x - cx, dv = p.v - cv;
    return {(a * dx + b * dv) / n, (b * dx - a * dv) / n};
  }

  bool curved() const { return K != 0.0; }

  /// Signed area between the chord and the curve, positive when the curve
  /// bulges to the right of the direction of travel.
  double bulge_area() const { return -4.0 / 3.0 * K * (a * a + b * b); }

  /// Critical parameter of x(xi) or v(xi), NaN when absent.
  double x_critical() const { return (K != 0.0 && b != 0.0) ? -a / (2.0 * b * K) : std::nan(""); }
  double v_critical() const { return (K != 0.0 && a != 0.0) ? b / (2.0 * a * K) : std::nan(""); }
};

inline Edge make_straight_edge(Point p0, Point p1) {
  Edge e;
  e.p0 = p0;
  e.p1 = p1;
  e.a = 0.5 * (p1.x - p0.x);
  e.b = 0.5 * (p1.v - p0.v);
  e.cx = 0.5 * (p0.x + p1.x);
  e.cv = 0.5 * (p0.v + p1.v);
  return e;
}

/// Parabolic edge through p0, mid and p1. When mid maps outside the open
/// interval |xi| < 1 the edge degenerates to its chord and `fallbacks` is
/// incremented.
inline Edge make_curved_edge(Point p0, Point mid, Point p1, long* fallbacks = nullptr) {
  Edge e = make_straight_edge(p0, p1);
  const auto [xi2, eta2] = e.to_local(mid);
  if (!(std::abs(xi2) < 1.0)) {
    if (fallbacks) ++*fallbacks;
    return e;
  }
  e.K = eta2 / (xi2 * xi2 - 1.0);
  return e;
}

// ---------------------------------------------------------------------------
// Quadratic roots, branch-stable form with an epsilon guard on A and B.
// ---------------------------------------------------------------------------

inline constexpr double kQuadraticEpsilon = 1e-13;

struct Roots {
  int count = 0;
  std::array<double, 2> r{};
};

inline Roots solve_quadratic(double A, double B, double C) {
  Roots out;
  if (std::abs(A) < kQuadraticEpsilon) {
    if (std::abs(B) >= kQuadraticEpsilon) out.r[out.count++] = -C / B;
    return out;
  }
  const double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) return out;
  const double gamma = B >= 0.0 ? 1.0 : -1.0;
  const double t = -B - gamma * std::sqrt(disc);
  if (t == 0.0) {
    // B == 0 and disc == 0, hence C == 0: double root at the origin.
    out.r[out.count++] = 0.0;
    return out;
  }
  out.r[out.count++] = 2.0 * C / t;
  if (disc > 0.0) out.r[out.count++] = t / (2.0 * A);
  return out;
}

/// Parameters xi in [-1, 1] where the edge meets x = X.
inline Roots intersect_edge_x(const Edge& e, double X) {
  Roots raw;
  const double K = e.K;
  if (std::abs(e.a) <= std::abs(e.b)) {
    if (e.b == 0.0) return {};
    raw = solve_quadratic(K, e.a / e.b, -(X - e.cx) / e.b - K);
  } else {
    const double d = (X - e.cx) / e.a, r = e.b / e.a;
    raw = solve_quadratic(K * r * r, -1.0 - 2.0 * K * d * r, K * (d * d - 1.0));
    for (int k = 0; k < raw.count; ++k) raw.r[k] = d - r * raw.r[k];
  }
  Roots out;
  for (int k = 0; k < raw.count; ++k)
    if (raw.r[k] >= -1.0 && raw.r[k] <= 1.0) out.r[out.count++] = raw.r[k];
  return out;
}

/// Parameters xi in [-1, 1] where the edge meets v = V.
inline Roots intersect_edge_v(const Edge& e, double V) {
  Roots raw;
  const double K = e.K;
  if (std::abs(e.b) <= std::abs(e.a)) {
    if (e.a == 0.0) return {};
    raw = solve_quadratic(K, -e.b / e.a, (V - e.cv) / e.a - K);
  } else {
    const double d = (V - e.cv) / e.b, r = e.a / e.b;
    raw = solve_quadratic(K * r * r, 2.0 * K * d * r - 1.0, K * (d * d - 1.0));
    for (int k = 0; k < raw.count; ++k) raw.r[k] = d + r * raw.r[k];
  }
  Roots out;
  for (int k = 0; k < raw.count; ++k)
    if (raw.r[k] >= -1.0 && raw.r[k] <= 1.0) out.r[out.count++] = raw.r[k];
  return out;
}

/// Straight segment p0 -> p1 against an axis-aligned line. Returns the
/// segment parameter t in [0, 1], or a negative value when there is no
/// transversal crossing (collinear segments report none).
inline double intersect_segment_x(Point p0, Point p1, double X) {
  const double d = p1.x - p0.x;
  if (d == 0.0) return -1.0;
  const double t = (X - p0.x) / d;
  return (t >= 0.0 && t <= 1.0) ? t : -1.0;
}

inline double intersect_segment_v(Point p0, Point p1, double V) {
  const double d = p1.v - p0.v;
  if (d == 0.0) return -1.0;
  const double t = (V - p0.v) / d;
  return (t >= 0.0 && t <= 1.0) ? t : -1.0;
}

/// Signed area of a closed chain of edges: shoelace over the endpoints plus
/// the parabolic segments.
template <class Edges>
double signed_area(const Edges& edges) {
  double s = 0.0;
  for (const Edge& e : edges) {
    s += 0.5 * (e.p0.x * e.p1.v - e.p1.x * e.p0.v);
    s += e.bulge_area();
  }
  return s;
}

}  // namespace sldg
