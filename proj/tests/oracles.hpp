#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner: brute-force quadrature, bisection root finding, and
// helpers that build traced node sets from explicit maps.

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "sldg/remap.hpp"

namespace oracle {

using sldg::Point;
using Map = std::function<Point(Point)>;
using Integrand = std::function<double(double, double)>;

inline void trace_with(sldg::NodeLattice& lat, const Map& map) {
  for (int p = 0; p < lat.np(); ++p)
    for (int r = lat.r_min(); r <= lat.r_max(); ++r) lat.set(p, r, map(lat.source(p, r)));
}

inline sldg::DGField random_field(const sldg::PhaseMesh& mesh, int k, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n01;
  sldg::DGField f(mesh, k);
  for (double& c : f.data()) c = n01(rng);
  return f;
}

/// Integral of g over a triangle by a collapsed tensor Gauss rule; exact for
/// polynomials of degree up to 2n - 2.
inline double triangle_integral(Point a, Point b, Point c, const Integrand& g, int n = 8) {
  const sldg::GaussRule& r = sldg::gauss_legendre(n);
  const double jac = std::abs((b.x - a.x) * (c.v - a.v) - (c.x - a.x) * (b.v - a.v));
  double s = 0.0;
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      const double u = 0.5 * (1.0 + r.nodes[p]), w = 0.5 * (1.0 + r.nodes[q]);
      const double s1 = u, s2 = (1.0 - u) * w;  // barycentric weights of b and c
      const double x = a.x + s1 * (b.x - a.x) + s2 * (c.x - a.x);
      const double v = a.v + s1 * (b.v - a.v) + s2 * (c.v - a.v);
      s += 0.25 * r.weights[p] * r.weights[q] * (1.0 - u) * g(x, v);
    }
  return s * jac;
}

inline double rectangle_integral(double x0, double x1, double v0, double v1, const Integrand& g) {
  const sldg::GaussRule& r = sldg::gauss_legendre(8);
  double s = 0.0;
  for (int p = 0; p < r.size(); ++p)
    for (int q = 0; q < r.size(); ++q) {
      const double x = x0 + 0.5 * (x1 - x0) * (1.0 + r.nodes[p]);
      const double v = v0 + 0.5 * (v1 - v0) * (1.0 + r.nodes[q]);
      s += r.weights[p] * r.weights[q] * g(x, v);
    }
  return s * 0.25 * (x1 - x0) * (v1 - v0);
}

/// Basis function m of cell (i, j) at a physical point.
inline double basis_at(const sldg::PhaseMesh& mesh, int i, int j, int m, double x, double v) {
  return sldg::basis_value(m, 2.0 * (x - mesh.x_center(i)) / mesh.dx(), 2.0 * (v - mesh.v_center(j)) / mesh.dv());
}

/// Exact characteristics for E = 0.
inline Map free_stream(double dt) {
  return [dt](Point p) { return Point{p.x - p.v * dt, p.v}; };
}

/// Roots of g on [-1, 1] from sign changes on a fine grid, refined by bisection.
inline std::vector<double> bisection_roots(const std::function<double(double)>& g) {
  std::vector<double> out;
  const int n = 4000;
  double a = -1.0, ga = g(a);
  for (int k = 1; k <= n; ++k) {
    const double b = -1.0 + 2.0 * k / n, gb = g(b);
    if ((ga < 0) != (gb < 0)) {
      double lo = a, hi = b;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((g(mid) < 0) == (ga < 0)) lo = mid; else hi = mid;
      }
      out.push_back(0.5 * (lo + hi));
    }
    a = b;
    ga = gb;
  }
  return out;
}

/// The nine Eulerian nodes of cell (i, j), row by row from the bottom left.
inline std::array<Point, 9> cell_nodes(const sldg::PhaseMesh& m, int i, int j) {
  std::array<Point, 9> p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p[3 * r + c] = {m.x_face(i) + 0.5 * c * m.dx(), m.v_face(j) + 0.5 * r * m.dv()};
  return p;
}

template <class F>
std::array<Point, 9> mapped_nodes(const sldg::PhaseMesh& m, int i, int j, F&& f) {
  auto p = cell_nodes(m, i, j);
  for (Point& q : p) q = f(q);
  return p;
}

}  // namespace oracle
