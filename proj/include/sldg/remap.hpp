#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

#include "sldg/clipper.hpp"
#include "sldg/dg_field.hpp"
#include "sldg/geometry.hpp"
#include "sldg/quadrature.hpp"
#include "sldg/tracer.hpp"

namespace sldg {

// ---------------------------------------------------------------------------
// Upstream test functions. psi*_m is a degree-k polynomial in the frame
// (X, V) = A (x - ox, v - ov), where A inverts the affine part of the traced
// corners, fitted by least squares to psi*(traced node) = Psi_m(Eulerian
// node). The frame keeps the fit well conditioned for strongly sheared cells.
// The constant test function is reproduced exactly, which makes the remap
// conservative.
// ---------------------------------------------------------------------------

struct PsiStar {
  int degree = 0;
  double ox = 0, ov = 0;
  double a00 = 1, a01 = 0, a10 = 0, a11 = 1;

  void frame(double x, double v, double& X, double& V) const {
    const double dx = x - ox, dv = v - ov;
    X = a00 * dx + a01 * dv;
    V = a10 * dx + a11 * dv;
  }
  std::array<std::array<double, 6>, 6> coef{};  // coef[m][monomial]

  void monomials(double x, double v, double* mono) const {
    double X, V;
    frame(x, v, X, V);
    mono[0] = 1.0;
    mono[1] = X;
    mono[2] = V;
    mono[3] = X * X;
    mono[4] = X * V;
    mono[5] = V * V;
  }

  double operator()(int m, double x, double v) const {
    double mono[6];
    monomials(x, v, mono);
    double s = 0.0;
    for (int l = 0; l < num_basis(degree); ++l) s += coef[m][l] * mono[l];
    return s;
  }
};

/// Least-squares test functions on an upstream cell. Degree 1 fits the four
/// corners; degree 2 fits all nine traced nodes.
inline PsiStar reconstruct_psi_star(const UpstreamCell& u, int degree) {
  PsiStar psi;
  psi.degree = degree;
  psi.coef[0][0] = 1.0;
  if (degree == 0) return psi;

  static constexpr int corner_idx[4] = {0, 2, 6, 8};
  const int npts = degree == 1 ? 4 : 9;
  auto node = [&](int q) { return degree == 1 ? corner_idx[q] : q; };

  for (int q = 0; q < npts; ++q) {
    psi.ox += u.pts[node(q)].x;
    psi.ov += u.pts[node(q)].v;
  }
  psi.ox /= npts;
  psi.ov /= npts;
  // Affine part of the corner map, (xi, eta) -> (x, v); singular only for a
  // collapsed cell, which the fit below rejects anyway.
  const Point c0 = u.pts[0], c2 = u.pts[2], c6 = u.pts[6], c8 = u.pts[8];
  const double jxx = 0.25 * (c2.x + c8.x - c0.x - c6.x), jxv = 0.25 * (c6.x + c8.x - c0.x - c2.x);
  const double jvx = 0.25 * (c2.v + c8.v - c0.v - c6.v), jvv = 0.25 * (c6.v + c8.v - c0.v - c2.v);
  const double det = jxx * jvv - jxv * jvx;
  if (!(std::abs(det) > 0.0)) throw DistortedCellError(u.cell, "collapsed upstream cell");
  psi.a00 = jvv / det;
  psi.a01 = -jxv / det;
  psi.a10 = -jvx / det;
  psi.a11 = jxx / det;

  const int nm = num_basis(degree);
  using Tall = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 9, 6>;
  using Square = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 6, 6>;
  Tall M(npts, nm), R(npts, nm);
  for (int q = 0; q < npts; ++q) {
    const int n = node(q);
    double mono[6];
    psi.monomials(u.pts[n].x, u.pts[n].v, mono);
    for (int l = 0; l < nm; ++l) M(q, l) = mono[l];
    const double xi = (n % 3) - 1.0, eta = (n / 3) - 1.0;
    for (int m = 0; m < nm; ++m) R(q, m) = basis_value(m, xi, eta);
  }
  const Square N = M.transpose() * M;
  Eigen::LLT<Square> llt(N);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) {
    throw DistortedCellError(u.cell, "rank-deficient test-function fit");
  }
  const Square C = llt.solve(Square(M.transpose() * R));
  for (int m = 1; m < nm; ++m)
    for (int l = 0; l < nm; ++l) psi.coef[m][l] = C(l, m);
  return psi;
}

/// Outer-segment Gauss points exact for the kernel on a straight (p = 1) or
/// parabolic (p = 2) edge with data of degree k.
inline int outer_points(int k, bool curved) {
  const int p = curved ? 2 : 1;
  return (p * (2 * k + 1) + (p - 1) + 2) / 2;
}

/// Green's-theorem line integrals of Q(x, v) = int_{x_L}^{x} g(s, v) ds over
/// every piece, with g supplied per owner cell. `g(ci, cj, x, v, acc)` adds
/// weight-scaled contributions into acc through the callback's own state.
template <class Kernel>
void integrate_pieces(const UpstreamCell& u, const Decomposition& d, const PhaseMesh& mesh, int degree, Kernel&& kernel) {
  const GaussRule& inner = gauss_legendre(degree + 1);
  auto along_x = [&](int ci, int cj, double x, double v, double w) {
    const double xl = mesh.x_face(ci);
    const double half = 0.5 * (x - xl);
    if (half == 0.0) return;
    for (int h = 0; h < inner.size(); ++h) kernel(ci, cj, xl + half * (1.0 + inner.nodes[h]), v, w * half * inner.weights[h]);
  };
  for (const OuterPiece& p : d.outer) {
    if (!kernel.wants(p.ci, p.cj)) continue;
    const Edge& e = u.edges[p.edge];
    if (!e.curved() && e.b == 0.0) continue;  // dv = 0
    const GaussRule& g = gauss_legendre(outer_points(degree, e.curved()));
    const double h = 0.5 * (p.s1 - p.s0);
    for (int q = 0; q < g.size(); ++q) {
      const double xi = p.s0 + h * (1.0 + g.nodes[q]);
      const Point pt = e.at(xi);
      along_x(p.ci, p.cj, pt.x, pt.v, g.weights[q] * h * e.tangent(xi).v);
    }
  }
  const GaussRule& gv = gauss_legendre(degree + 1);
  for (const InnerPiece& p : d.inner) {
    if (!p.vertical || !kernel.wants(p.ci, p.cj)) continue;
    if (p.line == mesh.x_face(p.ci)) continue;  // Q vanishes on the left face
    const double h = 0.5 * (p.t1 - p.t0);
    for (int q = 0; q < gv.size(); ++q) along_x(p.ci, p.cj, p.line, p.t0 + h * (1.0 + gv.nodes[q]), gv.weights[q] * h);
  }
}

/// int over the upstream cell of f * psi*_m for m < nb_out (not normalized).
/// The kernel accumulates moments of f against the monomials of psi*; the
/// fitted coefficients are applied once at the end.
inline void integrate_subareas(const DGField& f, const PsiStar& psi, const UpstreamCell& u, const Decomposition& d,
                               int nb_out, double* out) {
  const PhaseMesh& mesh = f.mesh();
  const int k = std::max(f.degree(), psi.degree);
  const int nm = nb_out == 1 ? 1 : num_basis(psi.degree);
  struct Kernel {
    const DGField& f;
    const PsiStar& psi;
    const PhaseMesh& mesh;
    int nm;
    double mom[6] = {0, 0, 0, 0, 0, 0};
    int ci = 0, cj = -1;
    LocalQuadratic q{};
    double xc = 0, vc = 0, sx = 0, sv = 0;

    bool wants(int, int row) const { return row >= 0 && row < mesh.nv(); }
    void operator()(int i, int j, double x, double v, double w) {
      if (i != ci || j != cj) {
        ci = i;
        cj = j;
        q = to_monomials(f.cell(mesh.linear(mesh.wrap_index(i), j)).data(), f.degree());
        xc = mesh.x_center(i);
        vc = mesh.v_center(j);
        sx = 2.0 / mesh.dx();
        sv = 2.0 / mesh.dv();
      }
      const double fw = w * q((x - xc) * sx, (v - vc) * sv);
      mom[0] += fw;
      if (nm == 1) return;
      double X, V;
      psi.frame(x, v, X, V);
      mom[1] += fw * X;
      mom[2] += fw * V;
      if (nm == 3) return;
      mom[3] += fw * X * X;
      mom[4] += fw * X * V;
      mom[5] += fw * V * V;
    }
  } kernel{f, psi, mesh, nm};
  integrate_pieces(u, d, mesh, k, kernel);
  out[0] = kernel.mom[0];  // psi*_0 = 1
  for (int m = 1; m < nb_out; ++m) {
    double s = 0.0;
    for (int l = 0; l < nm; ++l) s += psi.coef[m][l] * kernel.mom[l];
    out[m] = s;
  }
}

struct RemapStats {
  long parabola_fallbacks = 0;
};

/// One semi-Lagrangian update: the new coefficients of every cell are the
/// upstream integrals of f against the transported test functions. The
/// output has the degree of f.
inline DGField remap_step(const DGField& f, const NodeLattice& lat, UpstreamMode mode, RemapStats* stats = nullptr) {
  const PhaseMesh& mesh = f.mesh();
  const int k = f.degree();
  if (mode == UpstreamMode::qc && k != 2) throw std::invalid_argument("remap_step: curved upstream cells need degree 2");
  DGField out(mesh, k);
  Clipper clipper(mesh);
  Decomposition d;
  long fallbacks = 0;
  const double inv_area = 1.0 / mesh.cell_area();
  for (int i = 0; i < mesh.nx(); ++i) {
    for (int j = 0; j < mesh.nv(); ++j) {
      const UpstreamCell u = build_upstream(lat, i, j, mode, &fallbacks);
      const PsiStar psi = reconstruct_psi_star(u, k);
      clipper.decompose(u, d);
      auto c = out.cell(mesh.linear(i, j));
      integrate_subareas(f, psi, u, d, out.basis_count(), c.data());
      for (double& x : c) x *= inv_area;
    }
  }
  if (stats) stats->parabola_fallbacks += fallbacks;
  return out;
}

/// Mass of f inside the upstream images of the given cells (ghost rows
/// included), used to account for outflow through the velocity boundary.
inline double upstream_mass(const DGField& f, const NodeLattice& lat, UpstreamMode mode, int j_begin, int j_end) {
  const PhaseMesh& mesh = f.mesh();
  Clipper clipper(mesh);
  Decomposition d;
  PsiStar one;
  double total = 0.0;
  for (int i = 0; i < mesh.nx(); ++i) {
    for (int j = j_begin; j < j_end; ++j) {
      const UpstreamCell u = build_upstream(lat, i, j, mode);
      clipper.decompose(u, d);
      double m0 = 0.0;
      integrate_subareas(f, one, u, d, 1, &m0);
      total += m0;
    }
  }
  return total;
}

}  // namespace sldg
