#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sldg/mesh.hpp"
#include "sldg/quadrature.hpp"

namespace sldg {

// ---------------------------------------------------------------------------
// Basis
//
// On the reference square [-1,1]^2 the basis is phi_m = L_a(xi) L_b(eta) with
// L_a = sqrt(2a+1) * Legendre_a, restricted to a+b <= k. These are orthonormal
// for the cell-averaged inner product (1/|A|) int_A phi_m phi_n = delta_mn, so
// phi_0 == 1 and coefficient 0 is the cell average.
// ---------------------------------------------------------------------------

inline constexpr int kMaxDegree = 2;

inline constexpr int num_basis(int degree) { return (degree + 1) * (degree + 2) / 2; }

/// (a, b) Legendre orders of basis function m, ordered by total degree.
inline constexpr std::array<std::array<int, 2>, 6> kBasisOrders{{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}};

inline double legendre(int a, double s) {
  switch (a) {
    case 0: return 1.0;
    case 1: return std::numbers::sqrt3 * s;
    case 2: return std::sqrt(5.0) * 0.5 * (3.0 * s * s - 1.0);
    default: throw std::out_of_range("legendre: order above 2");
  }
}

inline double legendre_derivative(int a, double s) {
  switch (a) {
    case 0: return 0.0;
    case 1: return std::numbers::sqrt3;
    case 2: return std::sqrt(5.0) * 3.0 * s;
    default: throw std::out_of_range("legendre_derivative: order above 2");
  }
}

inline void legendre_values(double s, std::array<double, 3>& out) {
  out[0] = 1.0;
  out[1] = std::numbers::sqrt3 * s;
  out[2] = 1.1180339887498949 * (3.0 * s * s - 1.0);  // sqrt(5)/2
}

inline double basis_value(int m, double xi, double eta) {
  return legendre(kBasisOrders[m][0], xi) * legendre(kBasisOrders[m][1], eta);
}

/// Evaluates sum_m c[m] phi_m(xi, eta) for the first num_basis(degree) terms.
inline double eval_local(const double* c, int degree, double xi, double eta) {
  double v = c[0];
  if (degree >= 1) v += std::numbers::sqrt3 * (c[1] * xi + c[2] * eta);
  if (degree >= 2) {
    constexpr double h5 = 1.1180339887498949;
    v += c[3] * h5 * (3.0 * xi * xi - 1.0) + c[4] * 3.0 * xi * eta + c[5] * h5 * (3.0 * eta * eta - 1.0);
  }
  return v;
}

/// Monomial coefficients p[ab] of a local expansion:
/// f = p00 + p10 xi + p01 eta + p20 xi^2 + p11 xi eta + p02 eta^2.
struct LocalQuadratic {
  double p00 = 0, p10 = 0, p01 = 0, p20 = 0, p11 = 0, p02 = 0;
  double operator()(double xi, double eta) const {
    return p00 + p10 * xi + p01 * eta + p20 * xi * xi + p11 * xi * eta + p02 * eta * eta;
  }
};

inline LocalQuadratic to_monomials(const double* c, int degree) {
  LocalQuadratic q;
  q.p00 = c[0];
  if (degree >= 1) {
    q.p10 = std::numbers::sqrt3 * c[1];
    q.p01 = std::numbers::sqrt3 * c[2];
  }
  if (degree >= 2) {
    constexpr double h5 = 1.1180339887498949;
    q.p00 -= h5 * (c[3] + c[5]);
    q.p20 = 3.0 * h5 * c[3];
    q.p02 = 3.0 * h5 * c[5];
    q.p11 = 3.0 * c[4];
  }
  return q;
}

// ---------------------------------------------------------------------------
// DGField
// ---------------------------------------------------------------------------

class DGField {
 public:
  DGField() = default;
  DGField(const PhaseMesh& mesh, int degree)
      : mesh_(mesh), degree_(degree), nb_(num_basis(degree)), coeffs_(mesh.num_cells() * num_basis(degree), 0.0) {
    if (degree < 0 || degree > kMaxDegree) throw std::invalid_argument("DGField: degree must be 0, 1 or 2");
  }

  const PhaseMesh& mesh() const { return mesh_; }
  int degree() const { return degree_; }
  int basis_count() const { return nb_; }

  std::span<double> cell(std::size_t c) { return {coeffs_.data() + c * nb_, static_cast<std::size_t>(nb_)}; }
  std::span<const double> cell(std::size_t c) const {
    return {coeffs_.data() + c * nb_, static_cast<std::size_t>(nb_)};
  }
  std::span<double> cell(CellIndex c) { return cell(mesh_.linear(c)); }
  std::span<const double> cell(CellIndex c) const { return cell(mesh_.linear(c)); }

  std::vector<double>& data() { return coeffs_; }
  const std::vector<double>& data() const { return coeffs_; }

 private:
  PhaseMesh mesh_;
  int degree_ = 0;
  int nb_ = 1;
  std::vector<double> coeffs_;
};

using PhaseFunction = std::function<double(double, double)>;

inline void require_same_layout(const DGField& a, const DGField& b, const char* what) {
  if (!(a.mesh() == b.mesh()) || a.degree() != b.degree()) {
    throw std::invalid_argument(std::string(what) + ": fields must share mesh and degree");
  }
}

/// L2 projection with a (k+2)^2 tensor Gauss rule per cell.
inline DGField project(const PhaseMesh& mesh, const PhaseFunction& fn, int degree) {
  DGField out(mesh, degree);
  const GaussRule& g = gauss_legendre(degree + 2);
  const int nb = out.basis_count();
  for (int i = 0; i < mesh.nx(); ++i) {
    for (int j = 0; j < mesh.nv(); ++j) {
      auto c = out.cell(mesh.linear(i, j));
      for (int qa = 0; qa < g.size(); ++qa) {
        const double x = mesh.x_center(i) + 0.5 * mesh.dx() * g.nodes[qa];
        for (int qb = 0; qb < g.size(); ++qb) {
          const double v = mesh.v_center(j) + 0.5 * mesh.dv() * g.nodes[qb];
          const double w = 0.25 * g.weights[qa] * g.weights[qb] * fn(x, v);
          for (int m = 0; m < nb; ++m) c[m] += w * basis_value(m, g.nodes[qa], g.nodes[qb]);
        }
      }
    }
  }
  return out;
}

/// Polynomial value of the cell owning (x, v). An explicit owner selects the
/// one-sided limit on a face. Zero outside the velocity domain.
inline double evaluate(const DGField& f, double x, double v, std::optional<CellIndex> owner = std::nullopt) {
  const PhaseMesh& m = f.mesh();
  std::optional<CellIndex> cell = owner ? owner : m.locate_cell(x, v);
  if (!cell || !m.v_inside(v)) return 0.0;
  double xw = m.wrap_x(x);
  // Keep the coordinate on the owner's side of the seam.
  if (owner && xw < m.x_face(owner->i) - 0.5 * m.dx()) xw += m.length_x();
  if (owner && xw > m.x_face(owner->i + 1) + 0.5 * m.dx()) xw -= m.length_x();
  const double xi = 2.0 * (xw - m.x_center(cell->i)) / m.dx();
  const double eta = 2.0 * (v - m.v_center(cell->j)) / m.dv();
  return eval_local(f.cell(*cell).data(), f.degree(), xi, eta);
}

inline double cell_average(const DGField& f, CellIndex c) { return f.cell(c)[0]; }

inline double total_mass(const DGField& f) {
  double s = 0.0;
  for (std::size_t c = 0; c < f.mesh().num_cells(); ++c) s += f.cell(c)[0];
  return s * f.mesh().cell_area();
}

/// Copy at a different degree: truncation keeps the L2 projection onto the
/// lower space, raising pads with zeros.
inline DGField with_degree(const DGField& f, int degree) {
  if (degree == f.degree()) return f;
  DGField out(f.mesh(), degree);
  const int keep = std::min(f.basis_count(), out.basis_count());
  for (std::size_t c = 0; c < f.mesh().num_cells(); ++c) {
    auto src = f.cell(c);
    auto dst = out.cell(c);
    for (int m = 0; m < keep; ++m) dst[m] = src[m];
  }
  return out;
}

/// Exact image of f under v -> -v (requires the symmetric velocity grid).
inline DGField flip_velocity(const DGField& f) {
  const PhaseMesh& mesh = f.mesh();
  DGField out(mesh, f.degree());
  for (int i = 0; i < mesh.nx(); ++i) {
    for (int j = 0; j < mesh.nv(); ++j) {
      auto src = f.cell(mesh.linear(i, j));
      auto dst = out.cell(mesh.linear(i, mesh.nv() - 1 - j));
      for (int m = 0; m < f.basis_count(); ++m) dst[m] = (kBasisOrders[m][1] % 2 == 0) ? src[m] : -src[m];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Positivity-preserving limiter
// ---------------------------------------------------------------------------

/// Minimum of a local polynomial over the closed reference square.
inline double cell_minimum(const double* c, int degree) {
  const LocalQuadratic q = to_monomials(c, degree);
  double m = std::numeric_limits<double>::infinity();
  for (double xi : {-1.0, 1.0})
    for (double eta : {-1.0, 1.0}) m = std::min(m, q(xi, eta));
  if (degree < 2) return m;

  // Edge extrema: the restriction to each edge is a 1D quadratic.
  for (double xi : {-1.0, 1.0}) {
    if (q.p02 != 0.0) {
      const double eta = -(q.p01 + q.p11 * xi) / (2.0 * q.p02);
      if (eta > -1.0 && eta < 1.0) m = std::min(m, q(xi, eta));
    }
  }
  for (double eta : {-1.0, 1.0}) {
    if (q.p20 != 0.0) {
      const double xi = -(q.p10 + q.p11 * eta) / (2.0 * q.p20);
      if (xi > -1.0 && xi < 1.0) m = std::min(m, q(xi, eta));
    }
  }

  // Interior stationary point of the quadratic.
  const double det = 4.0 * q.p20 * q.p02 - q.p11 * q.p11;
  const double scale = q.p20 * q.p20 + q.p02 * q.p02 + q.p11 * q.p11;
  if (std::abs(det) > 1e-12 * scale && scale > 0.0) {
    const double xi = (-q.p10 * 2.0 * q.p02 + q.p01 * q.p11) / det;
    const double eta = (-q.p01 * 2.0 * q.p20 + q.p10 * q.p11) / det;
    if (xi > -1.0 && xi < 1.0 && eta > -1.0 && eta < 1.0) m = std::min(m, q(xi, eta));
  } else {
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b) m = std::min(m, q(-1.0 + 0.5 * a, -1.0 + 0.5 * b));
  }
  return m;
}

/// Tolerated roundoff below zero for a cell average entering the limiter.
inline constexpr double kNegativeAverageTolerance = 1e-12;

class NegativeAverageError : public std::runtime_error {
 public:
  NegativeAverageError(CellIndex c, double avg)
      : std::runtime_error("pp_limit: negative cell average " + std::to_string(avg) + " in cell (" +
                           std::to_string(c.i) + "," + std::to_string(c.j) + ")"),
        cell(c),
        average(avg) {}
  CellIndex cell;
  double average;
};

/// Limiter scale factor theta = min(|avg / (m' - avg)|, 1) for m' < 0.
inline double pp_theta(double average, double minimum) {
  if (minimum >= 0.0) return 1.0;
  if (average <= 0.0) return 0.0;
  return std::min(average / (average - minimum), 1.0);
}

/// Scales each cell about its average so the cell minimum is nonnegative.
/// Returns the number of cells modified.
inline std::size_t pp_limit_in_place(DGField& f) {
  if (f.degree() == 0) {
    for (std::size_t c = 0; c < f.mesh().num_cells(); ++c) {
      if (f.cell(c)[0] < -kNegativeAverageTolerance) {
        const int nv = f.mesh().nv();
        throw NegativeAverageError({static_cast<int>(c / nv), static_cast<int>(c % nv)}, f.cell(c)[0]);
      }
    }
    return 0;
  }
  std::size_t limited = 0;
  const int nv = f.mesh().nv();
  for (std::size_t c = 0; c < f.mesh().num_cells(); ++c) {
    auto coeff = f.cell(c);
    const double avg = coeff[0];
    if (avg < -kNegativeAverageTolerance) {
      throw NegativeAverageError({static_cast<int>(c / nv), static_cast<int>(c % nv)}, avg);
    }
    const double mn = cell_minimum(coeff.data(), f.degree());
    const double theta = pp_theta(avg, mn);
    if (theta < 1.0) {
      for (int m = 1; m < f.basis_count(); ++m) coeff[m] *= theta;
      ++limited;
    }
  }
  return limited;
}

inline DGField pp_limit(const DGField& f) {
  DGField out = f;
  pp_limit_in_place(out);
  return out;
}

// ---------------------------------------------------------------------------
// Norms and errors, (k+2)^2 Gauss nodes per cell
// ---------------------------------------------------------------------------

template <class Fn>
void for_each_quadrature_node(const PhaseMesh& mesh, int degree, Fn&& fn) {
  const GaussRule& g = gauss_legendre(degree + 2);
  const double jac = 0.25 * mesh.cell_area();
  for (int i = 0; i < mesh.nx(); ++i)
    for (int j = 0; j < mesh.nv(); ++j)
      for (int qa = 0; qa < g.size(); ++qa)
        for (int qb = 0; qb < g.size(); ++qb)
          fn(i, j, g.nodes[qa], g.nodes[qb], jac * g.weights[qa] * g.weights[qb]);
}

inline double lp_norm(const DGField& f, int p) {
  if (p != 1 && p != 2) throw std::invalid_argument("lp_norm: p must be 1 or 2");
  const PhaseMesh& mesh = f.mesh();
  double s = 0.0;
  for_each_quadrature_node(mesh, f.degree(), [&](int i, int j, double xi, double eta, double w) {
    const double val = eval_local(f.cell(mesh.linear(i, j)).data(), f.degree(), xi, eta);
    s += w * (p == 1 ? std::abs(val) : val * val);
  });
  return p == 1 ? s : std::sqrt(s);
}

inline double l2_error(const DGField& a, const DGField& b) {
  require_same_layout(a, b, "l2_error");
  const PhaseMesh& mesh = a.mesh();
  double s = 0.0;
  for_each_quadrature_node(mesh, a.degree(), [&](int i, int j, double xi, double eta, double w) {
    const std::size_t c = mesh.linear(i, j);
    const double d = eval_local(a.cell(c).data(), a.degree(), xi, eta) - eval_local(b.cell(c).data(), b.degree(), xi, eta);
    s += w * d * d;
  });
  return std::sqrt(s);
}

inline double linf_error(const DGField& a, const DGField& b) {
  require_same_layout(a, b, "linf_error");
  const PhaseMesh& mesh = a.mesh();
  double s = 0.0;
  for_each_quadrature_node(mesh, a.degree(), [&](int i, int j, double xi, double eta, double) {
    const std::size_t c = mesh.linear(i, j);
    s = std::max(s, std::abs(eval_local(a.cell(c).data(), a.degree(), xi, eta) -
                             eval_local(b.cell(c).data(), b.degree(), xi, eta)));
  });
  return s;
}

/// L2 distance to an analytic function, sampled with a (k+3)^2 rule.
inline double l2_error(const DGField& a, const PhaseFunction& exact) {
  const PhaseMesh& mesh = a.mesh();
  double s = 0.0;
  for_each_quadrature_node(mesh, a.degree() + 1, [&](int i, int j, double xi, double eta, double w) {
    const double x = mesh.x_center(i) + 0.5 * mesh.dx() * xi;
    const double v = mesh.v_center(j) + 0.5 * mesh.dv() * eta;
    const double d = eval_local(a.cell(mesh.linear(i, j)).data(), a.degree(), xi, eta) - exact(x, v);
    s += w * d * d;
  });
  return std::sqrt(s);
}

/// Minimum over cell-center samples.
inline double min_center_value(const DGField& f) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < f.mesh().num_cells(); ++c) m = std::min(m, eval_local(f.cell(c).data(), f.degree(), 0.0, 0.0));
  return m;
}

/// Structured-grid text snapshot: one "x v f" line per cell center.
inline void write_snapshot(std::ostream& os, const DGField& f, double time) {
  const PhaseMesh& mesh = f.mesh();
  os << "# t = " << time << "\n# nx = " << mesh.nx() << " nv = " << mesh.nv()
     << "\n# columns: x v f (sampled at cell centers)\n";
  os.precision(12);
  for (int i = 0; i < mesh.nx(); ++i)
    for (int j = 0; j < mesh.nv(); ++j)
      os << mesh.x_center(i) << ' ' << mesh.v_center(j) << ' '
         << eval_local(f.cell(mesh.linear(i, j)).data(), f.degree(), 0.0, 0.0) << '\n';
}

}  // namespace sldg
