#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "sldg/dg_field.hpp"
#include "sldg/quadrature.hpp"

namespace sldg {

/// Periodic 1D DG field on [0, L) with nx cells, same scaled Legendre basis
/// as the x-direction of the phase-space basis.
class Field1D {
 public:
  Field1D() = default;
  Field1D(double length, int nx, int degree)
      : length_(length), nx_(nx), degree_(degree), dx_(length / nx), c_(static_cast<std::size_t>(nx) * (degree + 1), 0.0) {
    if (degree < 0 || degree > kMaxDegree) throw std::invalid_argument("Field1D: degree must be 0, 1 or 2");
  }

  double length() const { return length_; }
  int nx() const { return nx_; }
  int degree() const { return degree_; }
  int nb() const { return degree_ + 1; }
  double dx() const { return dx_; }

  double& coeff(int i, int a) { return c_[static_cast<std::size_t>(i) * nb() + a]; }
  double coeff(int i, int a) const { return c_[static_cast<std::size_t>(i) * nb() + a]; }
  std::vector<double>& data() { return c_; }
  const std::vector<double>& data() const { return c_; }

  /// Value of cell i's polynomial at local coordinate s in [-1, 1].
  double local(int i, double s) const {
    std::array<double, 3> l;
    legendre_values(s, l);
    double v = 0.0;
    for (int a = 0; a < nb(); ++a) v += coeff(i, a) * l[a];
    return v;
  }

  /// Point value; within 1e-12*dx of a face the two one-sided limits are averaged.
  double operator()(double x) const {
    double xw = std::fmod(x, length_);
    if (xw < 0.0) xw += length_;
    const double pos = xw / dx_;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) <= 1e-12) {
      const int right = static_cast<int>(nearest) % nx_;
      const int left = (right + nx_ - 1) % nx_;
      return 0.5 * (local(left, 1.0) + local(right, -1.0));
    }
    int i = std::min(static_cast<int>(std::floor(pos)), nx_ - 1);
    return local(i, 2.0 * (pos - i) - 1.0);
  }

  double mean() const {
    double s = 0.0;
    for (int i = 0; i < nx_; ++i) s += coeff(i, 0);
    return s / nx_;
  }

  double integral() const { return mean() * length_; }

  /// Largest magnitude over Gauss samples and face averages.
  double max_abs() const {
    const GaussRule& g = gauss_legendre(degree_ + 2);
    double m = 0.0;
    for (int i = 0; i < nx_; ++i) {
      for (double s : g.nodes) m = std::max(m, std::abs(local(i, s)));
      m = std::max(m, std::abs((*this)(i * dx_)));
    }
    return m;
  }

  double l2_norm() const {
    double s = 0.0;
    for (double c : c_) s += c * c;
    return std::sqrt(s * dx_);
  }

 private:
  double length_ = 1.0;
  int nx_ = 1;
  int degree_ = 0;
  double dx_ = 1.0;
  std::vector<double> c_;
};

inline Field1D project_1d(double length, int nx, int degree, const std::function<double(double)>& fn) {
  Field1D out(length, nx, degree);
  const GaussRule& g = gauss_legendre(degree + 3);
  for (int i = 0; i < nx; ++i) {
    for (int q = 0; q < g.size(); ++q) {
      const double x = (i + 0.5 * (1.0 + g.nodes[q])) * out.dx();
      const double val = 0.5 * g.weights[q] * fn(x);
      for (int a = 0; a <= degree; ++a) out.coeff(i, a) += val * legendre(a, g.nodes[q]);
    }
  }
  return out;
}

inline double l2_error_1d(const Field1D& f, const std::function<double(double)>& exact) {
  const GaussRule& g = gauss_legendre(f.degree() + 4);
  double s = 0.0;
  for (int i = 0; i < f.nx(); ++i) {
    for (int q = 0; q < g.size(); ++q) {
      const double x = (i + 0.5 * (1.0 + g.nodes[q])) * f.dx();
      const double d = f.local(i, g.nodes[q]) - exact(x);
      s += 0.5 * f.dx() * g.weights[q] * d * d;
    }
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Velocity moments. Exact per x-cell: int L_b(eta) dv = dv * delta_b0 and
// int v L_b(eta) dv = dv * (v_c delta_b0 + dv / (2 sqrt 3) delta_b1).
// ---------------------------------------------------------------------------

inline int basis_index(int a, int b) {
  for (int m = 0; m < 6; ++m)
    if (kBasisOrders[m][0] == a && kBasisOrders[m][1] == b) return m;
  throw std::out_of_range("basis_index");
}

/// int f dv - 1 without neutralization; the result has degree out_degree.
inline Field1D raw_charge_density(const DGField& f, int out_degree) {
  const PhaseMesh& mesh = f.mesh();
  Field1D rho(mesh.length_x(), mesh.nx(), out_degree);
  const int amax = std::min(out_degree, f.degree());
  for (int i = 0; i < mesh.nx(); ++i) {
    for (int a = 0; a <= amax; ++a) {
      const int m = basis_index(a, 0);
      double s = 0.0;
      for (int j = 0; j < mesh.nv(); ++j) s += f.cell(mesh.linear(i, j))[m];
      rho.coeff(i, a) = mesh.dv() * s;
    }
    rho.coeff(i, 0) -= 1.0;
  }
  return rho;
}

/// Charge density with its mean removed so the periodic problem is solvable.
inline Field1D charge_density(const DGField& f, int out_degree) {
  Field1D rho = raw_charge_density(f, out_degree);
  const double mean = rho.mean();
  for (int i = 0; i < rho.nx(); ++i) rho.coeff(i, 0) -= mean;
  return rho;
}

inline Field1D current_density(const DGField& f, int out_degree) {
  const PhaseMesh& mesh = f.mesh();
  Field1D cur(mesh.length_x(), mesh.nx(), out_degree);
  const int amax = std::min(out_degree, f.degree());
  const double half_dv_over_sqrt3 = 0.5 * mesh.dv() / std::numbers::sqrt3;
  for (int i = 0; i < mesh.nx(); ++i) {
    for (int a = 0; a <= amax; ++a) {
      const int m0 = basis_index(a, 0);
      const int m1 = (f.degree() >= a + 1) ? basis_index(a, 1) : -1;
      double s = 0.0;
      for (int j = 0; j < mesh.nv(); ++j) {
        auto c = f.cell(mesh.linear(i, j));
        s += mesh.v_center(j) * c[m0];
        if (m1 >= 0) s += half_dv_over_sqrt3 * c[m1];
      }
      cur.coeff(i, a) = mesh.dv() * s;
    }
  }
  return cur;
}

/// Spatial average of the current, cached at t = 0 by the driver.
inline double jbar0(const DGField& f) { return current_density(f, 0).mean(); }

// ---------------------------------------------------------------------------
// LDG Poisson solver
// ---------------------------------------------------------------------------

struct ElectricField1D {
  Field1D E;
  Field1D phi;
};

/// LDG discretization of -phi'' = rho, q = phi', E = -q, with alternating
/// fluxes phi^ = phi^- and q^ = q^+ on a periodic grid. The zero-mean gauge
/// for phi is a bordered row; a multiplier column absorbs any residual net
/// charge. The dense system is factored once and reused.
class PoissonSolver {
 public:
  PoissonSolver(double length, int nx, int degree) : length_(length), nx_(nx), degree_(degree) {
    if (nx < 1) throw std::invalid_argument("PoissonSolver: nx must be positive");
    const int nb = degree + 1;
    const double h = length / nx;
    const int n = 2 * nx * nb + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);

    // D_ab = int L_a L_b' d(xi), exact with a 3-point rule.
    const GaussRule& g = gauss_legendre(3);
    double D[3][3] = {};
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b < nb; ++b)
        for (int q = 0; q < g.size(); ++q)
          D[a][b] += g.weights[q] * legendre(a, g.nodes[q]) * legendre_derivative(b, g.nodes[q]);

    auto phi_idx = [&](int i, int a) { return (((i % nx) + nx) % nx) * nb + a; };
    auto q_idx = [&](int i, int a) { return nx * nb + (((i % nx) + nx) % nx) * nb + a; };
    const int lambda = n - 1;

    for (int i = 0; i < nx; ++i) {
      for (int b = 0; b < nb; ++b) {
        const double lbp = legendre(b, 1.0), lbm = legendre(b, -1.0);
        // h q_b + D^T phi - phi^(i)(1) L_b(1) + phi^(i-1)(1) L_b(-1) = 0
        const int r1 = phi_idx(i, b);
        A(r1, q_idx(i, b)) += h;
        for (int a = 0; a < nb; ++a) {
          const double lap = legendre(a, 1.0);
          A(r1, phi_idx(i, a)) += D[a][b] - lap * lbp;
          A(r1, phi_idx(i - 1, a)) += lap * lbm;
        }
        // D^T q - q^(i+1)(-1) L_b(1) + q^(i)(-1) L_b(-1) = h rho_b
        const int r2 = q_idx(i, b);
        for (int a = 0; a < nb; ++a) {
          const double lam = legendre(a, -1.0);
          A(r2, q_idx(i, a)) += D[a][b] + lam * lbm;
          A(r2, q_idx(i + 1, a)) -= lam * lbp;
        }
        if (b == 0) A(r2, lambda) = 1.0;
      }
      A(lambda, phi_idx(i, 0)) = h;
    }
    lu_ = A.partialPivLu();
    // The determinant under- or overflows for large grids; test conditioning instead.
    if (!(lu_.rcond() > 1e-14)) {
      throw std::runtime_error("PoissonSolver: singular LDG system");
    }
  }

  int degree() const { return degree_; }
  int nx() const { return nx_; }
  double length() const { return length_; }

  ElectricField1D solve(const Field1D& rho) const {
    if (rho.nx() != nx_ || rho.degree() != degree_) {
      throw std::invalid_argument("PoissonSolver::solve: rho layout mismatch");
    }
    const int nb = degree_ + 1;
    const double h = length_ / nx_;
    const int n = 2 * nx_ * nb + 1;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < nx_; ++i)
      for (int b = 0; b < nb; ++b) rhs(nx_ * nb + i * nb + b) = h * rho.coeff(i, b);
    const Eigen::VectorXd sol = lu_.solve(rhs);

    ElectricField1D out{Field1D(length_, nx_, degree_), Field1D(length_, nx_, degree_)};
    for (int i = 0; i < nx_; ++i) {
      for (int a = 0; a < nb; ++a) {
        out.phi.coeff(i, a) = sol(i * nb + a);
        out.E.coeff(i, a) = -sol(nx_ * nb + i * nb + a);
      }
    }
    return out;
  }

 private:
  double length_;
  int nx_;
  int degree_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

inline ElectricField1D solve_poisson(const Field1D& rho) {
  return PoissonSolver(rho.length(), rho.nx(), rho.degree()).solve(rho);
}

/// Field quantities at one time level: E and the moments needed for the
/// material derivative of E along characteristics.
struct FieldState {
  Field1D E;
  Field1D phi;
  Field1D rho;  // int f dv minus its mean, which is dE/dx of the solved field
  Field1D J;
  double jbar0 = 0.0;

  double eval_E(double x) const { return E(x); }

  /// dE/dt along a characteristic: jbar0 - J(x) + v dE/dx.
  double material_derivative_E(double x, double v) const { return jbar0 - J(x) + v * rho(x); }
};

/// Free-standing form of the material derivative formula.
inline double material_derivative_E(double jbar0_value, double J, double rho, double v) {
  return jbar0_value - J + v * rho;
}

/// Solves for E from f. A zero_field state (free streaming) skips the solve.
inline FieldState compute_field_state(const DGField& f, const PoissonSolver& solver, double jbar0_value,
                                      bool with_moments, bool zero_field = false) {
  const int k = solver.degree();
  FieldState s;
  s.jbar0 = zero_field ? 0.0 : jbar0_value;
  if (zero_field) with_moments = false;
  if (zero_field) {
    s.E = Field1D(solver.length(), solver.nx(), k);
    s.phi = s.E;
  } else {
    s.rho = charge_density(f, k);
    ElectricField1D ef = solver.solve(s.rho);
    s.E = std::move(ef.E);
    s.phi = std::move(ef.phi);
  }
  if (with_moments) {
    s.J = current_density(f, k);
  } else {
    s.rho = Field1D(solver.length(), solver.nx(), k);
    s.J = s.rho;
  }
  return s;
}

}  // namespace sldg
