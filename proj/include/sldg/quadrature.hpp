#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace sldg {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int size() const { return static_cast<int>(nodes.size()); }
};

inline constexpr int kMaxGaussPoints = 24;

namespace detail {

inline GaussRule build_gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int k = 0; k < (n + 1) / 2; ++k) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int m = 2; m <= n; ++m) {
        const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int m = 2; m <= n; ++m) {
      const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[k] = -x;
    rule.nodes[n - 1 - k] = x;
    rule.weights[k] = w;
    rule.weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace detail

/// Cached n-point Gauss-Legendre rule, exact for polynomials of degree 2n-1.
inline const GaussRule& gauss_legendre(int n) {
  static const std::array<GaussRule, kMaxGaussPoints + 1> rules = [] {
    std::array<GaussRule, kMaxGaussPoints + 1> r{};
    for (int k = 1; k <= kMaxGaussPoints; ++k) r[k] = detail::build_gauss_legendre(k);
    return r;
  }();
  if (n < 1 || n > kMaxGaussPoints) throw std::out_of_range("gauss_legendre: unsupported point count");
  return rules[n];
}

/// Smallest Gauss rule integrating a polynomial of the given degree exactly.
inline int gauss_points_for_degree(int degree) { return degree < 1 ? 1 : (degree + 2) / 2; }

}  // namespace sldg
