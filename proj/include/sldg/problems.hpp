#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace sldg {

/// Initial-value problem on [0, Lx] x [-v_max, v_max].
struct ProblemSpec {
  std::string id;
  double length_x = 0.0;
  double v_max = 0.0;
  std::function<double(double, double)> initial;
  /// Free streaming: the electric field is forced to zero.
  bool zero_field = false;
  std::map<std::string, double> params;
};

class UnknownProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& problem_ids() {
  static const std::vector<std::string> ids{"weak-landau", "strong-landau",  "two-stream-1",
                                            "two-stream-2", "bump-on-tail", "free-streaming"};
  return ids;
}

namespace detail {

inline ProblemSpec landau(const std::string& id, double alpha) {
  const double k = 0.5;
  ProblemSpec p{id, 2.0 * std::numbers::pi / k, 2.0 * std::numbers::pi, {}, false, {{"alpha", alpha}, {"k", k}}};
  p.initial = [alpha, k](double x, double v) {
    return std::exp(-0.5 * v * v) * (1.0 + alpha * std::cos(k * x)) / std::sqrt(2.0 * std::numbers::pi);
  };
  return p;
}

}  // namespace detail

inline ProblemSpec problem_library(const std::string& id) {
  using std::numbers::pi;
  const double sqrt_2pi = std::sqrt(2.0 * pi);
  if (id == "weak-landau") return detail::landau(id, 0.01);
  if (id == "strong-landau") return detail::landau(id, 0.5);
  if (id == "two-stream-1") {
    const double alpha = 0.01, k = 0.5;
    ProblemSpec p{id, 4.0 * pi, 10.0, {}, false, {{"alpha", alpha}, {"k", k}}};
    p.initial = [=](double x, double v) {
      return 2.0 / (7.0 * sqrt_2pi) * (1.0 + 5.0 * v * v) *
             (1.0 + alpha * ((std::cos(2.0 * k * x) + std::cos(3.0 * k * x)) / 1.2 + std::cos(k * x))) *
             std::exp(-0.5 * v * v);
    };
    return p;
  }
  if (id == "two-stream-2") {
    const double u = 0.99, k = 2.0 / 13.0, vt = 0.3;
    ProblemSpec p{id, 2.0 * pi / k, 2.0 * pi, {}, false, {{"u", u}, {"k", k}, {"v_t", vt}}};
    p.initial = [=](double x, double v) {
      const double s = 2.0 * vt * vt;
      return (std::exp(-(v - u) * (v - u) / s) + std::exp(-(v + u) * (v + u) / s)) * (1.0 + 0.05 * std::cos(k * x)) /
             (2.0 * vt * sqrt_2pi);
    };
    return p;
  }
  if (id == "bump-on-tail") {
    const double np = 9.0 / (10.0 * sqrt_2pi), nb = 2.0 / (10.0 * sqrt_2pi), u = 4.5, vt = 0.5, k = 0.3;
    ProblemSpec p{id, 20.0 * pi / 3.0, 13.0, {}, false, {{"n_p", np}, {"n_b", nb}, {"u", u}, {"v_t", vt}, {"k", k}}};
    p.initial = [=](double x, double v) {
      const double fbot = np * std::exp(-0.5 * v * v) + nb * std::exp(-(v - u) * (v - u) / (2.0 * vt * vt));
      return fbot * (1.0 + 0.04 * std::cos(k * x));
    };
    return p;
  }
  if (id == "free-streaming") {
    const double k = 1.0, alpha = 0.5;
    ProblemSpec p{id, 2.0 * pi, 2.0 * pi, {}, true, {{"alpha", alpha}, {"k", k}}};
    p.initial = [=](double x, double v) { return std::exp(-0.5 * v * v) * (1.0 + alpha * std::cos(k * x)) / sqrt_2pi; };
    return p;
  }
  std::string msg = "unknown problem '" + id + "'; valid ids:";
  for (const auto& s : problem_ids()) msg += " " + s;
  throw UnknownProblemError(msg);
}

/// Exact free-streaming solution f0(x - v t, v).
inline std::function<double(double, double)> free_streaming_exact(const ProblemSpec& p, double t) {
  return [init = p.initial, t](double x, double v) { return init(x - v * t, v); };
}

}  // namespace sldg
