#pragma once

// Matched-uncertainty control benchmarks
//   x' = A (x - x_d(t)) + x_d'(t) + u(x, t) - h(x),   e = x - x_d(t),  g_e = I.
//
//   lti-stable:       x_d = 3/2 * 1,  h(x) = sin(x) * erf(x)
//   quartic-unstable: x_d(t)_i = sin(2 pi t + cos(sqrt(2) pi t)),  h_i(x) = x_i^4 / 4

#include "rfadapt/lyapunov.hpp"

#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

namespace rfadapt {

enum class BenchmarkKind { lti_stable, quartic_unstable };

[[nodiscard]] inline std::string_view to_string(BenchmarkKind k) {
  return k == BenchmarkKind::lti_stable ? "lti" : "quartic";
}

/// scale * R - shift * I with R a seeded Gaussian matrix of unit spectral norm.
[[nodiscard]] inline Mat stable_matrix(int n, std::uint64_t seed, double scale = 1.0, double shift = 2.0) {
  if (n < 1) throw ArgumentError("stable_matrix: n must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat R(n, n);
  for (Eigen::Index j = 0; j < R.cols(); ++j)
    for (Eigen::Index i = 0; i < R.rows(); ++i) R(i, j) = normal(rng);
  Eigen::JacobiSVD<Mat> svd(R);
  R /= svd.singularValues()(0);
  Mat A = scale * R;
  A.diagonal().array() -= shift;
  if (!(spectral_abscissa(A) < 0.0)) throw ConfigError("stable_matrix: requested matrix is not Hurwitz");
  return A;
}

struct ControlBenchmark {
  BenchmarkKind kind = BenchmarkKind::lti_stable;
  Mat A;

  ControlBenchmark(BenchmarkKind k, Mat a) : kind(k), A(std::move(a)) {
    if (A.rows() != A.cols() || A.rows() == 0) throw ConfigError("benchmark matrix must be square");
    if (!(spectral_abscissa(A) < 0.0)) throw ConfigError("benchmark matrix must have eigenvalues in the open left half-plane");
  }

  [[nodiscard]] int n() const { return static_cast<int>(A.rows()); }

  [[nodiscard]] Vec desired(double t) const {
    if (kind == BenchmarkKind::lti_stable) return Vec::Constant(n(), 1.5);
    const double s = std::sqrt(2.0) * std::numbers::pi;
    return Vec::Constant(n(), std::sin(2.0 * std::numbers::pi * t + std::cos(s * t)));
  }

  [[nodiscard]] Vec desired_rate(double t) const {
    if (kind == BenchmarkKind::lti_stable) return Vec::Zero(n());
    const double s = std::sqrt(2.0) * std::numbers::pi;
    const double phase = 2.0 * std::numbers::pi * t + std::cos(s * t);
    return Vec::Constant(n(), std::cos(phase) * (2.0 * std::numbers::pi - s * std::sin(s * t)));
  }

  /// Unknown matched dynamics h(x).
  [[nodiscard]] Vec uncertainty(const Vec& x) const {
    detail::require_dim(x.size(), n(), "ControlBenchmark::uncertainty");
    if (kind == BenchmarkKind::lti_stable) {
      return x.unaryExpr([](double v) { return std::sin(v) * std::erf(v); });
    }
    return 0.25 * x.array().pow(4).matrix();
  }

  [[nodiscard]] Vec error(const Vec& x, double t) const { return x - desired(t); }

  [[nodiscard]] Mat error_input_gain() const { return Mat::Identity(n(), n()); }

  [[nodiscard]] Vec rhs(const Vec& x, const Vec& u, double t) const {
    detail::require_dim(x.size(), n(), "control_rhs(x)");
    detail::require_dim(u.size(), n(), "control_rhs(u)");
    return A * (x - desired(t)) + desired_rate(t) + u - uncertainty(x);
  }
};

[[nodiscard]] inline Vec control_rhs(const ControlBenchmark& bench, const Vec& x, const Vec& u, double t) {
  return bench.rhs(x, u, t);
}

}  // namespace rfadapt
