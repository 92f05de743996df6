#pragma once

// Numerical checks on operator kernels and their random feature banks.

#include "rfadapt/features.hpp"

#include <cstdint>
#include <random>

namespace rfadapt {

struct KernelCheckReport {
  double max_z = 0.0;               // worst |estimate - exact| / standard error
  double max_abs_error = 0.0;       // worst entrywise |estimate - exact|
  double symmetry_error = 0.0;      // max |K(x, y) - K(y, x)^T|
  double min_quadratic_form = 0.0;  // min over trials of sum <v_i, K(x_i, x_j) v_j>
  int pairs = 0;
  long long features = 0;
};

/// Per-feature Monte-Carlo reconstruction of K(x, y) from `bank`, scored
/// against the closed form entrywise in units of the empirical standard error.
[[nodiscard]] inline KernelCheckReport check_kernel(const FeatureBank& bank, int pairs, double radius,
                                                    std::uint64_t seed) {
  if (pairs < 1) throw ArgumentError("check_kernel: pairs must be positive");
  const OperatorKernelSpec& spec = bank.kernel();
  const int n = spec.n;
  const int d = spec.d;
  const int d1 = spec.d1;
  const int K = bank.size();
  Rng rng(seed);
  std::uniform_real_distribution<double> coord(-radius, radius);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_point = [&]() {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = coord(rng);
    return v;
  };

  KernelCheckReport rep;
  rep.pairs = pairs;
  rep.features = K;
  rep.min_quadratic_form = std::numeric_limits<double>::infinity();
  for (int p = 0; p < pairs; ++p) {
    const Vec x = random_point();
    const Vec y = random_point();
    const Mat exact = eval_operator_kernel(spec, x, y);
    rep.symmetry_error = std::max(rep.symmetry_error, (exact - eval_operator_kernel(spec, y, x).transpose()).cwiseAbs().maxCoeff());
    const Mat px = bank.matrix(x);
    const Mat py = bank.matrix(y);
    Mat sum = Mat::Zero(d, d);
    Mat sum_sq = Mat::Zero(d, d);
    for (int i = 0; i < K; ++i) {
      const Mat term = px.middleCols(static_cast<Eigen::Index>(i) * d1, d1) * py.middleCols(static_cast<Eigen::Index>(i) * d1, d1).transpose();
      sum += term;
      sum_sq += term.cwiseProduct(term);
    }
    const Mat mean = sum / K;
    const Mat var = (sum_sq / K - mean.cwiseProduct(mean)) * (static_cast<double>(K) / (K - 1.0));
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        const double err = std::abs(mean(a, b) - exact(a, b));
        rep.max_abs_error = std::max(rep.max_abs_error, err);
        const double se = std::sqrt(std::max(var(a, b), 0.0) / K);
        const double z = se > 0.0 ? err / se : (err <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity());
        rep.max_z = std::max(rep.max_z, z);
      }
    }

    // Gram quadratic form on a handful of points.
    const int N = 1 + p % 5;
    std::vector<Vec> pts;
    std::vector<Vec> dirs;
    for (int i = 0; i < N; ++i) {
      pts.push_back(random_point());
      Vec v(d);
      for (int k = 0; k < d; ++k) v(k) = normal(rng);
      dirs.push_back(v);
    }
    double form = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) form += dirs[i].dot(eval_operator_kernel(spec, pts[i], pts[j]) * dirs[j]);
    rep.min_quadratic_form = std::min(rep.min_quadratic_form, form);
  }
  return rep;
}

}  // namespace rfadapt
