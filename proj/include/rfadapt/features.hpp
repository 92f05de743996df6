#pragma once

// Random Fourier feature banks for operator-valued kernels.
//
// Each feature is theta = (w, b) with w drawn from the spectral measure of the
// Gaussian base kernel (normal, covariance sigma^-2 I) and b uniform on
// [0, 2 pi). The block for one feature is
//   Phi(x, theta) = cos(w^T x + b) M(w),
// with a sqrt(2) folded into M so that E[Phi(x) Phi(y)^T] = K(x, y) exactly.
// The stacked matrix Psi(x) = [Phi(x, theta_1), ..., Phi(x, theta_K)] carries
// no 1/K; (1/K) Psi(x) Psi(y)^T is the Monte-Carlo kernel estimate.

#include "rfadapt/kernel.hpp"

#include <concepts>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace rfadapt {

struct FeatureSample {
  Vec w;           // frequency, inverse state units
  double b = 0.0;  // phase in [0, 2 pi)
};

using Rng = std::mt19937_64;

[[nodiscard]] inline FeatureSample sample_feature(const OperatorKernelSpec& spec, Rng& rng) {
  if (!spec.translation_invariant()) {
    throw UnsupportedError("sample_feature: " + std::string(to_string(spec.variant)) +
                           " kernel has no spectral measure");
  }
  std::normal_distribution<double> normal(0.0, spec.base.spectral_scale());
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  FeatureSample s;
  s.w.resize(spec.n);
  for (int j = 0; j < spec.n; ++j) s.w(j) = normal(rng);
  s.b = phase(rng);
  if (s.b >= 2.0 * std::numbers::pi) s.b = 0.0;  // generate_canonical may round up to 1
  return s;
}

/// M(w) for a translation-invariant variant, sqrt(2) included.
[[nodiscard]] inline Mat feature_block_factor(const OperatorKernelSpec& spec, const Vec& w) {
  const double r2 = std::numbers::sqrt2;
  switch (spec.variant) {
    case KernelVariant::decomposable:
      return r2 * spec.factor;
    case KernelVariant::curl_free:
      return r2 * w;
    case KernelVariant::divergence_free: {
      const double nw = w.norm();
      Mat m = Mat::Identity(spec.n, spec.n) * nw;
      if (nw > 0.0) m -= (w * w.transpose()) / nw;
      return r2 * m;
    }
    case KernelVariant::symplectic:
      return r2 * (spec.factor * w);
    case KernelVariant::finite_feature:
      break;
  }
  throw UnsupportedError("feature_block_factor: finite-feature kernels have no random factorization");
}

// Anything the parametric adaptation laws can drive: a d x p matrix-valued
// map of the state together with fast products against it.
template <class F>
concept FeatureMap = requires(const F& f, const Vec& x, const Vec& v) {
  { f.input_dim() } -> std::convertible_to<int>;
  { f.output_dim() } -> std::convertible_to<int>;
  { f.columns() } -> std::convertible_to<Eigen::Index>;
  { f.matrix(x) } -> std::convertible_to<Mat>;
  { f.apply(x, v) } -> std::convertible_to<Vec>;
  { f.apply_transpose(x, v) } -> std::convertible_to<Vec>;
  { f.kernel_normalization() } -> std::convertible_to<double>;
};

class FeatureBank {
 public:
  FeatureBank(OperatorKernelSpec kernel, int count, std::uint64_t seed)
      : kernel_(std::move(kernel)), seed_(seed) {
    kernel_.validate();
    if (count < 1) throw ArgumentError("feature bank needs at least one feature");
    if (!kernel_.translation_invariant()) {
      throw UnsupportedError("feature bank requires a translation-invariant kernel");
    }
    Rng rng(seed);
    samples_.reserve(static_cast<std::size_t>(count));
    frequencies_.resize(count, kernel_.n);
    phases_.resize(count);
    for (int i = 0; i < count; ++i) {
      samples_.push_back(sample_feature(kernel_, rng));
      frequencies_.row(i) = samples_.back().w.transpose();
      phases_(i) = samples_.back().b;
    }
    if (kernel_.d1 == 1) {
      columns_.resize(kernel_.d, count);
      for (int i = 0; i < count; ++i) columns_.col(i) = feature_block_factor(kernel_, samples_[i].w);
    } else if (kernel_.variant == KernelVariant::divergence_free) {
      blocks_.reserve(samples_.size());
      for (const auto& s : samples_) blocks_.push_back(feature_block_factor(kernel_, s.w));
    }
  }

  [[nodiscard]] const OperatorKernelSpec& kernel() const { return kernel_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] int size() const { return static_cast<int>(samples_.size()); }
  [[nodiscard]] std::span<const FeatureSample> samples() const { return samples_; }
  [[nodiscard]] const Mat& frequencies() const { return frequencies_; }
  [[nodiscard]] const Vec& phases() const { return phases_; }

  [[nodiscard]] int input_dim() const { return kernel_.n; }
  [[nodiscard]] int output_dim() const { return kernel_.d; }
  [[nodiscard]] Eigen::Index columns() const { return static_cast<Eigen::Index>(size()) * kernel_.d1; }
  [[nodiscard]] double kernel_normalization() const { return 1.0 / size(); }

  /// cos(w_i^T x + b_i) for every feature.
  [[nodiscard]] Vec cosines(const Vec& x) const {
    detail::require_dim(x.size(), kernel_.n, "FeatureBank");
    return (frequencies_ * x + phases_).array().cos().matrix();
  }

  [[nodiscard]] Mat block_factor(int i) const { return feature_block_factor(kernel_, samples_.at(i).w); }

  /// Psi(x), d x (K d1).
  [[nodiscard]] Mat matrix(const Vec& x) const {
    const Vec c = cosines(x);
    const int d1 = kernel_.d1;
    Mat psi(kernel_.d, columns());
    if (d1 == 1) {
      psi = columns_ * c.asDiagonal();
    } else if (kernel_.variant == KernelVariant::decomposable) {
      const Mat M = std::numbers::sqrt2 * kernel_.factor;
      for (int i = 0; i < size(); ++i) psi.middleCols(i * d1, d1) = c(i) * M;
    } else {
      for (int i = 0; i < size(); ++i) psi.middleCols(i * d1, d1) = c(i) * blocks_[i];
    }
    return psi;
  }

  /// Psi(x) * weights.
  [[nodiscard]] Vec apply(const Vec& x, const Vec& weights) const {
    detail::require_dim(weights.size(), columns(), "FeatureBank::apply(weights)");
    const Vec c = cosines(x);
    const int d1 = kernel_.d1;
    if (d1 == 1) return columns_ * c.cwiseProduct(weights);
    if (kernel_.variant == KernelVariant::decomposable) {
      const auto W = weights.reshaped(d1, size());
      return std::numbers::sqrt2 * (kernel_.factor * (W * c));
    }
    Vec out = Vec::Zero(kernel_.d);
    for (int i = 0; i < size(); ++i) out.noalias() += c(i) * (blocks_[i] * weights.segment(i * d1, d1));
    return out;
  }

  /// Psi(x)^T * v.
  [[nodiscard]] Vec apply_transpose(const Vec& x, const Vec& v) const {
    detail::require_dim(v.size(), kernel_.d, "FeatureBank::apply_transpose(v)");
    const Vec c = cosines(x);
    const int d1 = kernel_.d1;
    if (d1 == 1) return c.cwiseProduct(columns_.transpose() * v);
    Vec out(columns());
    if (kernel_.variant == KernelVariant::decomposable) {
      const Vec proj = std::numbers::sqrt2 * (kernel_.factor.transpose() * v);
      for (int i = 0; i < size(); ++i) out.segment(i * d1, d1) = c(i) * proj;
      return out;
    }
    for (int i = 0; i < size(); ++i) out.segment(i * d1, d1) = c(i) * (blocks_[i].transpose() * v);
    return out;
  }

 private:
  OperatorKernelSpec kernel_;
  std::uint64_t seed_;
  std::vector<FeatureSample> samples_;
  Mat frequencies_;  // K x n, row i = w_i^T
  Vec phases_;
  Mat columns_;             // d x K when d1 == 1
  std::vector<Mat> blocks_;  // divergence-free M(w_i)
};

[[nodiscard]] inline Mat feature_matrix(const FeatureBank& bank, const Vec& x) { return bank.matrix(x); }

/// Fixed, explicitly given feature matrix Phi(x) (d x p). Its kernel is
/// Phi(x) Phi(y)^T with no normalization.
class FixedFeatureMap {
 public:
  FixedFeatureMap(FeatureFn fn, int n, int d, int p) : spec_(OperatorKernelSpec::finite_feature(std::move(fn), n, d, p)) {}
  explicit FixedFeatureMap(OperatorKernelSpec spec) : spec_(std::move(spec)) {
    if (spec_.variant != KernelVariant::finite_feature) throw ConfigError("FixedFeatureMap needs a finite-feature kernel");
    spec_.validate();
  }

  [[nodiscard]] const OperatorKernelSpec& kernel() const { return spec_; }
  [[nodiscard]] int input_dim() const { return spec_.n; }
  [[nodiscard]] int output_dim() const { return spec_.d; }
  [[nodiscard]] Eigen::Index columns() const { return spec_.d1; }
  [[nodiscard]] double kernel_normalization() const { return 1.0; }

  [[nodiscard]] Mat matrix(const Vec& x) const {
    detail::require_dim(x.size(), spec_.n, "FixedFeatureMap");
    Mat phi = spec_.features(x);
    if (phi.rows() != spec_.d || phi.cols() != spec_.d1) {
      throw ArgumentError("finite-feature map returned a matrix of the wrong shape");
    }
    return phi;
  }
  [[nodiscard]] Vec apply(const Vec& x, const Vec& weights) const {
    detail::require_dim(weights.size(), spec_.d1, "FixedFeatureMap::apply(weights)");
    return matrix(x) * weights;
  }
  [[nodiscard]] Vec apply_transpose(const Vec& x, const Vec& v) const {
    detail::require_dim(v.size(), spec_.d, "FixedFeatureMap::apply_transpose(v)");
    return matrix(x).transpose() * v;
  }

 private:
  OperatorKernelSpec spec_;
};

/// Linear basis Phi(x) = I_d (x) x^T, so Phi(x) * vec(Theta) = Theta x for a
/// row-major d x n parameter matrix Theta.
[[nodiscard]] inline FixedFeatureMap linear_feature_map(int n) {
  auto fn = [n](const Vec& x) {
    Mat phi = Mat::Zero(n, n * n);
    for (int i = 0; i < n; ++i) phi.block(i, i * n, 1, n) = x.transpose();
    return phi;
  };
  return FixedFeatureMap(fn, n, n, n * n);
}

/// Elementwise dictionary Phi(x) = [x, sin x, cos x, x.^2, tanh x, 1] (n x 6).
[[nodiscard]] inline FixedFeatureMap elementwise_basis_map(int n) {
  auto fn = [n](const Vec& x) {
    Mat phi(n, 6);
    phi.col(0) = x;
    phi.col(1) = x.array().sin().matrix();
    phi.col(2) = x.array().cos().matrix();
    phi.col(3) = x.array().square().matrix();
    phi.col(4) = x.array().tanh().matrix();
    phi.col(5).setOnes();
    return phi;
  };
  return FixedFeatureMap(fn, n, n, 6);
}

static_assert(FeatureMap<FeatureBank>);
static_assert(FeatureMap<FixedFeatureMap>);

using TargetFn = std::function<Vec(const Vec&)>;

/// max over the grid of |Psi(x) weights - target(x)|_2.
template <FeatureMap Map>
[[nodiscard]] double empirical_sup_error(const Map& map, const Vec& weights, const TargetFn& target,
                                         std::span<const Vec> grid) {
  if (grid.empty()) throw ArgumentError("empirical_sup_error: empty grid");
  double worst = 0.0;
  for (const auto& x : grid) {
    const Vec t = target(x);
    detail::require_dim(t.size(), map.output_dim(), "empirical_sup_error(target)");
    worst = std::max(worst, (map.apply(x, weights) - t).norm());
  }
  return worst;
}

/// Ridge-regularized least squares on a grid:
///   min |G a - y|^2 + ridge * K * |a|^2,
/// with G the stacked Psi over grid points. The ridge is on the kernel scale
/// (the scale of (1/K) Psi Psi^T). Solved in whichever of the primal or dual
/// forms is smaller.
template <FeatureMap Map>
[[nodiscard]] Vec fit_least_squares(const Map& map, const TargetFn& target, std::span<const Vec> grid,
                                    double ridge) {
  if (grid.empty()) throw ArgumentError("fit_least_squares: empty grid");
  if (ridge < 0.0) throw ArgumentError("fit_least_squares: ridge must be nonnegative");
  const int d = map.output_dim();
  const Eigen::Index rows = static_cast<Eigen::Index>(grid.size()) * d;
  const Eigen::Index cols = map.columns();
  Mat G(rows, cols);
  Vec y(rows);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i) * d;
    G.middleRows(r, d) = map.matrix(grid[i]);
    const Vec t = target(grid[i]);
    detail::require_dim(t.size(), d, "fit_least_squares(target)");
    y.segment(r, d) = t;
  }
  const double lambda = ridge / map.kernel_normalization();
  if (rows <= cols) {
    Mat gram = Mat::Zero(rows, rows);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(G);
    gram.diagonal().array() += lambda;
    const Vec dual = gram.selfadjointView<Eigen::Lower>().ldlt().solve(y);
    return G.transpose() * dual;
  }
  Mat gram = Mat::Zero(cols, cols);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(G.transpose());
  gram.diagonal().array() += lambda;
  return gram.selfadjointView<Eigen::Lower>().ldlt().solve(G.transpose() * y);
}

/// Uniform grid on [-radius, radius]^n with `per_axis` points per axis.
[[nodiscard]] inline std::vector<Vec> cube_grid(int n, int per_axis, double radius) {
  if (n < 1 || per_axis < 2) throw ArgumentError("cube_grid: need n >= 1 and at least two points per axis");
  std::vector<Vec> pts;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  const double step = 2.0 * radius / (per_axis - 1);
  while (true) {
    Vec x(n);
    for (int j = 0; j < n; ++j) x(j) = -radius + step * idx[static_cast<std::size_t>(j)];
    pts.push_back(std::move(x));
    int j = 0;
    while (j < n && ++idx[static_cast<std::size_t>(j)] == per_axis) idx[static_cast<std::size_t>(j++)] = 0;
    if (j == n) break;
  }
  return pts;
}

}  // namespace rfadapt
