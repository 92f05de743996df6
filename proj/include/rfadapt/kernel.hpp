#pragma once

// Scalar and operator-valued kernels built on a Gaussian base kernel
//   k(r) = exp(-|r|^2 / (2 sigma^2)).
// Matrix-valued variants are evaluated in closed form from the Hessian
//   grad^2 k(r) = k(r) (r r^T / sigma^4 - I / sigma^2).

#include "rfadapt/core.hpp"

#include <functional>
#include <string>
#include <string_view>

namespace rfadapt {

struct ScalarKernelSpec {
  double sigma = 1.0;  // bandwidth, state-space length units

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw ConfigError("scalar kernel bandwidth must be positive, got " + std::to_string(sigma));
    }
  }

  /// Standard deviation of the spectral measure, 1 / sigma.
  [[nodiscard]] double spectral_scale() const { return 1.0 / sigma; }
};

[[nodiscard]] inline double eval_scalar_kernel(const ScalarKernelSpec& spec, const Vec& x, const Vec& y) {
  if (x.size() != y.size()) {
    throw ArgumentError("eval_scalar_kernel: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                        std::to_string(y.size()) + ")");
  }
  return std::exp(-(x - y).squaredNorm() / (2.0 * spec.sigma * spec.sigma));
}

/// Hessian of the Gaussian base kernel at offset r.
[[nodiscard]] inline Mat gaussian_hessian(const ScalarKernelSpec& spec, const Vec& r) {
  const double s2 = spec.sigma * spec.sigma;
  const double k = std::exp(-r.squaredNorm() / (2.0 * s2));
  Mat hess = (r * r.transpose()) / (s2 * s2);
  hess.diagonal().array() -= 1.0 / s2;
  return k * hess;
}

enum class KernelVariant { decomposable, curl_free, divergence_free, symplectic, finite_feature };

[[nodiscard]] inline std::string_view to_string(KernelVariant v) {
  switch (v) {
    case KernelVariant::decomposable: return "decomposable";
    case KernelVariant::curl_free: return "curl-free";
    case KernelVariant::divergence_free: return "divergence-free";
    case KernelVariant::symplectic: return "symplectic";
    case KernelVariant::finite_feature: return "finite-feature";
  }
  return "unknown";
}

[[nodiscard]] inline KernelVariant parse_kernel_variant(std::string_view name) {
  if (name == "decomposable") return KernelVariant::decomposable;
  if (name == "curl-free") return KernelVariant::curl_free;
  if (name == "divergence-free") return KernelVariant::divergence_free;
  if (name == "symplectic") return KernelVariant::symplectic;
  if (name == "finite-feature") return KernelVariant::finite_feature;
  throw ConfigError("unknown kernel variant '" + std::string(name) + "'");
}

/// Canonical symplectic matrix [[0, I], [-I, 0]] of even dimension.
[[nodiscard]] inline Mat canonical_symplectic(int dim) {
  if (dim <= 0 || dim % 2 != 0) {
    throw ConfigError("symplectic matrix needs a positive even dimension, got " + std::to_string(dim));
  }
  const int half = dim / 2;
  Mat J = Mat::Zero(dim, dim);
  J.topRightCorner(half, half).setIdentity();
  J.bottomLeftCorner(half, half) = -Mat::Identity(half, half);
  return J;
}

/// Explicit feature matrix x -> Phi(x) in R^{d x p}; kernel is Phi(x) Phi(y)^T.
using FeatureFn = std::function<Mat(const Vec&)>;

struct OperatorKernelSpec {
  KernelVariant variant = KernelVariant::decomposable;
  ScalarKernelSpec base{};
  int n = 1;   // input (state) dimension
  int d = 1;   // output dimension
  int d1 = 1;  // columns per feature block
  Mat factor;  // decomposable: B with A = B B^T (d x d1); symplectic: J (d x d)
  FeatureFn features;  // finite-feature only

  static OperatorKernelSpec decomposable(const Mat& B, double sigma, int n) {
    OperatorKernelSpec s;
    s.variant = KernelVariant::decomposable;
    s.base.sigma = sigma;
    s.n = n;
    s.d = static_cast<int>(B.rows());
    s.d1 = static_cast<int>(B.cols());
    s.factor = B;
    s.validate();
    return s;
  }

  /// Decomposable kernel from a symmetric PSD output matrix A; the factor is
  /// taken from its eigendecomposition.
  static OperatorKernelSpec decomposable_from_matrix(const Mat& A, double sigma, int n) {
    if (A.rows() != A.cols()) throw ConfigError("decomposable kernel matrix must be square");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff())) {
      throw ConfigError("decomposable kernel matrix must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(A);
    const double tol = 1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -tol) throw ConfigError("decomposable kernel matrix must be PSD");
    const Vec root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return decomposable(eig.eigenvectors() * root.asDiagonal(), sigma, n);
  }

  static OperatorKernelSpec curl_free(int n, double sigma) {
    OperatorKernelSpec s;
    s.variant = KernelVariant::curl_free;
    s.base.sigma = sigma;
    s.n = s.d = n;
    s.d1 = 1;
    s.validate();
    return s;
  }

  static OperatorKernelSpec divergence_free(int n, double sigma) {
    OperatorKernelSpec s;
    s.variant = KernelVariant::divergence_free;
    s.base.sigma = sigma;
    s.n = s.d = s.d1 = n;
    s.validate();
    return s;
  }

  static OperatorKernelSpec symplectic(int dim, double sigma) { return symplectic(canonical_symplectic(dim), sigma); }

  static OperatorKernelSpec symplectic(const Mat& J, double sigma) {
    OperatorKernelSpec s;
    s.variant = KernelVariant::symplectic;
    s.base.sigma = sigma;
    s.n = s.d = static_cast<int>(J.rows());
    s.d1 = 1;
    s.factor = J;
    s.validate();
    return s;
  }

  static OperatorKernelSpec finite_feature(FeatureFn fn, int n, int d, int p) {
    OperatorKernelSpec s;
    s.variant = KernelVariant::finite_feature;
    s.n = n;
    s.d = d;
    s.d1 = p;
    s.features = std::move(fn);
    s.validate();
    return s;
  }

  [[nodiscard]] bool translation_invariant() const { return variant != KernelVariant::finite_feature; }

  void validate() const {
    if (n < 1 || d < 1 || d1 < 1) throw ConfigError("kernel dimensions must be positive");
    if (translation_invariant()) base.validate();
    switch (variant) {
      case KernelVariant::decomposable:
        if (factor.rows() != d || factor.cols() != d1) {
          throw ConfigError("decomposable factor must be d x d1");
        }
        break;
      case KernelVariant::curl_free:
      case KernelVariant::divergence_free:
        if (n != d) throw ConfigError(std::string(to_string(variant)) + " kernel requires n = d");
        break;
      case KernelVariant::symplectic: {
        if (n % 2 != 0) {
          throw ConfigError("symplectic kernel requires an even dimension, got " + std::to_string(n));
        }
        if (factor.rows() != n || factor.cols() != n) throw ConfigError("symplectic matrix must be n x n");
        const Mat I = Mat::Identity(n, n);
        if ((factor.transpose() * factor - I).norm() > 1e-12 || (factor.transpose() + factor).norm() > 1e-12) {
          throw ConfigError("symplectic matrix must satisfy J^T J = I and J^T = -J");
        }
        break;
      }
      case KernelVariant::finite_feature:
        if (!features) throw ConfigError("finite-feature kernel needs a feature function");
        break;
    }
  }
};

[[nodiscard]] inline Mat eval_operator_kernel(const OperatorKernelSpec& spec, const Vec& x, const Vec& y) {
  detail::require_dim(x.size(), spec.n, "eval_operator_kernel(x)");
  detail::require_dim(y.size(), spec.n, "eval_operator_kernel(y)");
  switch (spec.variant) {
    case KernelVariant::decomposable:
      return eval_scalar_kernel(spec.base, x, y) * (spec.factor * spec.factor.transpose());
    case KernelVariant::curl_free:
      return -gaussian_hessian(spec.base, x - y);
    case KernelVariant::divergence_free: {
      const Mat hess = gaussian_hessian(spec.base, x - y);
      Mat out = hess;
      out.diagonal().array() -= hess.trace();
      return out;
    }
    case KernelVariant::symplectic:
      return -spec.factor * gaussian_hessian(spec.base, x - y) * spec.factor.transpose();
    case KernelVariant::finite_feature: {
      const Mat px = spec.features(x);
      const Mat py = spec.features(y);
      if (px.rows() != spec.d || px.cols() != spec.d1 || py.rows() != spec.d || py.cols() != spec.d1) {
        throw ArgumentError("finite-feature map returned a matrix of the wrong shape");
      }
      return px * py.transpose();
    }
  }
  throw UnsupportedError("unknown kernel variant");
}

}  // namespace rfadapt
