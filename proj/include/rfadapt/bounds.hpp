#pragma once

// Feature-count and approximation-error calculators for random feature
// expansions of functions in F2(B_h).

#include "rfadapt/core.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace rfadapt {

/// Tail bound on |M(w)|: P(|M(w)| > B_Phi(delta)) <= delta.
using FeatureNormBound = std::function<double(double)>;

struct BoundInputs {
  double B_h = 1.0;  // sup-norm bound on the F2 density
  double B_X = 1.0;  // radius of the approximation domain
  int n = 1;         // state dimension (0 allowed: scalar feature, no x dependence in the bound)
  int d1 = 1;        // feature block width
  double delta = 0.5;  // failure probability
  FeatureNormBound B_Phi = [](double) { return 1.0; };
  double second_moment = 1.0;    // E |M(w)|^2
  double w_second_moment = 1.0;  // E |w|^2
  // Stability constants for the feature-count requirement.
  double beta = 1.0;  // rho(r) = beta r
  double L = 1.0;     // mu2(r) = L r
  double mu = 1.0;    // mu1(r) = mu r
  double B_ge = 1.0;
  double B_gradQ = 1.0;
  double C_h_delta = 1.0;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string(name) + " must be positive and finite");
    };
    positive(B_h, "B_h");
    positive(B_X, "B_X");
    positive(second_moment, "second_moment");
    positive(w_second_moment, "w_second_moment");
    positive(beta, "beta");
    positive(L, "L");
    positive(mu, "mu");
    positive(B_ge, "B_ge");
    positive(B_gradQ, "B_gradQ");
    positive(C_h_delta, "C_h_delta");
    if (n < 0) throw ArgumentError("n must be nonnegative");
    if (d1 < 1) throw ArgumentError("d1 must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
    if (!B_Phi) throw ArgumentError("B_Phi must be set");
  }
};

/// B_Phi for Gaussian spectral measures, sqrt(n) + 2 sigma_w sqrt(log(1/delta)).
[[nodiscard]] inline FeatureNormBound gaussian_feature_norm_bound(int n, double sigma_w) {
  return [n, sigma_w](double delta) { return std::sqrt(static_cast<double>(n)) + 2.0 * sigma_w * std::sqrt(std::log(1.0 / delta)); };
}

/// B_Phi that does not depend on delta (decomposable kernels: |B|).
[[nodiscard]] inline FeatureNormBound constant_feature_norm_bound(double value) {
  return [value](double) { return value; };
}

/// Real-valued right-hand side of the feature-count requirement.
[[nodiscard]] inline double required_features_real(const BoundInputs& in, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ArgumentError("required_features: epsilon must be positive");
  in.validate();
  const double geometry = in.B_X * std::sqrt(static_cast<double>(in.n)) + std::sqrt(static_cast<double>(in.d1));
  const double ratio = in.L / in.mu;
  const double gain = in.B_ge * in.B_gradQ * in.C_h_delta;
  return 4.0 / (in.beta * in.beta * epsilon * epsilon) * ratio * ratio * gain * gain * geometry * geometry;
}

/// Smallest integer K meeting the requirement. Values within a few ulps of an
/// integer are snapped to it before the ceiling.
[[nodiscard]] inline long long required_features(const BoundInputs& in, double epsilon) {
  const double k = required_features_real(in, epsilon);
  if (!std::isfinite(k) || k > static_cast<double>(std::numeric_limits<long long>::max())) {
    throw ArgumentError("required_features: feature count overflows");
  }
  const double nearest = std::round(k);
  const double snapped = std::abs(k - nearest) <= 1e-9 * std::max(1.0, k) ? nearest : std::ceil(k);
  return std::max(1LL, static_cast<long long>(snapped));
}

/// High-probability uniform approximation bound for K features.
[[nodiscard]] inline double approximation_bound(const BoundInputs& in, long long K) {
  if (K < 1) throw ArgumentError("approximation_bound: K must be at least 1");
  in.validate();
  const double kd = static_cast<double>(K);
  const double eta = in.delta / (2.0 * kd);
  const double rademacher = 2.0 * in.B_X * std::sqrt(in.w_second_moment) + 2.0 * std::sqrt(static_cast<double>(in.d1)) +
                            std::sqrt(std::log(2.0 / in.delta));
  const double tail = std::sqrt(0.5 * in.delta * in.second_moment);
  return in.B_h / std::sqrt(kd) * (2.0 * in.B_Phi(eta) * rademacher + tail);
}

}  // namespace rfadapt
