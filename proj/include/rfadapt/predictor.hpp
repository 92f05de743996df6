#pragma once

// Adaptive prediction in a constant metric M = c I:
//   x_hat' = Y(x_hat, t) alpha_p + Psi(x_hat) alpha_m - zeta (x_hat - x(t)),
//   Q(x_hat, t) = c |x_hat - x(t)|^2,   grad Q = 2 c (x_hat - x(t)),
//   d/dt grad psi(alpha) = -gamma sigma'(Q) [Y | Psi]^T grad Q.
//
// Also the hybrid discrete-sampling predictor: open-loop flow between
// measurements followed by the contracting update k(y, x) = x + sqrt(beta) (y - x).

#include "rfadapt/deadzone.hpp"
#include "rfadapt/features.hpp"
#include "rfadapt/mirror.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <functional>

namespace rfadapt {

using RegressorFn = std::function<Mat(const Vec&, double)>;

struct PredictorSpec {
  double zeta = 1.0;
  double metric_scale = 1.0;
  double gamma = 1.0;
  DeadzoneSpec deadzone = DeadzoneSpec::none();
  MirrorMap mirror_p;
  MirrorMap mirror_m;

  void validate() const {
    if (!(zeta > 0.0)) throw ConfigError("predictor feedback gain zeta must be positive");
    if (!(metric_scale > 0.0)) throw ConfigError("metric scale must be positive");
    if (!(gamma > 0.0)) throw ConfigError("predictor learning rate must be positive");
    deadzone.validate();
    mirror_p.validate();
    mirror_m.validate();
  }
};

/// Squared distance in the constant metric c I; geodesics are straight lines.
[[nodiscard]] inline double metric_energy(double c, const Vec& x_hat, const Vec& x) { return c * (x_hat - x).squaredNorm(); }

struct PredictorState {
  Vec x_hat;
  AdaptState adapt;
};

struct PredictorRates {
  Vec x_hat;
  Vec dual_p;
  Vec dual_m;
  Vec model;  // f_hat(x_hat)
  double energy = 0.0;
};

template <FeatureMap Map>
class AdaptivePredictor {
 public:
  AdaptivePredictor(PredictorSpec spec, Map features, RegressorFn regressor = {}, int physical_params = 0)
      : spec_(spec), features_(std::move(features)), regressor_(std::move(regressor)), p_(physical_params) {
    spec_.validate();
    if (p_ < 0) throw ConfigError("physical parameter count must be nonnegative");
    if (p_ > 0 && !regressor_) throw ConfigError("physical parameters need a regressor");
  }

  [[nodiscard]] const PredictorSpec& spec() const { return spec_; }
  [[nodiscard]] const Map& features() const { return features_; }
  [[nodiscard]] int state_dim() const { return features_.input_dim(); }

  [[nodiscard]] PredictorState initial_state(const Vec& x_hat0, const Vec& alpha_p0 = {}, const Vec& alpha_m0 = {}) const {
    detail::require_dim(x_hat0.size(), state_dim(), "AdaptivePredictor::initial_state(x_hat)");
    const Vec ap = alpha_p0.size() == 0 ? Vec::Zero(p_) : alpha_p0;
    const Vec am = alpha_m0.size() == 0 ? Vec::Zero(features_.columns()) : alpha_m0;
    detail::require_dim(ap.size(), p_, "AdaptivePredictor::initial_state(alpha_p)");
    detail::require_dim(am.size(), features_.columns(), "AdaptivePredictor::initial_state(alpha_m)");
    return {x_hat0, AdaptState::initial(ap, am, spec_.mirror_p, spec_.mirror_m)};
  }

  [[nodiscard]] Vec model(const PredictorState& s, const Vec& x, double t) const {
    Vec out = features_.apply(x, s.adapt.primal_m());
    if (p_ > 0) out += regressor_(x, t) * s.adapt.primal_p();
    return out;
  }

  [[nodiscard]] PredictorRates rates(const PredictorState& s, const Vec& x, double t) const {
    detail::require_dim(x.size(), state_dim(), "AdaptivePredictor::rates(x)");
    PredictorRates r;
    const Vec diff = s.x_hat - x;
    r.energy = spec_.metric_scale * diff.squaredNorm();
    r.model = model(s, s.x_hat, t);
    r.x_hat = r.model - spec_.zeta * diff;
    const Vec gradQ = 2.0 * spec_.metric_scale * diff;
    const double gain = spec_.gamma * deadzone_slope(spec_.deadzone, r.energy);
    r.dual_m = -gain * features_.apply_transpose(s.x_hat, gradQ);
    if (p_ > 0) {
      r.dual_p = -spec_.gamma * deadzone_slope(spec_.deadzone, r.energy) * (regressor_(s.x_hat, t).transpose() * gradQ);
    } else {
      r.dual_p = Vec::Zero(0);
    }
    return r;
  }

  /// One forward Euler step of (x_hat, duals). Returns the rates used.
  PredictorRates step(PredictorState& s, const Vec& x, double t, double dt) const {
    PredictorRates r = rates(s, x, t);
    s.x_hat += dt * r.x_hat;
    s.adapt.dual_m += dt * r.dual_m;
    s.adapt.dual_p += dt * r.dual_p;
    return r;
  }

 private:
  PredictorSpec spec_;
  Map features_;
  RegressorFn regressor_;
  int p_ = 0;
};

template <FeatureMap Map>
[[nodiscard]] AdaptivePredictor<Map> build_predictor(Map features, double zeta, double gamma = 1.0,
                                                     DeadzoneSpec deadzone = DeadzoneSpec::none(),
                                                     double metric_scale = 1.0) {
  PredictorSpec spec;
  spec.zeta = zeta;
  spec.gamma = gamma;
  spec.deadzone = deadzone;
  spec.metric_scale = metric_scale;
  return AdaptivePredictor<Map>(spec, std::move(features));
}

struct DiscretePredictorSpec {
  double beta = 0.5;
  double metric_scale = 1.0;

  void validate() const {
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("discrete predictor beta must lie in (0, 1)");
    if (!(metric_scale > 0.0)) throw ConfigError("metric scale must be positive");
  }
};

/// Maps a state to its image under the open-loop flow over dt.
using FlowFn = std::function<Vec(const Vec&, double)>;

[[nodiscard]] inline Vec measurement_update(double beta, const Vec& y, const Vec& x) {
  return x + std::sqrt(beta) * (y - x);
}

struct DiscreteStep {
  Vec x_hat;
  double energy_before = 0.0;
  double energy_after = 0.0;
};

/// x_hat_{i+1} = k(phi_dt(x_hat_i), x_{i+1}), with energies E(x_hat_i, x_i), E(x_hat_{i+1}, x_{i+1}).
[[nodiscard]] inline DiscreteStep discrete_sampling_step(const DiscretePredictorSpec& spec, const Vec& x_hat,
                                                         const Vec& x, const Vec& x_next, const FlowFn& flow,
                                                         double dt) {
  spec.validate();
  if (!(dt > 0.0)) throw ArgumentError("discrete_sampling_step: dt must be positive");
  detail::require_dim(x.size(), x_hat.size(), "discrete_sampling_step(x)");
  detail::require_dim(x_next.size(), x_hat.size(), "discrete_sampling_step(x_next)");
  DiscreteStep out;
  out.energy_before = metric_energy(spec.metric_scale, x_hat, x);
  const Vec half = flow(x_hat, dt);
  out.x_hat = measurement_update(spec.beta, half, x_next);
  out.energy_after = metric_energy(spec.metric_scale, out.x_hat, x_next);
  return out;
}

/// Exact flow of x' = A x.
[[nodiscard]] inline FlowFn lti_flow(const Mat& A) {
  if (A.rows() != A.cols()) throw ArgumentError("lti_flow: A must be square");
  return [A](const Vec& x, double dt) -> Vec {
    const Mat step = (A * dt).exp();
    return step * x;
  };
}

/// 2 lambda_max((A + A^T) / 2), the expansion rate of |x - y|^2 under x' = A x.
[[nodiscard]] inline double lti_expansion_rate(const Mat& A) {
  const Mat sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
  return 2.0 * eig.eigenvalues().maxCoeff();
}

}  // namespace rfadapt
