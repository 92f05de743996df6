#pragma once

// Equal-mass gravitational m-body problem in d dimensions,
//   H(q, p) = sum_i |p_i|^2 / 2 - sum_{i<j} 1 / |q_i - q_j|,
// state x = (q, p) in R^{2md}, dynamics x' = J grad H(x).
//
// The learned model is a random-feature Hamiltonian
//   H_hat(x) = sum_i alpha_i cos(w_i^T x + b_i),
// driven by the symplectic observer
//   x_hat' = J grad H_hat(x_hat) + k (x - x_hat).

#include "rfadapt/features.hpp"

#include <cstdint>
#include <random>
#include <utility>

namespace rfadapt {

struct HamiltonianSpec {
  int m = 2;               // bodies
  int d = 2;               // spatial dimension
  double k_gain = 5.0;     // measurement feedback gain
  double sigma_w = 0.5;    // spectral scale of the feature frequencies
  double floor = 1e-3;     // minimum admissible pairwise distance
  double min_initial_separation = 0.5;

  [[nodiscard]] int half_dim() const { return m * d; }
  [[nodiscard]] int state_dim() const { return 2 * m * d; }

  void validate() const {
    if (m < 2) throw ConfigError("m-body problem needs at least two bodies");
    if (d < 1) throw ConfigError("spatial dimension must be positive");
    if (!(k_gain > 0.0)) throw ConfigError("measurement gain k must be positive");
    if (!(sigma_w > 0.0)) throw ConfigError("sigma_w must be positive");
    if (!(floor > 0.0)) throw ConfigError("singularity floor must be positive");
  }

  /// Symplectic kernel matching the feature distribution w ~ N(0, sigma_w^2 I).
  [[nodiscard]] OperatorKernelSpec kernel() const { return OperatorKernelSpec::symplectic(state_dim(), 1.0 / sigma_w); }
};

namespace detail {
inline double checked_distance(const HamiltonianSpec& spec, const Vec& q, int i, int j) {
  const double r = (q.segment(i * spec.d, spec.d) - q.segment(j * spec.d, spec.d)).norm();
  if (!(r >= spec.floor)) {
    throw SingularityError("bodies " + std::to_string(i) + " and " + std::to_string(j) + " at distance " +
                           std::to_string(r) + " below floor " + std::to_string(spec.floor));
  }
  return r;
}
}  // namespace detail

[[nodiscard]] inline double hamiltonian(const HamiltonianSpec& spec, const Vec& q, const Vec& p) {
  detail::require_dim(q.size(), spec.half_dim(), "hamiltonian(q)");
  detail::require_dim(p.size(), spec.half_dim(), "hamiltonian(p)");
  double potential = 0.0;
  for (int i = 0; i < spec.m; ++i)
    for (int j = i + 1; j < spec.m; ++j) potential -= 1.0 / detail::checked_distance(spec, q, i, j);
  return 0.5 * p.squaredNorm() + potential;
}

/// (dH/dq, dH/dp).
[[nodiscard]] inline std::pair<Vec, Vec> hamiltonian_grads(const HamiltonianSpec& spec, const Vec& q, const Vec& p) {
  detail::require_dim(q.size(), spec.half_dim(), "hamiltonian_grads(q)");
  detail::require_dim(p.size(), spec.half_dim(), "hamiltonian_grads(p)");
  Vec dq = Vec::Zero(spec.half_dim());
  for (int i = 0; i < spec.m; ++i) {
    for (int j = i + 1; j < spec.m; ++j) {
      const double r = detail::checked_distance(spec, q, i, j);
      const Vec diff = q.segment(i * spec.d, spec.d) - q.segment(j * spec.d, spec.d);
      const Vec g = diff / (r * r * r);
      dq.segment(i * spec.d, spec.d) += g;
      dq.segment(j * spec.d, spec.d) -= g;
    }
  }
  return {dq, p};
}

/// J grad H(x) = (dH/dp, -dH/dq).
[[nodiscard]] inline Vec hamiltonian_rhs(const HamiltonianSpec& spec, const Vec& x) {
  detail::require_dim(x.size(), spec.state_dim(), "hamiltonian_rhs(x)");
  const int h = spec.half_dim();
  const auto [dq, dp] = hamiltonian_grads(spec, x.head(h), x.tail(h));
  Vec out(spec.state_dim());
  out.head(h) = dp;
  out.tail(h) = -dq;
  return out;
}

/// Seeded initial condition with zero total momentum and pairwise separation
/// at least spec.min_initial_separation. Two bodies start on a circular orbit;
/// larger systems get random momenta scaled to half the virial kinetic energy.
[[nodiscard]] inline Vec nbody_initial_state(const HamiltonianSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int h = spec.half_dim();
  const double box = 0.5 * spec.min_initial_separation * std::pow(static_cast<double>(spec.m), 1.0 / spec.d) + 0.5;
  std::uniform_real_distribution<double> uniform(-box, box);

  Vec q(h);
  for (int attempt = 0;; ++attempt) {
    if (attempt > 100000) throw ConfigError("could not place bodies with the requested separation");
    for (int i = 0; i < h; ++i) q(i) = uniform(rng);
    bool ok = true;
    for (int i = 0; i < spec.m && ok; ++i)
      for (int j = i + 1; j < spec.m && ok; ++j)
        ok = (q.segment(i * spec.d, spec.d) - q.segment(j * spec.d, spec.d)).norm() >= spec.min_initial_separation;
    if (ok) break;
  }
  Vec com = Vec::Zero(spec.d);
  for (int i = 0; i < spec.m; ++i) com += q.segment(i * spec.d, spec.d);
  com /= spec.m;
  for (int i = 0; i < spec.m; ++i) q.segment(i * spec.d, spec.d) -= com;

  Vec p = Vec::Zero(h);
  if (spec.m == 2 && spec.d >= 2) {
    const Vec rel = q.segment(0, spec.d) - q.segment(spec.d, spec.d);
    const double r = rel.norm();
    const Vec u = rel / r;
    Vec v(spec.d);
    for (int i = 0; i < spec.d; ++i) v(i) = normal(rng);
    v -= v.dot(u) * u;
    v.normalize();
    const double speed = std::sqrt(1.0 / (2.0 * r));
    p.segment(0, spec.d) = speed * v;
    p.segment(spec.d, spec.d) = -speed * v;
  } else {
    for (int i = 0; i < h; ++i) p(i) = normal(rng);
    Vec mean = Vec::Zero(spec.d);
    for (int i = 0; i < spec.m; ++i) mean += p.segment(i * spec.d, spec.d);
    mean /= spec.m;
    for (int i = 0; i < spec.m; ++i) p.segment(i * spec.d, spec.d) -= mean;
    double potential = 0.0;
    for (int i = 0; i < spec.m; ++i)
      for (int j = i + 1; j < spec.m; ++j) potential += 1.0 / detail::checked_distance(spec, q, i, j);
    const double kinetic = 0.5 * p.squaredNorm();
    if (kinetic > 0.0) p *= std::sqrt(0.25 * potential / kinetic);
  }
  Vec x(spec.state_dim());
  x.head(h) = q;
  x.tail(h) = p;
  return x;
}

/// grad H_hat(x) = -W^T (sin(W x + b) .* alpha).
[[nodiscard]] inline Vec model_hamiltonian_gradient(const FeatureBank& bank, const Vec& weights, const Vec& x) {
  detail::require_dim(weights.size(), bank.size(), "model_hamiltonian_gradient(weights)");
  detail::require_dim(x.size(), bank.input_dim(), "model_hamiltonian_gradient(x)");
  const Vec s = (bank.frequencies() * x + bank.phases()).array().sin().matrix();
  return -(bank.frequencies().transpose() * s.cwiseProduct(weights));
}

[[nodiscard]] inline double model_hamiltonian(const FeatureBank& bank, const Vec& weights, const Vec& x) {
  return bank.cosines(x).dot(weights);
}

/// J grad H_hat(x), the learned vector field.
[[nodiscard]] inline Vec model_dynamics(const FeatureBank& bank, const Vec& weights, const Vec& x) {
  const Vec g = model_hamiltonian_gradient(bank, weights, x);
  const Eigen::Index h = g.size() / 2;
  Vec out(g.size());
  out.head(h) = g.tail(h);
  out.tail(h) = -g.head(h);
  return out;
}

struct SymplecticRates {
  Vec drift;        // x_hat'
  Vec weight_rate;  // alpha'
};

/// Observer drift J grad H_hat(x_hat) + k (x - x_hat) and weight rate
///   -gamma ([grad_p Psi]^T q_tilde - [grad_q Psi]^T p_tilde),
/// with q_tilde = q_hat - q and p_tilde = p_hat - p.
[[nodiscard]] inline SymplecticRates symplectic_predictor_rhs(const HamiltonianSpec& spec, const FeatureBank& bank,
                                                              const Vec& weights, const Vec& x_hat, const Vec& x,
                                                              double gamma) {
  detail::require_dim(x_hat.size(), spec.state_dim(), "symplectic_predictor_rhs(x_hat)");
  detail::require_dim(x.size(), spec.state_dim(), "symplectic_predictor_rhs(x)");
  detail::require_dim(bank.input_dim(), spec.state_dim(), "symplectic_predictor_rhs(bank)");
  detail::require_dim(weights.size(), bank.size(), "symplectic_predictor_rhs(weights)");
  const int h = spec.half_dim();
  const Mat& W = bank.frequencies();
  const Vec s = (W * x_hat + bank.phases()).array().sin().matrix();
  const Vec grad = -(W.transpose() * s.cwiseProduct(weights));

  SymplecticRates out;
  out.drift.resize(spec.state_dim());
  out.drift.head(h) = grad.tail(h);
  out.drift.tail(h) = -grad.head(h);
  out.drift += spec.k_gain * (x - x_hat);

  const Vec err = x_hat - x;
  const Vec mixed = W.rightCols(h) * err.head(h) - W.leftCols(h) * err.tail(h);
  out.weight_rate = gamma * s.cwiseProduct(mixed);
  return out;
}

}  // namespace rfadapt
