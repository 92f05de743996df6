#pragma once

// Trajectory tape: the append-only history (t_i, x_i, c_i) behind the
// nonparametric input
//   h_hat(x, t) = sum_i K(x, x_i) c_i dt,
// a left-endpoint Riemann sum of the kernel integral over the system's own
// trajectory. Evaluation costs O(length).

#include "rfadapt/kernel.hpp"

#include <vector>

namespace rfadapt {

class TrajectoryTape {
 public:
  TrajectoryTape(double dt, int n, int d) : dt_(dt), n_(n), d_(d) {
    if (!(dt > 0.0)) throw ArgumentError("TrajectoryTape: dt must be positive");
    if (n < 1 || d < 1) throw ArgumentError("TrajectoryTape: dimensions must be positive");
  }

  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] int state_dim() const { return n_; }
  [[nodiscard]] int output_dim() const { return d_; }
  [[nodiscard]] std::size_t size() const { return times_.size(); }
  [[nodiscard]] bool empty() const { return times_.empty(); }

  [[nodiscard]] double time(std::size_t i) const { return times_.at(i); }
  [[nodiscard]] Eigen::Map<const Vec> state(std::size_t i) const {
    return Eigen::Map<const Vec>(states_.data() + i * static_cast<std::size_t>(n_), n_);
  }
  [[nodiscard]] Eigen::Map<const Vec> coefficient(std::size_t i) const {
    return Eigen::Map<const Vec>(coeffs_.data() + i * static_cast<std::size_t>(d_), d_);
  }

  /// Appends (t, x, c) with c given directly.
  void append_coefficient(double t, const Vec& x, const Vec& c) {
    detail::require_dim(x.size(), n_, "TrajectoryTape(x)");
    detail::require_dim(c.size(), d_, "TrajectoryTape(c)");
    if (!times_.empty()) {
      const double expected = times_.back() + dt_;
      if (!(std::abs(t - expected) <= 1e-6 * dt_)) {
        throw SequencingError("TrajectoryTape: expected t = " + std::to_string(expected) + ", got " + std::to_string(t));
      }
    }
    times_.push_back(t);
    states_.insert(states_.end(), x.data(), x.data() + n_);
    coeffs_.insert(coeffs_.end(), c.data(), c.data() + d_);
  }

 private:
  double dt_;
  int n_;
  int d_;
  std::vector<double> times_;
  std::vector<double> states_;  // row-major, n per entry
  std::vector<double> coeffs_;  // row-major, d per entry
};

/// Appends (t, x, -gamma g_e^T gradQ).
inline void tape_append(TrajectoryTape& tape, double t, const Vec& x, double gamma, const Mat& g_e, const Vec& gradQ) {
  detail::require_dim(gradQ.size(), g_e.rows(), "tape_append(gradQ)");
  detail::require_dim(g_e.cols(), tape.output_dim(), "tape_append(g_e)");
  tape.append_coefficient(t, x, -gamma * (g_e.transpose() * gradQ));
}

[[nodiscard]] inline Vec nonparametric_input(const TrajectoryTape& tape, const OperatorKernelSpec& kernel, const Vec& x) {
  detail::require_dim(x.size(), kernel.n, "nonparametric_input(x)");
  detail::require_dim(tape.state_dim(), kernel.n, "nonparametric_input(tape state)");
  detail::require_dim(tape.output_dim(), kernel.d, "nonparametric_input(tape output)");
  const std::size_t len = tape.size();
  Vec acc = Vec::Zero(kernel.d);
  if (len == 0) return acc;

  switch (kernel.variant) {
    case KernelVariant::decomposable: {
      // K(x, x_i) = k(x - x_i) A, so accumulate the scalar-weighted sum first.
      const double inv = 1.0 / (2.0 * kernel.base.sigma * kernel.base.sigma);
      for (std::size_t i = 0; i < len; ++i) {
        acc.noalias() += std::exp(-(x - tape.state(i)).squaredNorm() * inv) * tape.coefficient(i);
      }
      return tape.dt() * (kernel.factor * (kernel.factor.transpose() * acc));
    }
    case KernelVariant::finite_feature: {
      const Mat phi_x = kernel.features(x);
      for (std::size_t i = 0; i < len; ++i) {
        acc.noalias() += phi_x * (kernel.features(Vec(tape.state(i))).transpose() * tape.coefficient(i));
      }
      return tape.dt() * acc;
    }
    default:
      for (std::size_t i = 0; i < len; ++i) {
        acc.noalias() += eval_operator_kernel(kernel, x, Vec(tape.state(i))) * tape.coefficient(i);
      }
      return tape.dt() * acc;
  }
}

}  // namespace rfadapt
