#pragma once

// Single-hidden-layer swish network and its velocity-gradient adaptation law
//   d/dt params = -gamma J^T g_e^T gradQ,
// with J the analytic Jacobian of the output with respect to the flattened
// parameters.

#include "rfadapt/core.hpp"

#include <cstdint>
#include <random>

namespace rfadapt {

[[nodiscard]] inline double swish(double z) { return z / (1.0 + std::exp(-z)); }

[[nodiscard]] inline double swish_derivative(double z) {
  const double s = 1.0 / (1.0 + std::exp(-z));
  return s + z * s * (1.0 - s);
}

struct NNParams {
  Mat W;   // width x n
  Vec bh;  // width
  Mat V;   // d x width
  Vec bo;  // d

  [[nodiscard]] int input_dim() const { return static_cast<int>(W.cols()); }
  [[nodiscard]] int width() const { return static_cast<int>(W.rows()); }
  [[nodiscard]] int output_dim() const { return static_cast<int>(V.rows()); }
  [[nodiscard]] Eigen::Index parameter_count() const { return W.size() + bh.size() + V.size() + bo.size(); }

  [[nodiscard]] bool finite() const { return W.allFinite() && bh.allFinite() && V.allFinite() && bo.allFinite(); }

  /// Layout: W (column-major), bh, V (column-major), bo.
  [[nodiscard]] Vec flatten() const {
    Vec out(parameter_count());
    Eigen::Index o = 0;
    out.segment(o, W.size()) = W.reshaped();
    o += W.size();
    out.segment(o, bh.size()) = bh;
    o += bh.size();
    out.segment(o, V.size()) = V.reshaped();
    o += V.size();
    out.segment(o, bo.size()) = bo;
    return out;
  }

  static NNParams unflatten(const Vec& flat, int n, int width, int d) {
    NNParams p;
    const Eigen::Index want = static_cast<Eigen::Index>(width) * n + width + static_cast<Eigen::Index>(d) * width + d;
    detail::require_dim(flat.size(), want, "NNParams::unflatten");
    Eigen::Index o = 0;
    p.W = flat.segment(o, static_cast<Eigen::Index>(width) * n).reshaped(width, n);
    o += static_cast<Eigen::Index>(width) * n;
    p.bh = flat.segment(o, width);
    o += width;
    p.V = flat.segment(o, static_cast<Eigen::Index>(d) * width).reshaped(d, width);
    o += static_cast<Eigen::Index>(d) * width;
    p.bo = flat.segment(o, d);
    return p;
  }

  static NNParams zeros(int n, int width, int d) {
    return {Mat::Zero(width, n), Vec::Zero(width), Mat::Zero(d, width), Vec::Zero(d)};
  }
};

/// Hidden layer ~ N(0, 1/fan_in); output layer zero so the initial input is 0.
[[nodiscard]] inline NNParams nn_init(int n, int width, int d, std::uint64_t seed) {
  if (n < 1 || width < 1 || d < 1) throw ArgumentError("nn_init: dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  NNParams p = NNParams::zeros(n, width, d);
  for (Eigen::Index j = 0; j < p.W.cols(); ++j)
    for (Eigen::Index i = 0; i < p.W.rows(); ++i) p.W(i, j) = normal(rng);
  for (Eigen::Index i = 0; i < p.bh.size(); ++i) p.bh(i) = normal(rng);
  return p;
}

[[nodiscard]] inline Vec nn_forward(const NNParams& params, const Vec& x) {
  detail::require_dim(x.size(), params.input_dim(), "nn_forward(x)");
  const Vec z = params.W * x + params.bh;
  return params.V * z.unaryExpr([](double v) { return swish(v); }) + params.bo;
}

/// d x P Jacobian of the output with respect to the flattened parameters.
[[nodiscard]] inline Mat nn_jacobian(const NNParams& params, const Vec& x) {
  detail::require_dim(x.size(), params.input_dim(), "nn_jacobian(x)");
  const int n = params.input_dim();
  const int h = params.width();
  const int d = params.output_dim();
  const Vec z = params.W * x + params.bh;
  const Vec a = z.unaryExpr([](double v) { return swish(v); });
  const Vec ds = z.unaryExpr([](double v) { return swish_derivative(v); });
  Mat J = Mat::Zero(d, params.parameter_count());
  // W(k, l) sits at column k + l h.
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < h; ++k) J.col(k + l * h) = params.V.col(k) * (ds(k) * x(l));
  const Eigen::Index ob = static_cast<Eigen::Index>(h) * n;
  for (int k = 0; k < h; ++k) J.col(ob + k) = params.V.col(k) * ds(k);
  const Eigen::Index ov = ob + h;
  // V(i, k) sits at column i + k d.
  for (int k = 0; k < h; ++k)
    for (int i = 0; i < d; ++i) J(i, ov + i + k * d) = a(k);
  const Eigen::Index oo = ov + static_cast<Eigen::Index>(d) * h;
  for (int i = 0; i < d; ++i) J(i, oo + i) = 1.0;
  return J;
}

/// -gamma J^T g_e^T gradQ, computed without forming J.
[[nodiscard]] inline Vec nn_update_rhs(const NNParams& params, const Vec& x, const Mat& g_e, const Vec& gradQ,
                                       double gamma) {
  if (!(gamma > 0.0)) throw ArgumentError("nn_update_rhs: gamma must be positive");
  detail::require_dim(x.size(), params.input_dim(), "nn_update_rhs(x)");
  detail::require_dim(gradQ.size(), g_e.rows(), "nn_update_rhs(gradQ)");
  detail::require_dim(g_e.cols(), params.output_dim(), "nn_update_rhs(g_e)");
  const Vec v = g_e.transpose() * gradQ;
  const Vec z = params.W * x + params.bh;
  const Vec a = z.unaryExpr([](double t) { return swish(t); });
  const Vec ds = z.unaryExpr([](double t) { return swish_derivative(t); });
  const Vec back = (params.V.transpose() * v).cwiseProduct(ds);

  Vec out(params.parameter_count());
  Eigen::Index o = 0;
  const Mat gW = back * x.transpose();
  out.segment(o, gW.size()) = gW.reshaped();
  o += gW.size();
  out.segment(o, back.size()) = back;
  o += back.size();
  const Mat gV = v * a.transpose();
  out.segment(o, gV.size()) = gV.reshaped();
  o += gV.size();
  out.segment(o, v.size()) = v;
  return -gamma * out;
}

}  // namespace rfadapt
