#pragma once

// Mirror maps for the parametric update laws. The laws are integrated in the
// dual coordinates grad psi(alpha) and mapped back through the inverse.

#include "rfadapt/core.hpp"

#include <string>
#include <string_view>
#include <utility>

namespace rfadapt {

enum class MirrorVariant { euclidean, hypentropy };

struct MirrorMap {
  MirrorVariant variant = MirrorVariant::euclidean;
  double beta = 1.0;  // hypentropy scale

  static MirrorMap euclidean() { return {}; }
  static MirrorMap hypentropy(double beta) {
    MirrorMap m{MirrorVariant::hypentropy, beta};
    m.validate();
    return m;
  }

  void validate() const {
    if (variant == MirrorVariant::hypentropy && !(beta > 0.0)) throw ConfigError("hypentropy beta must be positive");
  }
};

[[nodiscard]] inline MirrorVariant parse_mirror_variant(std::string_view name) {
  if (name == "euclidean") return MirrorVariant::euclidean;
  if (name == "hypentropy") return MirrorVariant::hypentropy;
  throw ConfigError("unknown mirror map '" + std::string(name) + "'");
}

[[nodiscard]] inline std::string_view to_string(MirrorVariant v) {
  return v == MirrorVariant::euclidean ? "euclidean" : "hypentropy";
}

/// grad psi(alpha): identity, or asinh(alpha / beta) componentwise.
[[nodiscard]] inline Vec mirror_dual(const MirrorMap& map, const Vec& primal) {
  if (map.variant == MirrorVariant::euclidean) return primal;
  return (primal.array() / map.beta).asinh().matrix();
}

/// (grad psi)^{-1}(dual): identity, or beta sinh(dual) componentwise.
[[nodiscard]] inline Vec mirror_primal(const MirrorMap& map, const Vec& dual) {
  if (!dual.allFinite()) throw ArgumentError("mirror_primal: non-finite dual variable");
  if (map.variant == MirrorVariant::euclidean) return dual;
  // sinh overflows a double just past |x| = 710.4.
  constexpr double kMaxArg = 709.0;
  if (dual.size() > 0 && dual.cwiseAbs().maxCoeff() > kMaxArg) {
    throw SaturationError("mirror_primal: hypentropy dual beyond the representable range");
  }
  return map.beta * dual.array().sinh().matrix();
}

/// Physical (p) and model (m) parameter estimates, held in dual coordinates.
struct AdaptState {
  Vec dual_p;
  Vec dual_m;
  MirrorMap map_p;
  MirrorMap map_m;

  static AdaptState initial(const Vec& alpha_p0, const Vec& alpha_m0, MirrorMap map_p = {}, MirrorMap map_m = {}) {
    map_p.validate();
    map_m.validate();
    return {mirror_dual(map_p, alpha_p0), mirror_dual(map_m, alpha_m0), map_p, map_m};
  }

  [[nodiscard]] Vec primal_p() const { return mirror_primal(map_p, dual_p); }
  [[nodiscard]] Vec primal_m() const { return mirror_primal(map_m, dual_m); }
};

/// Dual rates of the parametric laws:
///   d/dt grad psi_p(alpha_p) = -slope Y^T g_e^T gradQ
///   d/dt grad psi_m(alpha_m) = -slope Psi^T g_e^T gradQ
[[nodiscard]] inline std::pair<Vec, Vec> parametric_update_duals(const AdaptState& state, const Mat& Y, const Mat& Psi,
                                                                 const Mat& g_e, const Vec& gradQ, double slope) {
  if (!(slope >= 0.0)) throw ArgumentError("parametric_update_duals: slope must be nonnegative");
  detail::require_dim(gradQ.size(), g_e.rows(), "parametric_update_duals(gradQ)");
  detail::require_dim(Y.rows(), g_e.cols(), "parametric_update_duals(Y rows)");
  detail::require_dim(Psi.rows(), g_e.cols(), "parametric_update_duals(Psi rows)");
  detail::require_dim(Y.cols(), state.dual_p.size(), "parametric_update_duals(Y cols)");
  detail::require_dim(Psi.cols(), state.dual_m.size(), "parametric_update_duals(Psi cols)");
  if (slope == 0.0) return {Vec::Zero(Y.cols()), Vec::Zero(Psi.cols())};
  const Vec v = g_e.transpose() * gradQ;
  return {-slope * (Y.transpose() * v), -slope * (Psi.transpose() * v)};
}

}  // namespace rfadapt
