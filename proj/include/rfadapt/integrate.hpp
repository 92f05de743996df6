#pragma once

#include "rfadapt/core.hpp"

#include <functional>
#include <optional>

namespace rfadapt {

using RhsFn = std::function<Vec(const Vec&, double)>;

inline constexpr double kDivergenceNorm = 1e6;

/// state + dt * rhs(state, t), or nullopt when the rhs is not finite.
[[nodiscard]] inline std::optional<Vec> step_euler(const RhsFn& rhs, const Vec& state, double t, double dt) {
  if (!(dt > 0.0)) throw ArgumentError("step_euler: dt must be positive");
  const Vec r = rhs(state, t);
  detail::require_dim(r.size(), state.size(), "step_euler(rhs)");
  if (!r.allFinite()) return std::nullopt;
  return Vec(state + dt * r);
}

[[nodiscard]] inline bool diverged(const Vec& x) { return !x.allFinite() || x.norm() > kDivergenceNorm; }

}  // namespace rfadapt
