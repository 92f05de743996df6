#pragma once

// Deadzones sigma_Delta applied to the Lyapunov value. Both shipped shapes are
// zero with zero slope on [0, threshold].
//
//   quadratic-hinge(delta, gamma):
//     0                              q <= delta
//     (q - delta)^2 / (4 gamma)      delta < q < delta + 2 gamma
//     q - (delta + gamma)            q >= delta + 2 gamma
//   slope in [0, 1], 1/(2 gamma)-Lipschitz.
//
//   shifted-square(Delta): q -> s_{sqrt Delta}(sqrt q)^2 = (sqrt q - sqrt Delta)_+^2,
//   slope 1 - sqrt(Delta / q) above the threshold, 1/(2 Delta)-Lipschitz.
//
//   none: identity, slope 1 everywhere.

#include "rfadapt/core.hpp"

#include <string>
#include <string_view>

namespace rfadapt {

enum class DeadzoneVariant { none, quadratic_hinge, shifted_square };

struct DeadzoneSpec {
  DeadzoneVariant variant = DeadzoneVariant::quadratic_hinge;
  double threshold = 0.1;  // delta (hinge) or Delta (shifted square)
  double smoothing = 0.1;  // gamma, hinge only

  static DeadzoneSpec none() { return {DeadzoneVariant::none, 0.0, 0.0}; }
  static DeadzoneSpec quadratic_hinge(double delta, double gamma) {
    DeadzoneSpec s{DeadzoneVariant::quadratic_hinge, delta, gamma};
    s.validate();
    return s;
  }
  static DeadzoneSpec shifted_square(double Delta) {
    DeadzoneSpec s{DeadzoneVariant::shifted_square, Delta, 0.0};
    s.validate();
    return s;
  }

  void validate() const {
    if (variant == DeadzoneVariant::none) return;
    if (!(threshold > 0.0)) throw ConfigError("deadzone threshold must be positive");
    if (variant == DeadzoneVariant::quadratic_hinge && !(smoothing > 0.0)) {
      throw ConfigError("quadratic-hinge smoothing width must be positive");
    }
  }

  /// Lipschitz constant of the slope (0 for none).
  [[nodiscard]] double slope_lipschitz() const {
    switch (variant) {
      case DeadzoneVariant::none: return 0.0;
      case DeadzoneVariant::quadratic_hinge: return 1.0 / (2.0 * smoothing);
      case DeadzoneVariant::shifted_square: return 1.0 / (2.0 * threshold);
    }
    return 0.0;
  }
};

[[nodiscard]] inline DeadzoneVariant parse_deadzone_variant(std::string_view name) {
  if (name == "none") return DeadzoneVariant::none;
  if (name == "quadratic-hinge") return DeadzoneVariant::quadratic_hinge;
  if (name == "shifted-square") return DeadzoneVariant::shifted_square;
  throw ConfigError("unknown deadzone variant '" + std::string(name) + "'");
}

[[nodiscard]] inline std::string_view to_string(DeadzoneVariant v) {
  switch (v) {
    case DeadzoneVariant::none: return "none";
    case DeadzoneVariant::quadratic_hinge: return "quadratic-hinge";
    case DeadzoneVariant::shifted_square: return "shifted-square";
  }
  return "unknown";
}

namespace detail {
inline void require_nonnegative(double q, const char* what) {
  if (!(q >= 0.0)) throw ArgumentError(std::string(what) + ": argument must be nonnegative, got " + std::to_string(q));
}
}  // namespace detail

[[nodiscard]] inline double deadzone_value(const DeadzoneSpec& spec, double q) {
  detail::require_nonnegative(q, "deadzone_value");
  switch (spec.variant) {
    case DeadzoneVariant::none:
      return q;
    case DeadzoneVariant::quadratic_hinge: {
      const double delta = spec.threshold;
      const double gamma = spec.smoothing;
      if (q <= delta) return 0.0;
      if (q < delta + 2.0 * gamma) return (q - delta) * (q - delta) / (4.0 * gamma);
      return q - (delta + gamma);
    }
    case DeadzoneVariant::shifted_square: {
      if (q <= spec.threshold) return 0.0;
      const double s = std::sqrt(q) - std::sqrt(spec.threshold);
      return s * s;
    }
  }
  return 0.0;
}

[[nodiscard]] inline double deadzone_slope(const DeadzoneSpec& spec, double q) {
  detail::require_nonnegative(q, "deadzone_slope");
  switch (spec.variant) {
    case DeadzoneVariant::none:
      return 1.0;
    case DeadzoneVariant::quadratic_hinge: {
      const double delta = spec.threshold;
      const double gamma = spec.smoothing;
      if (q <= delta) return 0.0;
      if (q < delta + 2.0 * gamma) return (q - delta) / (2.0 * gamma);
      return 1.0;
    }
    case DeadzoneVariant::shifted_square:
      if (q <= spec.threshold) return 0.0;
      return 1.0 - std::sqrt(spec.threshold / q);
  }
  return 0.0;
}

}  // namespace rfadapt
