#pragma once

#include "rfadapt/core.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace rfadapt {

/// Linear-interpolation quantile: h = q (N - 1) on the sorted values.
[[nodiscard]] inline double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw ArgumentError("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("quantile: q must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

[[nodiscard]] inline double median(std::span<const double> values) { return quantile(values, 0.5); }

struct PowerLawFit {
  double exponent = 0.0;   // xi in err ~ amplitude * K^-xi
  double amplitude = 0.0;
  double ci95 = 0.0;       // half-width on the exponent
  double stderr_exponent = 0.0;
};

/// Ordinary least squares of log(err) on log(K).
[[nodiscard]] inline PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw ArgumentError("fit_power_law: need at least three points");
  const auto n = static_cast<double>(points.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [k, e] : points) {
    if (!(k > 0.0)) throw ArgumentError("fit_power_law: K values must be positive");
    if (!(e > 0.0)) throw ArgumentError("fit_power_law: error values must be positive");
    mx += std::log(k);
    my += std::log(e);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [k, e] : points) {
    const double dx = std::log(k) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(e) - my);
  }
  if (!(sxx > 0.0)) throw ArgumentError("fit_power_law: K values must not all coincide");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (const auto& [k, e] : points) {
    const double r = std::log(e) - (intercept + slope * std::log(k));
    sse += r * r;
  }
  PowerLawFit fit;
  fit.exponent = -slope;
  fit.amplitude = std::exp(intercept);
  fit.stderr_exponent = std::sqrt(sse / (n - 2.0) / sxx);
  const boost::math::students_t dist(n - 2.0);
  fit.ci95 = boost::math::quantile(dist, 0.975) * fit.stderr_exponent;
  return fit;
}

/// Slope of y on x with its 95% half-width, for the timing analysis.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci95 = 0.0;
};

[[nodiscard]] inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw ArgumentError("fit_line: need at least three paired points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ArgumentError("fit_line: x values must not all coincide");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  const boost::math::students_t dist(n - 2.0);
  fit.ci95 = boost::math::quantile(dist, 0.975) * std::sqrt(sse / (n - 2.0) / sxx);
  return fit;
}

}  // namespace rfadapt
