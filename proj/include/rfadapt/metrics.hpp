#pragma once

#include "rfadapt/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace rfadapt {

struct MetricRecord {
  double t = 0.0;
  double tracking_error = 0.0;
  double input_norm = 0.0;
  double interp_error = 0.0;
  double lyapunov = 0.0;
};

struct MetricsSeries {
  std::vector<MetricRecord> records;
  std::uint64_t seed = 0;
  bool diverged = false;
  double divergence_time = 0.0;
  std::string message;
  Vec final_weights;  // learned parameters at the end of the run, when meaningful
  std::vector<double> step_seconds;  // wall time per step, when requested
  std::vector<Vec> states;           // full state per step, when requested

  [[nodiscard]] std::size_t size() const { return records.size(); }
  [[nodiscard]] bool empty() const { return records.empty(); }
};

enum class Metric { tracking_error, input_norm, interp_error, lyapunov };

[[nodiscard]] inline double metric_value(const MetricRecord& r, Metric m) {
  switch (m) {
    case Metric::tracking_error: return r.tracking_error;
    case Metric::input_norm: return r.input_norm;
    case Metric::interp_error: return r.interp_error;
    case Metric::lyapunov: return r.lyapunov;
  }
  return r.tracking_error;
}

/// Values of the last `fraction` of the records (at least one).
[[nodiscard]] inline std::vector<double> final_window(const MetricsSeries& s, Metric m, double fraction = 0.1) {
  if (s.empty()) throw ArgumentError("final_window: empty series");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("final_window: fraction must lie in (0, 1]");
  const auto n = s.records.size();
  auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  count = std::clamp<std::size_t>(count, 1, n);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = n - count; i < n; ++i) out.push_back(metric_value(s.records[i], m));
  return out;
}

[[nodiscard]] inline double window_max(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

[[nodiscard]] inline double series_max(const MetricsSeries& s, Metric m) {
  double worst = 0.0;
  for (const auto& r : s.records) worst = std::max(worst, metric_value(r, m));
  return worst;
}

}  // namespace rfadapt
