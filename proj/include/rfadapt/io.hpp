#pragma once

#include "rfadapt/config.hpp"
#include "rfadapt/metrics.hpp"
#include "rfadapt/runner.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace rfadapt {

class IoError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kSeriesHeader = "t,tracking_error,input_norm,interp_error,lyapunov";
inline constexpr const char* kSweepHeader = "K,q20,q50,q80";

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline std::vector<std::vector<double>> parse_csv(const std::filesystem::path& path, const std::string& header,
                                                  std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line != header) throw IoError("'" + path.string() + "' has an unexpected header");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const char* end = cell.data() + cell.size();
      const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
      if (ec != std::errc() || ptr != end) {
        throw IoError("'" + path.string() + "': bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != columns) throw IoError("'" + path.string() + "': wrong column count");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline void emit(const MetricsSeries& series, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << kSeriesHeader << '\n';
  for (const auto& r : series.records) {
    out << detail::format_double(r.t) << ',' << detail::format_double(r.tracking_error) << ','
        << detail::format_double(r.input_norm) << ',' << detail::format_double(r.interp_error) << ','
        << detail::format_double(r.lyapunov) << '\n';
  }
  detail::finish(out, path);
}

inline void emit(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << r.K << ',' << detail::format_double(r.q20) << ',' << detail::format_double(r.q50) << ','
        << detail::format_double(r.q80) << '\n';
  }
  detail::finish(out, path);
}

[[nodiscard]] inline MetricsSeries parse_series(const std::filesystem::path& path) {
  MetricsSeries s;
  for (const auto& row : detail::parse_csv(path, kSeriesHeader, 5)) {
    s.records.push_back({row[0], row[1], row[2], row[3], row[4]});
  }
  return s;
}

[[nodiscard]] inline std::vector<SweepRow> parse_sweep(const std::filesystem::path& path) {
  std::vector<SweepRow> rows;
  for (const auto& row : detail::parse_csv(path, kSweepHeader, 4)) {
    rows.push_back({static_cast<int>(row[0]), row[1], row[2], row[3]});
  }
  return rows;
}

/// Run manifest: resolved config plus one entry per trial.
[[nodiscard]] inline Json manifest(const SimConfig& cfg, const std::string& command,
                                   const std::vector<MetricsSeries>& runs, const std::vector<std::string>& files) {
  Json j;
  j["command"] = command;
  j["config"] = to_json(cfg);
  Json trials = Json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    Json t;
    t["index"] = i;
    t["seed"] = runs[i].seed;
    t["bank_seed"] = bank_seed(cfg, runs[i].seed);
    t["diverged"] = runs[i].diverged;
    if (runs[i].diverged) {
      t["divergence_time"] = runs[i].divergence_time;
      t["message"] = runs[i].message;
    }
    if (i < files.size()) t["file"] = files[i];
    const Vec& w = runs[i].final_weights;
    if (w.size() > 0 && w.size() <= 64) t["final_weights"] = std::vector<double>(w.data(), w.data() + w.size());
    if (!runs[i].empty()) t["final_window_median"] = final_window_median(runs[i], cfg.window);
    trials.push_back(t);
  }
  j["trials"] = trials;
  return j;
}

inline void write_json(const Json& j, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << j.dump(2) << '\n';
  detail::finish(out, path);
}

}  // namespace rfadapt
