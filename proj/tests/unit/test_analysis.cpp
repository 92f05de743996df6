#include "rfadapt/rfadapt.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace rfadapt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rfadapt_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::pair<double, double>> power_points(const std::vector<double>& K, double amp, double xi) {
  std::vector<std::pair<double, double>> pts;
  for (double k : K) pts.emplace_back(k, amp * std::pow(k, -xi));
  return pts;
}

}  // namespace

TEST(Quantile, Examples) {
  const std::vector<double> c(7, 2.5);
  for (double q : {0.0, 0.3, 1.0}) EXPECT_EQ(quantile(c, q), 2.5);
  const std::vector<double> v{5, 3, 1, 4, 2};
  EXPECT_EQ(quantile(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.2), 1.8);
  EXPECT_EQ(quantile(v, 0.0), 1.0);
  EXPECT_EQ(quantile(v, 1.0), 5.0);
  EXPECT_EQ(median(v), 3.0);
}

TEST(Quantile, Errors) {
  const std::vector<double> empty;
  EXPECT_THROW((void)quantile(empty, 0.5), ArgumentError);
  const std::vector<double> v{1.0};
  EXPECT_THROW((void)quantile(v, 1.5), ArgumentError);
}

TEST(Quantile, Monotone) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 30);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    for (auto& x : v) x = g(rng);
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    EXPECT_LE(quantile(v, a), quantile(v, b));
  }
}

TEST(PowerLaw, ExactInput) {
  const auto fit = fit_power_law(power_points({10, 100, 1000}, 10.0, 0.5));
  EXPECT_NEAR(fit.exponent, 0.5, 1e-12);
  EXPECT_NEAR(fit.amplitude, 10.0, 1e-10);
  EXPECT_NEAR(fit.ci95, 0.0, 1e-10);
}

TEST(PowerLaw, ScaleInvariance) {
  std::mt19937_64 rng(2);
  std::lognormal_distribution<double> noise(0.0, 0.2);
  std::vector<std::pair<double, double>> pts;
  for (double k : {125.0, 250.0, 500.0, 1000.0, 2000.0}) pts.emplace_back(k, 3.0 * std::pow(k, -0.8) * noise(rng));
  const auto base = fit_power_law(pts);
  auto scaled_err = pts;
  for (auto& p : scaled_err) p.second *= 17.0;
  const auto a = fit_power_law(scaled_err);
  EXPECT_NEAR(a.exponent, base.exponent, 1e-12);
  EXPECT_NEAR(a.amplitude / base.amplitude, 17.0, 1e-9);
  auto scaled_k = pts;
  for (auto& p : scaled_k) p.first *= 0.01;
  EXPECT_NEAR(fit_power_law(scaled_k).exponent, base.exponent, 1e-12);
}

TEST(PowerLaw, NoisyCoverage) {
  std::mt19937_64 rng(3);
  std::lognormal_distribution<double> noise(0.0, 0.3);
  const double xi = 1.28;
  int covered = 0;
  for (int r = 0; r < 100; ++r) {
    std::vector<std::pair<double, double>> pts;
    for (double k : {100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0}) pts.emplace_back(k, 5.0 * std::pow(k, -xi) * noise(rng));
    const auto fit = fit_power_law(pts);
    if (std::abs(fit.exponent - xi) <= fit.ci95) ++covered;
  }
  EXPECT_GE(covered, 90);
}

TEST(PowerLaw, Errors) {
  EXPECT_THROW((void)fit_power_law(power_points({10, 100}, 1.0, 1.0)), ArgumentError);
  auto pts = power_points({10, 100, 1000}, 1.0, 1.0);
  pts[1].second = 0.0;
  EXPECT_THROW((void)fit_power_law(pts), ArgumentError);
  pts[1].second = -1.0;
  EXPECT_THROW((void)fit_power_law(pts), ArgumentError);
}

TEST(LineFit, ExactAndNoisy) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{3, 5, 7, 9, 11};
  const auto fit = fit_line(x, y);
  EXPECT_NEAR(fit.slope, 2.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-13);
  EXPECT_NEAR(fit.ci95, 0.0, 1e-12);
  const std::vector<double> flat{1.0, 1.2, 0.9, 1.1, 0.8, 1.0};
  const std::vector<double> idx{0, 1, 2, 3, 4, 5};
  const auto f2 = fit_line(idx, flat);
  EXPECT_LE(std::abs(f2.slope), f2.ci95);
}

TEST(FinalWindow, LastTenPercent) {
  MetricsSeries s;
  for (int i = 0; i < 100; ++i) s.records.push_back({i * 0.1, static_cast<double>(i), 0.0, 0.0, 0.0});
  const auto w = final_window(s, Metric::tracking_error, 0.1);
  ASSERT_EQ(w.size(), 10u);
  EXPECT_EQ(w.front(), 90.0);
  EXPECT_EQ(final_window_median(s, 0.1), 94.5);
  EXPECT_EQ(window_max(w), 99.0);
}

TEST(Emit, SeriesRoundTripBitExact) {
  MetricsSeries s;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 50; ++i) s.records.push_back({i * 1e-3, u(rng), u(rng) * 1e-20, u(rng) * 1e20, std::ldexp(u(rng), -1060)});
  const auto path = scratch("series.csv");
  emit(s, path);
  const auto back = parse_series(path);
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(back.records[i].t, s.records[i].t);
    EXPECT_EQ(back.records[i].tracking_error, s.records[i].tracking_error);
    EXPECT_EQ(back.records[i].input_norm, s.records[i].input_norm);
    EXPECT_EQ(back.records[i].interp_error, s.records[i].interp_error);
    EXPECT_EQ(back.records[i].lyapunov, s.records[i].lyapunov);
  }
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,tracking_error,input_norm,interp_error,lyapunov");
}

TEST(Emit, SweepRoundTripAndEmpty) {
  const auto path = scratch("sweep.csv");
  emit(std::vector<SweepRow>{}, path);
  std::ifstream in(path);
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(all, "K,q20,q50,q80\n");
  const std::vector<SweepRow> rows{{125, 0.1, 0.2, 0.30000000000000004}, {250, 1e-300, 2e-300, 3e-300}};
  emit(rows, path);
  const auto back = parse_sweep(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].K, 125);
  EXPECT_EQ(back[0].q80, 0.30000000000000004);
  EXPECT_EQ(back[1].q20, 1e-300);
}

TEST(Emit, IoErrorsCarryPath) {
  const fs::path blocker = scratch("blocker");
  { std::ofstream(blocker) << "x"; }
  try {
    emit(MetricsSeries{}, blocker / "sub" / "file.csv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("blocker"), std::string::npos);
  }
  EXPECT_THROW((void)parse_series(scratch("missing.csv")), IoError);
}

TEST(Manifest, IncludesSeedsPerTrial) {
  SimConfig cfg;
  cfg.horizon = 0.05;
  cfg.trials = 3;
  cfg.kernel.K = 10;
  const auto runs = run_trials(cfg);
  const Json j = manifest(cfg, "control", runs, {"a.csv", "b.csv", "c.csv"});
  ASSERT_EQ(j.at("trials").size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(j["trials"][i]["seed"].get<std::uint64_t>(), derive_seed(cfg.seed, i));
    EXPECT_TRUE(j["trials"][i].contains("bank_seed"));
    EXPECT_TRUE(j["trials"][i].contains("final_window_median"));
  }
  EXPECT_EQ(j["config"]["kernel"]["K"].get<int>(), 10);
  EXPECT_TRUE(j["config"].contains("A"));
}

TEST(Sweep, RowsAreOrderedQuantiles) {
  SimConfig cfg;
  cfg.horizon = 0.2;
  cfg.trials = 3;
  cfg.sweep.K = {5, 10, 20};
  const auto sweep = run_sweep(cfg);
  ASSERT_EQ(sweep.rows.size(), 3u);
  for (const auto& r : sweep.rows) {
    EXPECT_LE(r.q20, r.q50);
    EXPECT_LE(r.q50, r.q80);
  }
  EXPECT_EQ(sweep.rows[2].K, 20);
  EXPECT_EQ(sweep.runs[1].size(), 3u);
}

TEST(BoundRequest, ParsesConfigSection) {
  const Json j = Json::parse(R"({"bound": {"n": 4, "d1": 1, "B_X": 1, "feature_norm": "constant", "epsilon": 0.1, "K": [1, 4]}})");
  const BoundRequest r = parse_bound_request(j);
  ASSERT_TRUE(r.epsilon);
  EXPECT_EQ(required_features(r.inputs, *r.epsilon), 3600);
  EXPECT_EQ(r.K.size(), 2u);
  const Json bad = Json::parse(R"({"bound": {"epsilon": -1}})");
  EXPECT_THROW((void)parse_bound_request(bad), ConfigError);
}
