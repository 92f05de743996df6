// rfadapt: command-line driver for the adaptive control and prediction experiments.
//
//   rfadapt control      --config configs/lti.json --out runs/lti
//   rfadapt predict      --config configs/predictor.json --out runs/pred
//   rfadapt nbody        --config configs/nbody.json --out runs/nbody
//   rfadapt sweep-k      --config configs/nbody_sweep.json --out runs/sweep
//   rfadapt bound        --config configs/bound.json --out runs/bound
//   rfadapt kernel-check --config configs/kernel_check.json --out runs/check
//
// Exit codes: 0 success, 1 failed check or I/O error, 2 configuration error,
// 3 at least one run flagged divergence (outputs are still written).

#include "rfadapt/rfadapt.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace rfadapt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

struct CommonArgs {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--seed", args.seed, "master seed (overrides the config)");
  cmd->add_option("--trials", args.trials, "trial count (overrides the config)")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", args.threads, "worker threads (0 = hardware concurrency)");
}

SimConfig resolve(const CommonArgs& args, Json& raw) {
  raw = load_json(args.config);
  if (args.seed) raw["seed"] = *args.seed;
  if (args.trials) raw["trials"] = *args.trials;
  return parse_config(raw);
}

std::string trial_file(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%03zu.csv", i);
  return buf;
}

int write_runs(const SimConfig& cfg, const std::string& command, const std::vector<MetricsSeries>& runs,
               const fs::path& out) {
  std::vector<std::string> files;
  bool any_diverged = false;
  std::vector<double> finals;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    files.push_back(trial_file(i));
    emit(runs[i], out / files.back());
    any_diverged = any_diverged || runs[i].diverged;
    if (!runs[i].empty()) finals.push_back(final_window_median(runs[i], cfg.window));
  }
  write_json(manifest(cfg, command, runs, files), out / "manifest.json");
  std::cout << command << ": " << runs.size() << " trial(s) written to " << out.string() << '\n';
  if (!finals.empty()) {
    std::cout << "final-window tracking error: q20 " << quantile(finals, 0.2) << ", median " << quantile(finals, 0.5)
              << ", q80 " << quantile(finals, 0.8) << '\n';
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].diverged) {
      std::cout << "trial " << i << " diverged at t = " << runs[i].divergence_time << ": " << runs[i].message << '\n';
    }
  }
  return any_diverged ? kExitDiverged : kExitOk;
}

int cmd_runs(const CommonArgs& args, const std::string& command, std::initializer_list<SystemKind> allowed) {
  Json raw;
  const SimConfig cfg = resolve(args, raw);
  if (std::find(allowed.begin(), allowed.end(), cfg.system) == allowed.end()) {
    throw ConfigError(command + " does not accept system '" + std::string(to_string(cfg.system)) + "'");
  }
  const auto runs = run_trials(cfg, args.threads);
  return write_runs(cfg, command, runs, args.out);
}

int cmd_sweep(const CommonArgs& args) {
  Json raw;
  const SimConfig cfg = resolve(args, raw);
  const SweepResult sweep = run_sweep(cfg, args.threads);
  const fs::path out = args.out;
  emit(sweep.rows, out / "sweep.csv");
  Json j;
  j["command"] = "sweep-k";
  j["config"] = to_json(cfg);
  Json per_k = Json::array();
  bool any_diverged = false;
  for (std::size_t r = 0; r < sweep.rows.size(); ++r) {
    SimConfig c = cfg;
    c.kernel.K = sweep.rows[r].K;
    per_k.push_back({{"K", sweep.rows[r].K}, {"trials", manifest(c, "sweep-k", sweep.runs[r], {})["trials"]}});
    for (const auto& s : sweep.runs[r]) any_diverged = any_diverged || s.diverged;
  }
  j["runs"] = per_k;
  std::cout << "K,q20,q50,q80\n";
  for (const auto& row : sweep.rows) std::cout << row.K << ',' << row.q20 << ',' << row.q50 << ',' << row.q80 << '\n';
  if (sweep.rows.size() >= 3) {
    bool positive = true;
    for (const auto& row : sweep.rows) positive = positive && row.q50 > 0.0;
    if (positive) {
      const PowerLawFit fit = fit_sweep(sweep);
      j["power_law"] = {{"exponent", fit.exponent}, {"amplitude", fit.amplitude}, {"ci95", fit.ci95}};
      std::cout << "power law: exponent " << fit.exponent << " +/- " << fit.ci95 << ", amplitude " << fit.amplitude
                << '\n';
    }
  }
  write_json(j, out / "manifest.json");
  return any_diverged ? kExitDiverged : kExitOk;
}

int cmd_bound(const CommonArgs& args) {
  const Json raw = load_json(args.config);
  const BoundRequest req = parse_bound_request(raw);
  Json j;
  j["command"] = "bound";
  j["input"] = raw.at("bound");
  if (req.epsilon) {
    j["required_features"] = required_features(req.inputs, *req.epsilon);
    j["required_features_real"] = required_features_real(req.inputs, *req.epsilon);
    std::cout << "required K for epsilon = " << *req.epsilon << ": " << j["required_features"].get<long long>() << '\n';
  }
  Json rows = Json::array();
  for (const long long K : req.K) {
    const double b = approximation_bound(req.inputs, K);
    rows.push_back({{"K", K}, {"bound", b}});
    std::cout << "K = " << K << ": approximation bound " << b << '\n';
  }
  j["approximation_bound"] = rows;
  write_json(j, fs::path(args.out) / "bound.json");
  return kExitOk;
}

int cmd_kernel_check(const CommonArgs& args) {
  Json raw = load_json(args.config);
  if (args.seed) raw["seed"] = *args.seed;
  const CheckRequest req = parse_check_request(raw);
  const std::uint64_t seed = raw.value("seed", std::uint64_t{0});
  Json j;
  j["command"] = "kernel-check";
  j["seed"] = seed;
  Json results = Json::array();
  bool ok = true;
  for (std::size_t v = 0; v < req.variants.size(); ++v) {
    OperatorKernelSpec spec;
    switch (req.variants[v]) {
      case KernelVariant::decomposable: spec = OperatorKernelSpec::decomposable(Mat::Identity(req.n, req.n), req.sigma, req.n); break;
      case KernelVariant::curl_free: spec = OperatorKernelSpec::curl_free(req.n, req.sigma); break;
      case KernelVariant::divergence_free: spec = OperatorKernelSpec::divergence_free(req.n, req.sigma); break;
      case KernelVariant::symplectic: spec = OperatorKernelSpec::symplectic(req.n, req.sigma); break;
      case KernelVariant::finite_feature: throw ConfigError("kernel-check needs translation-invariant variants");
    }
    const FeatureBank bank(spec, req.K, derive_seed(seed, v));
    const KernelCheckReport rep = check_kernel(bank, req.pairs, req.radius, derive_seed(seed, 1000 + v));
    const bool pass = rep.max_z <= 3.0 && rep.symmetry_error <= 1e-12 && rep.min_quadratic_form >= -1e-9;
    ok = ok && pass;
    results.push_back({{"variant", std::string(to_string(req.variants[v]))},
                       {"K", req.K},
                       {"pairs", rep.pairs},
                       {"max_z", rep.max_z},
                       {"max_abs_error", rep.max_abs_error},
                       {"symmetry_error", rep.symmetry_error},
                       {"min_quadratic_form", rep.min_quadratic_form},
                       {"pass", pass}});
    std::cout << to_string(req.variants[v]) << ": max z " << rep.max_z << ", max |error| " << rep.max_abs_error
              << ", symmetry " << rep.symmetry_error << ", min form " << rep.min_quadratic_form
              << (pass ? "  ok" : "  FAILED") << '\n';
  }
  j["results"] = results;
  write_json(j, fs::path(args.out) / "kernel_check.json");
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel and random-feature adaptive control and prediction experiments"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* control = app.add_subcommand("control", "closed-loop control on the lti or quartic benchmark");
  auto* predict = app.add_subcommand("predict", "adaptive prediction of a linear system");
  auto* nbody = app.add_subcommand("nbody", "symplectic adaptive prediction of the m-body problem");
  auto* sweep = app.add_subcommand("sweep-k", "final-error quantiles over a list of feature counts");
  auto* bound = app.add_subcommand("bound", "feature-count and approximation-bound calculator");
  auto* check = app.add_subcommand("kernel-check", "Monte-Carlo check of random feature kernels");
  for (auto* cmd : {control, predict, nbody, sweep, bound, check}) add_common(cmd, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*control) return cmd_runs(args, "control", {SystemKind::lti, SystemKind::quartic});
    if (*predict) return cmd_runs(args, "predict", {SystemKind::predictor});
    if (*nbody) return cmd_runs(args, "nbody", {SystemKind::nbody});
    if (*sweep) return cmd_sweep(args);
    if (*bound) return cmd_bound(args);
    if (*check) return cmd_kernel_check(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
