#pragma once

// Closed-loop experiment runners. Every run is forward Euler at cfg.dt; all
// randomness comes from seeds derived from the master seed.

#include "rfadapt/benchmarks.hpp"
#include "rfadapt/config.hpp"
#include "rfadapt/hamiltonian.hpp"
#include "rfadapt/integrate.hpp"
#include "rfadapt/metrics.hpp"
#include "rfadapt/network.hpp"
#include "rfadapt/predictor.hpp"
#include "rfadapt/stats.hpp"
#include "rfadapt/tape.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace rfadapt {

/// Deterministic per-trial seed.
[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// Seed for the feature bank of one trial.
[[nodiscard]] inline std::uint64_t bank_seed(const SimConfig& cfg, std::uint64_t trial_seed) {
  return cfg.kernel.seed ? derive_seed(*cfg.kernel.seed, trial_seed) : trial_seed;
}

/// Operator kernel for a control or prediction run of state dimension n.
[[nodiscard]] inline OperatorKernelSpec kernel_for(const SimConfig& cfg, int n) {
  switch (cfg.kernel.variant) {
    case KernelVariant::decomposable: return OperatorKernelSpec::decomposable(Mat::Identity(n, n), cfg.kernel.sigma, n);
    case KernelVariant::curl_free: return OperatorKernelSpec::curl_free(n, cfg.kernel.sigma);
    case KernelVariant::divergence_free: return OperatorKernelSpec::divergence_free(n, cfg.kernel.sigma);
    case KernelVariant::symplectic: return OperatorKernelSpec::symplectic(n, cfg.kernel.sigma);
    case KernelVariant::finite_feature:
      return cfg.system == SystemKind::predictor ? linear_feature_map(n).kernel() : elementwise_basis_map(n).kernel();
  }
  throw ConfigError("unhandled kernel variant");
}

[[nodiscard]] inline ControlBenchmark make_benchmark(const SimConfig& cfg) {
  if (cfg.system != SystemKind::lti && cfg.system != SystemKind::quartic) {
    throw ConfigError("control runs need the lti or quartic system");
  }
  return ControlBenchmark(cfg.system == SystemKind::lti ? BenchmarkKind::lti_stable : BenchmarkKind::quartic_unstable,
                          cfg.system_matrix());
}

struct RunOptions {
  bool record_step_times = false;
  bool record_states = false;
};

namespace detail {

/// Input law for the control loop. `input` is evaluated first at step k; then
/// `advance` consumes the coefficient -gamma sigma'(Q) g_e^T gradQ for that step.
struct ControlLaw {
  std::function<Vec(const Vec&, double)> input;
  std::function<void(double, const Vec&, const Vec&, double)> advance;  // (t, x, coefficient, dt)
  std::function<Vec()> weights;
};

template <FeatureMap Map>
ControlLaw parametric_law(Map map, const MirrorMap& mirror) {
  AdaptState state = AdaptState::initial(Vec::Zero(0), Vec::Zero(map.columns()), {}, mirror);
  auto shared = std::make_shared<std::pair<Map, AdaptState>>(std::move(map), std::move(state));
  ControlLaw law;
  law.input = [shared](const Vec& x, double) {
    return shared->first.apply(x, shared->second.primal_m());
  };
  law.advance = [shared](double, const Vec& x, const Vec& coeff, double dt) {
    shared->second.dual_m.noalias() += dt * shared->first.apply_transpose(x, coeff);
  };
  law.weights = [shared]() { return shared->second.primal_m(); };
  return law;
}

inline ControlLaw nonparametric_law(OperatorKernelSpec kernel, double dt, int n) {
  auto tape = std::make_shared<TrajectoryTape>(dt, n, n);
  auto spec = std::make_shared<OperatorKernelSpec>(std::move(kernel));
  ControlLaw law;
  law.input = [tape, spec](const Vec& x, double) { return nonparametric_input(*tape, *spec, x); };
  law.advance = [tape](double t, const Vec& x, const Vec& coeff, double) { tape->append_coefficient(t, x, coeff); };
  law.weights = []() { return Vec::Zero(0).eval(); };
  return law;
}

inline ControlLaw network_law(NNParams init, double gamma) {
  auto params = std::make_shared<NNParams>(std::move(init));
  ControlLaw law;
  law.input = [params](const Vec& x, double) { return nn_forward(*params, x); };
  law.advance = [params, gamma](double, const Vec& x, const Vec& coeff, double dt) {
    // coeff = -gamma sigma' gradQ, so hand the network law sigma' gradQ back.
    const Mat I = Mat::Identity(coeff.size(), coeff.size());
    const Vec rate = nn_update_rhs(*params, x, I, -coeff / gamma, gamma);
    const Vec flat = params->flatten() + dt * rate;
    *params = NNParams::unflatten(flat, params->input_dim(), params->width(), params->output_dim());
  };
  law.weights = [params]() { return params->flatten(); };
  return law;
}

inline void record(MetricsSeries& s, long long k, long long steps, int decimate, const MetricRecord& r) {
  if (k % decimate == 0 || k == steps) s.records.push_back(r);
}

}  // namespace detail

/// Matched-uncertainty control run for the lti / quartic benchmarks.
[[nodiscard]] inline MetricsSeries run_control(const SimConfig& cfg, std::uint64_t trial_seed, const RunOptions& opts = {}) {
  cfg.validate();
  const ControlBenchmark bench = make_benchmark(cfg);
  const int n = bench.n();
  const LyapunovCertificate cert = LyapunovCertificate::for_matrix(bench.A);
  const auto& ad = cfg.adaptation;

  detail::ControlLaw law;
  switch (ad.law) {
    case LawKind::none:
      law.input = [n](const Vec&, double) { return Vec::Zero(n).eval(); };
      break;
    case LawKind::oracle:
      law.input = [&bench](const Vec& x, double) { return bench.uncertainty(x); };
      break;
    case LawKind::parametric:
      if (cfg.kernel.variant == KernelVariant::finite_feature) {
        law = detail::parametric_law(elementwise_basis_map(n), ad.mirror);
      } else {
        law = detail::parametric_law(FeatureBank(kernel_for(cfg, n), cfg.kernel.K, bank_seed(cfg, trial_seed)), ad.mirror);
      }
      break;
    case LawKind::nonparametric:
      law = detail::nonparametric_law(kernel_for(cfg, n), cfg.dt, n);
      break;
    case LawKind::nn:
      law = detail::network_law(nn_init(n, ad.width, n, bank_seed(cfg, trial_seed)), ad.gamma);
      break;
  }

  MetricsSeries out;
  out.seed = trial_seed;
  const long long steps = cfg.steps();
  out.records.reserve(static_cast<std::size_t>(steps / cfg.decimate + 2));
  if (opts.record_step_times) out.step_seconds.reserve(static_cast<std::size_t>(steps));
  const Mat g_e = bench.error_input_gain();

  Vec x = bench.desired(0.0) + Vec::Constant(n, cfg.initial_offset);
  for (long long k = 0;; ++k) {
    const auto started = std::chrono::steady_clock::now();
    const double t = static_cast<double>(k) * cfg.dt;
    const Vec e = bench.error(x, t);
    const double Q = cert.value(e);
    const Vec u = law.input(x, t);
    const Vec h = bench.uncertainty(x);
    detail::record(out, k, steps, cfg.decimate, {t, e.norm(), u.norm(), (u - h).norm(), Q});
    if (opts.record_states) out.states.push_back(x);
    if (k == steps) break;

    const Vec rhs = bench.rhs(x, u, t);
    if (!rhs.allFinite()) {
      out.diverged = true;
      out.divergence_time = t;
      out.message = "non-finite vector field";
      break;
    }
    if (law.advance) {
      const double slope = deadzone_slope(ad.deadzone, Q);
      const Vec coeff = -(ad.gamma * slope) * (g_e.transpose() * cert.gradient(e));
      law.advance(t, x, coeff, cfg.dt);
    }
    x += cfg.dt * rhs;
    if (opts.record_step_times) {
      out.step_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
    }
    if (diverged(x)) {
      out.diverged = true;
      out.divergence_time = t + cfg.dt;
      out.message = "state norm exceeded divergence threshold";
      if (x.allFinite()) {
        const Vec e1 = bench.error(x, t + cfg.dt);
        out.records.push_back({t + cfg.dt, e1.norm(), 0.0, 0.0, cert.value(e1)});
      }
      break;
    }
  }
  if (law.weights) out.final_weights = law.weights();
  return out;
}

namespace detail {

template <FeatureMap Map>
MetricsSeries run_linear_prediction(const SimConfig& cfg, Map map, std::uint64_t trial_seed) {
  const Mat A = cfg.system_matrix();
  const int n = cfg.n;
  PredictorSpec spec;
  spec.zeta = cfg.zeta;
  spec.gamma = cfg.adaptation.gamma;
  spec.deadzone = cfg.adaptation.deadzone;
  spec.mirror_m = cfg.adaptation.mirror;
  const AdaptivePredictor<Map> predictor(spec, std::move(map));
  const bool learn = cfg.adaptation.law != LawKind::none;

  MetricsSeries out;
  out.seed = trial_seed;
  const long long steps = cfg.steps();
  Vec x = Vec::Constant(n, cfg.x0);
  PredictorState s = predictor.initial_state(x + Vec::Constant(n, cfg.initial_offset));
  for (long long k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    PredictorRates r = predictor.rates(s, x, t);
    record(out, k, steps, cfg.decimate,
           {t, (s.x_hat - x).norm(), (cfg.zeta * (s.x_hat - x)).norm(), (r.model - A * s.x_hat).norm(), r.energy});
    if (k == steps) break;
    if (!r.x_hat.allFinite() || !r.dual_m.allFinite()) {
      out.diverged = true;
      out.divergence_time = t;
      out.message = "non-finite predictor rates";
      break;
    }
    s.x_hat += cfg.dt * r.x_hat;
    if (learn) s.adapt.dual_m += cfg.dt * r.dual_m;
    x += cfg.dt * (A * x);
    if (diverged(x) || diverged(s.x_hat)) {
      out.diverged = true;
      out.divergence_time = t + cfg.dt;
      out.message = "state norm exceeded divergence threshold";
      break;
    }
  }
  out.final_weights = s.adapt.primal_m();
  return out;
}

/// Hybrid predictor: exact open-loop flow between measurements, then the
/// sqrt(beta) blend. interp_error holds E_{i+1} - beta exp(lambda dt) E_i,
/// which is nonpositive whenever the sampling inequality holds.
inline MetricsSeries run_discrete_prediction(const SimConfig& cfg, std::uint64_t trial_seed) {
  const Mat A = cfg.system_matrix();
  const int n = cfg.n;
  DiscretePredictorSpec spec{cfg.beta, 1.0};
  spec.validate();
  const FlowFn flow = lti_flow(A);
  const double lambda = lti_expansion_rate(A);
  const Mat step = (A * cfg.dt_meas).exp();

  MetricsSeries out;
  out.seed = trial_seed;
  Vec x = Vec::Constant(n, cfg.x0);
  Vec x_hat = x + Vec::Constant(n, cfg.initial_offset);
  const auto count = static_cast<long long>(std::floor(cfg.horizon / cfg.dt_meas + 1e-9));
  out.records.push_back({0.0, (x_hat - x).norm(), 0.0, 0.0, metric_energy(1.0, x_hat, x)});
  for (long long i = 0; i < count; ++i) {
    const Vec x_next = step * x;
    const DiscreteStep ds = discrete_sampling_step(spec, x_hat, x, x_next, flow, cfg.dt_meas);
    const double bound = cfg.beta * std::exp(lambda * cfg.dt_meas) * ds.energy_before;
    x = x_next;
    x_hat = ds.x_hat;
    out.records.push_back({static_cast<double>(i + 1) * cfg.dt_meas, (x_hat - x).norm(), 0.0, ds.energy_after - bound,
                           ds.energy_after});
  }
  return out;
}

}  // namespace detail

/// Adaptive prediction of the linear truth x' = A x (system "predictor").
[[nodiscard]] inline MetricsSeries run_linear_predictor(const SimConfig& cfg, std::uint64_t trial_seed) {
  cfg.validate();
  if (cfg.dt_meas > 0.0) return detail::run_discrete_prediction(cfg, trial_seed);
  if (cfg.kernel.variant == KernelVariant::finite_feature) {
    return detail::run_linear_prediction(cfg, linear_feature_map(cfg.n), trial_seed);
  }
  return detail::run_linear_prediction(
      cfg, FeatureBank(kernel_for(cfg, cfg.n), cfg.kernel.K, bank_seed(cfg, trial_seed)), trial_seed);
}

/// Symplectic adaptive predictor for the m-body problem.
[[nodiscard]] inline MetricsSeries run_nbody(const SimConfig& cfg, std::uint64_t trial_seed) {
  cfg.validate();
  const HamiltonianSpec spec = cfg.hamiltonian_spec();
  const int dim = spec.state_dim();
  const FeatureBank bank(spec.kernel(), cfg.kernel.K, bank_seed(cfg, trial_seed));
  const double gamma = cfg.adaptation.law == LawKind::none ? 0.0 : cfg.adaptation.gamma;

  MetricsSeries out;
  out.seed = trial_seed;
  const long long steps = cfg.steps();
  Vec x = nbody_initial_state(spec, cfg.seed);
  Vec x_hat = x + Vec::Constant(dim, cfg.initial_offset);
  Vec weights = Vec::Zero(bank.size());
  try {
    for (long long k = 0;; ++k) {
      const double t = static_cast<double>(k) * cfg.dt;
      const SymplecticRates r = symplectic_predictor_rhs(spec, bank, weights, x_hat, x, gamma);
      const Vec model = r.drift - spec.k_gain * (x - x_hat);
      Vec truth_at_hat;
      try {
        truth_at_hat = hamiltonian_rhs(spec, x_hat);
      } catch (const SingularityError&) {
        truth_at_hat = hamiltonian_rhs(spec, x);
      }
      const Vec diff = x_hat - x;
      detail::record(out, k, steps, cfg.decimate,
                     {t, diff.norm(), spec.k_gain * diff.norm(), (model - truth_at_hat).norm(), diff.squaredNorm()});
      if (k == steps) break;
      const Vec f = hamiltonian_rhs(spec, x);
      if (!r.drift.allFinite() || !f.allFinite()) {
        out.diverged = true;
        out.divergence_time = t;
        out.message = "non-finite vector field";
        break;
      }
      x_hat += cfg.dt * r.drift;
      weights += cfg.dt * r.weight_rate;
      x += cfg.dt * f;
      if (diverged(x) || diverged(x_hat)) {
        out.diverged = true;
        out.divergence_time = t + cfg.dt;
        out.message = "state norm exceeded divergence threshold";
        break;
      }
    }
  } catch (const SingularityError& e) {
    out.diverged = true;
    out.divergence_time = out.records.empty() ? 0.0 : out.records.back().t;
    out.message = e.what();
  }
  out.final_weights = weights;
  return out;
}

/// Dispatches one trial by system kind.
[[nodiscard]] inline MetricsSeries run_single(const SimConfig& cfg, std::uint64_t trial_seed, const RunOptions& opts = {}) {
  switch (cfg.system) {
    case SystemKind::lti:
    case SystemKind::quartic: return run_control(cfg, trial_seed, opts);
    case SystemKind::predictor: return run_linear_predictor(cfg, trial_seed);
    case SystemKind::nbody: return run_nbody(cfg, trial_seed);
  }
  throw ConfigError("unhandled system");
}

[[nodiscard]] inline std::vector<std::uint64_t> trial_seeds(const SimConfig& cfg) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.trials; ++i) seeds.push_back(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
  return seeds;
}

/// Runs `count` independent jobs on a small thread pool; results are ordered by index.
template <class Result>
std::vector<Result> parallel_map(std::size_t count, const std::function<Result(std::size_t)>& job,
                                 unsigned threads = 0) {
  std::vector<Result> results(count);
  if (count == 0) return results;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        results[i] = job(i);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

/// One series per derived trial seed; a divergent trial does not stop its siblings.
[[nodiscard]] inline std::vector<MetricsSeries> run_trials(const SimConfig& cfg, unsigned threads = 0) {
  cfg.validate();
  const auto seeds = trial_seeds(cfg);
  return parallel_map<MetricsSeries>(
      seeds.size(), [&](std::size_t i) { return run_single(cfg, seeds[i]); }, threads);
}

/// Median of the final window of one series.
[[nodiscard]] inline double final_window_median(const MetricsSeries& s, double fraction, Metric m = Metric::tracking_error) {
  const auto v = final_window(s, m, fraction);
  return median(v);
}

struct SweepRow {
  int K = 0;
  double q20 = 0.0;
  double q50 = 0.0;
  double q80 = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::vector<MetricsSeries>> runs;  // per K, per trial
};

/// Final-window tracking error quantiles across trials for each K.
[[nodiscard]] inline SweepResult run_sweep(const SimConfig& cfg, unsigned threads = 0) {
  if (cfg.sweep.K.empty()) throw ConfigError("sweep requires a nonempty sweep.K list");
  SweepResult result;
  for (const int K : cfg.sweep.K) {
    SimConfig c = cfg;
    c.kernel.K = K;
    auto runs = run_trials(c, threads);
    std::vector<double> finals;
    for (const auto& s : runs) finals.push_back(final_window_median(s, cfg.window));
    result.rows.push_back({K, quantile(finals, 0.2), quantile(finals, 0.5), quantile(finals, 0.8)});
    result.runs.push_back(std::move(runs));
  }
  return result;
}

[[nodiscard]] inline PowerLawFit fit_sweep(const SweepResult& sweep) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : sweep.rows) pts.emplace_back(row.K, row.q50);
  return fit_power_law(pts);
}

}  // namespace rfadapt
