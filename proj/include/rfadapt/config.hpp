#pragma once

// Experiment configuration: one JSON document shared by every subcommand.
// Unknown keys are rejected so typos surface before a run starts.

#include "rfadapt/benchmarks.hpp"
#include "rfadapt/bounds.hpp"
#include "rfadapt/deadzone.hpp"
#include "rfadapt/features.hpp"
#include "rfadapt/hamiltonian.hpp"
#include "rfadapt/mirror.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rfadapt {

using Json = nlohmann::json;

enum class SystemKind { lti, quartic, nbody, predictor };
enum class LawKind { none, oracle, parametric, nonparametric, nn };

[[nodiscard]] inline SystemKind parse_system(std::string_view s) {
  if (s == "lti") return SystemKind::lti;
  if (s == "quartic") return SystemKind::quartic;
  if (s == "nbody") return SystemKind::nbody;
  if (s == "predictor") return SystemKind::predictor;
  throw ConfigError("unknown system '" + std::string(s) + "'");
}

[[nodiscard]] inline std::string_view to_string(SystemKind s) {
  switch (s) {
    case SystemKind::lti: return "lti";
    case SystemKind::quartic: return "quartic";
    case SystemKind::nbody: return "nbody";
    case SystemKind::predictor: return "predictor";
  }
  return "unknown";
}

[[nodiscard]] inline LawKind parse_law(std::string_view s) {
  if (s == "none") return LawKind::none;
  if (s == "oracle") return LawKind::oracle;
  if (s == "parametric") return LawKind::parametric;
  if (s == "nonparametric") return LawKind::nonparametric;
  if (s == "nn") return LawKind::nn;
  throw ConfigError("unknown adaptation law '" + std::string(s) + "'");
}

[[nodiscard]] inline std::string_view to_string(LawKind l) {
  switch (l) {
    case LawKind::none: return "none";
    case LawKind::oracle: return "oracle";
    case LawKind::parametric: return "parametric";
    case LawKind::nonparametric: return "nonparametric";
    case LawKind::nn: return "nn";
  }
  return "unknown";
}

struct KernelConfig {
  KernelVariant variant = KernelVariant::decomposable;
  double sigma = 1.0;
  int K = 200;
  std::optional<std::uint64_t> seed;  // bank master seed; defaults to the run seed
};

struct AdaptationConfig {
  LawKind law = LawKind::parametric;
  double gamma = 1.0;
  DeadzoneSpec deadzone = DeadzoneSpec::none();
  MirrorMap mirror;
  int width = 32;
};

struct SweepConfig {
  std::vector<int> K;
};

struct SimConfig {
  SystemKind system = SystemKind::lti;
  int n = 5;
  int m = 2;
  int d = 2;
  std::optional<Mat> A;
  std::uint64_t a_seed = 7;
  double a_scale = 1.0;
  double a_shift = 2.0;
  double zeta = 2.0;
  double k_gain = 5.0;
  double sigma_w = 1.0;
  double beta = 0.5;
  double dt_meas = 0.0;  // > 0 selects the discrete-sampling predictor
  double x0 = 1.0;
  double initial_offset = 0.5;
  double dt = 1e-3;
  double horizon = 10.0;
  std::uint64_t seed = 0;
  int trials = 1;
  int decimate = 1;
  double window = 0.1;
  AdaptationConfig adaptation;
  KernelConfig kernel;
  SweepConfig sweep;

  [[nodiscard]] long long steps() const { return static_cast<long long>(std::floor(horizon / dt + 1e-9)); }
  [[nodiscard]] int state_dim() const { return system == SystemKind::nbody ? 2 * m * d : n; }

  /// The resolved A: explicit when given, otherwise the seeded default.
  [[nodiscard]] Mat system_matrix() const {
    if (A) return *A;
    return stable_matrix(n, a_seed, a_scale, a_shift);
  }

  [[nodiscard]] HamiltonianSpec hamiltonian_spec() const {
    HamiltonianSpec h;
    h.m = m;
    h.d = d;
    h.k_gain = k_gain;
    h.sigma_w = sigma_w;
    return h;
  }

  void validate() const;
};

namespace detail {

inline void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline Mat read_matrix(const Json& j, const char* key) {
  const Json& a = j.at(key);
  if (!a.is_array() || a.empty()) throw ConfigError(std::string(key) + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(a.size());
  const auto cols = static_cast<Eigen::Index>(a.at(0).size());
  Mat M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = a.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(std::string(key) + " rows must all have the same length");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      const Json& v = row.at(static_cast<std::size_t>(k));
      if (!v.is_number()) throw ConfigError(std::string(key) + " entries must be numbers");
      M(i, k) = v.get<double>();
    }
  }
  return M;
}

inline Json matrix_to_json(const Mat& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

inline void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(horizon >= dt)) throw ConfigError("horizon must be at least dt");
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (decimate < 1) throw ConfigError("decimate must be at least 1");
  if (!(window > 0.0 && window <= 1.0)) throw ConfigError("window must lie in (0, 1]");
  if (system != SystemKind::nbody && n < 1) throw ConfigError("n must be positive");
  if (A) {
    if (A->rows() != n || A->cols() != n) throw ConfigError("A must be n x n");
    if (!(spectral_abscissa(*A) < 0.0)) throw ConfigError("A must have eigenvalues in the open left half-plane");
  }
  adaptation.deadzone.validate();
  adaptation.mirror.validate();
  const LawKind law = adaptation.law;
  if ((law == LawKind::parametric || law == LawKind::nonparametric || law == LawKind::nn) && !(adaptation.gamma > 0.0)) {
    throw ConfigError("adaptation gamma must be positive");
  }
  if (law == LawKind::nn && adaptation.width < 1) throw ConfigError("network width must be positive");
  if (kernel.variant != KernelVariant::finite_feature && !(kernel.sigma > 0.0)) {
    throw ConfigError("kernel sigma must be positive");
  }
  if (law == LawKind::parametric && kernel.variant != KernelVariant::finite_feature && kernel.K < 1) {
    throw ConfigError("feature count K must be at least 1");
  }
  for (std::size_t i = 0; i < sweep.K.size(); ++i) {
    if (sweep.K[i] < 1) throw ConfigError("sweep K values must be positive");
    if (i > 0 && sweep.K[i] <= sweep.K[i - 1]) throw ConfigError("sweep K values must be strictly increasing");
  }

  switch (system) {
    case SystemKind::lti:
    case SystemKind::quartic:
      if (law == LawKind::nonparametric && kernel.variant == KernelVariant::symplectic) {
        throw ConfigError("symplectic kernel is only available for the nbody system");
      }
      if (kernel.variant == KernelVariant::symplectic && n % 2 != 0) {
        throw ConfigError("symplectic kernel requires an even dimension, got " + std::to_string(n));
      }
      if (!A) (void)system_matrix();
      break;
    case SystemKind::nbody:
      hamiltonian_spec().validate();
      if (law != LawKind::parametric && law != LawKind::none) {
        throw ConfigError("nbody supports the parametric (symplectic feature) law or none");
      }
      if (kernel.variant != KernelVariant::symplectic) throw ConfigError("nbody requires the symplectic kernel variant");
      if (!(k_gain > 0.0)) throw ConfigError("k_gain must be positive");
      break;
    case SystemKind::predictor:
      if (!(zeta > 0.0)) throw ConfigError("zeta must be positive");
      if (law != LawKind::parametric && law != LawKind::none) {
        throw ConfigError("predictor supports the parametric law or none");
      }
      if (dt_meas < 0.0) throw ConfigError("dt_meas must be nonnegative");
      if (dt_meas > 0.0 && !(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
      if (kernel.variant == KernelVariant::symplectic && n % 2 != 0) {
        throw ConfigError("symplectic kernel requires an even dimension, got " + std::to_string(n));
      }
      if (!A) (void)system_matrix();
      break;
  }
}

[[nodiscard]] inline SimConfig parse_config(const Json& j) {
  detail::reject_unknown(j,
                         {"system", "n", "m", "d", "A", "a_seed", "a_scale", "a_shift", "zeta", "k_gain", "sigma_w",
                          "beta", "dt_meas", "x0", "initial_offset", "dt", "horizon", "seed", "trials", "decimate",
                          "window", "adaptation", "kernel", "sweep", "bound", "check", "description"},
                         "config");
  SimConfig c;
  std::string system = "lti";
  detail::read(j, "system", system);
  c.system = parse_system(system);
  detail::read(j, "n", c.n);
  detail::read(j, "m", c.m);
  detail::read(j, "d", c.d);
  if (j.contains("A")) c.A = detail::read_matrix(j, "A");
  detail::read(j, "a_seed", c.a_seed);
  detail::read(j, "a_scale", c.a_scale);
  detail::read(j, "a_shift", c.a_shift);
  detail::read(j, "zeta", c.zeta);
  detail::read(j, "k_gain", c.k_gain);
  detail::read(j, "sigma_w", c.sigma_w);
  detail::read(j, "beta", c.beta);
  detail::read(j, "dt_meas", c.dt_meas);
  detail::read(j, "x0", c.x0);
  detail::read(j, "initial_offset", c.initial_offset);
  detail::read(j, "dt", c.dt);
  detail::read(j, "horizon", c.horizon);
  detail::read(j, "seed", c.seed);
  detail::read(j, "trials", c.trials);
  detail::read(j, "decimate", c.decimate);
  detail::read(j, "window", c.window);

  if (j.contains("adaptation")) {
    const Json& a = j.at("adaptation");
    detail::reject_unknown(a, {"law", "gamma", "deadzone", "mirror", "width"}, "adaptation");
    std::string law = "parametric";
    detail::read(a, "law", law);
    c.adaptation.law = parse_law(law);
    detail::read(a, "gamma", c.adaptation.gamma);
    detail::read(a, "width", c.adaptation.width);
    if (a.contains("deadzone")) {
      const Json& dz = a.at("deadzone");
      detail::reject_unknown(dz, {"variant", "delta", "gamma_s"}, "adaptation.deadzone");
      std::string v = "none";
      detail::read(dz, "variant", v);
      c.adaptation.deadzone.variant = parse_deadzone_variant(v);
      c.adaptation.deadzone.threshold = 0.0;
      c.adaptation.deadzone.smoothing = 0.0;
      detail::read(dz, "delta", c.adaptation.deadzone.threshold);
      detail::read(dz, "gamma_s", c.adaptation.deadzone.smoothing);
    }
    if (a.contains("mirror")) {
      const Json& mm = a.at("mirror");
      detail::reject_unknown(mm, {"variant", "beta"}, "adaptation.mirror");
      std::string v = "euclidean";
      detail::read(mm, "variant", v);
      c.adaptation.mirror.variant = parse_mirror_variant(v);
      detail::read(mm, "beta", c.adaptation.mirror.beta);
    }
  }

  if (j.contains("kernel")) {
    const Json& k = j.at("kernel");
    detail::reject_unknown(k, {"variant", "sigma", "n", "d", "d1", "K", "seed"}, "kernel");
    std::string v = "decomposable";
    detail::read(k, "variant", v);
    c.kernel.variant = parse_kernel_variant(v);
    detail::read(k, "sigma", c.kernel.sigma);
    detail::read(k, "K", c.kernel.K);
    if (k.contains("seed")) c.kernel.seed = k.at("seed").get<std::uint64_t>();
    // Dimensions are implied by the system; explicit values must agree.
    const int n = c.state_dim();
    for (const char* key : {"n", "d"}) {
      if (k.contains(key) && k.at(key).get<int>() != n) {
        throw ConfigError(std::string("kernel.") + key + " = " + std::to_string(k.at(key).get<int>()) +
                          " disagrees with the system dimension " + std::to_string(n));
      }
    }
    if (k.contains("d1")) {
      const int d1 = k.at("d1").get<int>();
      int want = 1;
      if (c.kernel.variant == KernelVariant::decomposable || c.kernel.variant == KernelVariant::divergence_free) want = n;
      if (c.kernel.variant == KernelVariant::finite_feature) want = c.system == SystemKind::predictor ? n * n : 6;
      if (d1 != want) throw ConfigError("kernel.d1 = " + std::to_string(d1) + " but the variant implies " + std::to_string(want));
    }
  }

  if (j.contains("sweep")) {
    const Json& s = j.at("sweep");
    detail::reject_unknown(s, {"K"}, "sweep");
    detail::read(s, "K", c.sweep.K);
  }

  c.validate();
  return c;
}

[[nodiscard]] inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

[[nodiscard]] inline SimConfig load_config(const std::string& path) { return parse_config(load_json(path)); }

/// Fully resolved configuration, including the concrete A matrix.
[[nodiscard]] inline Json to_json(const SimConfig& c) {
  Json j;
  j["system"] = std::string(to_string(c.system));
  j["n"] = c.n;
  j["m"] = c.m;
  j["d"] = c.d;
  if (c.system != SystemKind::nbody) j["A"] = detail::matrix_to_json(c.system_matrix());
  j["zeta"] = c.zeta;
  j["k_gain"] = c.k_gain;
  j["sigma_w"] = c.sigma_w;
  j["beta"] = c.beta;
  j["dt_meas"] = c.dt_meas;
  j["x0"] = c.x0;
  j["initial_offset"] = c.initial_offset;
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["decimate"] = c.decimate;
  j["window"] = c.window;
  Json a;
  a["law"] = std::string(to_string(c.adaptation.law));
  a["gamma"] = c.adaptation.gamma;
  a["width"] = c.adaptation.width;
  a["deadzone"] = {{"variant", std::string(to_string(c.adaptation.deadzone.variant))},
                   {"delta", c.adaptation.deadzone.threshold},
                   {"gamma_s", c.adaptation.deadzone.smoothing}};
  a["mirror"] = {{"variant", std::string(to_string(c.adaptation.mirror.variant))}, {"beta", c.adaptation.mirror.beta}};
  j["adaptation"] = a;
  Json k;
  k["variant"] = std::string(to_string(c.kernel.variant));
  k["sigma"] = c.kernel.sigma;
  k["K"] = c.kernel.K;
  k["n"] = c.state_dim();
  k["d"] = c.state_dim();
  if (c.kernel.seed) k["seed"] = *c.kernel.seed;
  j["kernel"] = k;
  if (!c.sweep.K.empty()) j["sweep"] = {{"K", c.sweep.K}};
  return j;
}

struct BoundRequest {
  BoundInputs inputs;
  std::optional<double> epsilon;
  std::vector<long long> K;
  std::string feature_norm = "constant";
};

/// The "bound" section: calculator inputs, an optional epsilon and a list of K.
[[nodiscard]] inline BoundRequest parse_bound_request(const Json& root) {
  if (!root.contains("bound")) throw ConfigError("config has no 'bound' section");
  const Json& j = root.at("bound");
  detail::reject_unknown(j,
                         {"B_h", "B_X", "n", "d1", "delta", "feature_norm", "sigma_w", "B_Phi", "second_moment",
                          "w_second_moment", "beta", "L", "mu", "B_ge", "B_gradQ", "C", "epsilon", "K"},
                         "bound");
  BoundRequest r;
  BoundInputs& in = r.inputs;
  detail::read(j, "B_h", in.B_h);
  detail::read(j, "B_X", in.B_X);
  detail::read(j, "n", in.n);
  detail::read(j, "d1", in.d1);
  detail::read(j, "delta", in.delta);
  detail::read(j, "second_moment", in.second_moment);
  detail::read(j, "w_second_moment", in.w_second_moment);
  detail::read(j, "beta", in.beta);
  detail::read(j, "L", in.L);
  detail::read(j, "mu", in.mu);
  detail::read(j, "B_ge", in.B_ge);
  detail::read(j, "B_gradQ", in.B_gradQ);
  detail::read(j, "C", in.C_h_delta);
  detail::read(j, "feature_norm", r.feature_norm);
  if (r.feature_norm == "gaussian") {
    double sigma_w = 1.0;
    detail::read(j, "sigma_w", sigma_w);
    if (!(sigma_w > 0.0)) throw ConfigError("bound.sigma_w must be positive");
    in.B_Phi = gaussian_feature_norm_bound(in.n, sigma_w);
  } else if (r.feature_norm == "constant") {
    double value = 1.0;
    detail::read(j, "B_Phi", value);
    if (!(value > 0.0)) throw ConfigError("bound.B_Phi must be positive");
    in.B_Phi = constant_feature_norm_bound(value);
  } else {
    throw ConfigError("bound.feature_norm must be 'constant' or 'gaussian'");
  }
  if (j.contains("epsilon")) r.epsilon = j.at("epsilon").get<double>();
  detail::read(j, "K", r.K);
  try {
    in.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("bound: ") + e.what());
  }
  if (r.epsilon && !(*r.epsilon > 0.0)) throw ConfigError("bound.epsilon must be positive");
  for (const long long k : r.K) {
    if (k < 1) throw ConfigError("bound.K entries must be at least 1");
  }
  return r;
}

struct CheckRequest {
  std::vector<KernelVariant> variants{KernelVariant::decomposable, KernelVariant::curl_free};
  int n = 2;
  double sigma = 1.0;
  int K = 100000;
  int pairs = 10;
  double radius = 1.0;
};

/// The "check" section for kernel-check.
[[nodiscard]] inline CheckRequest parse_check_request(const Json& root) {
  CheckRequest r;
  if (!root.contains("check")) return r;
  const Json& j = root.at("check");
  detail::reject_unknown(j, {"variants", "n", "sigma", "K", "pairs", "radius"}, "check");
  if (j.contains("variants")) {
    r.variants.clear();
    for (const auto& v : j.at("variants")) {
      const auto kind = parse_kernel_variant(v.get<std::string>());
      if (kind == KernelVariant::finite_feature) throw ConfigError("kernel-check needs translation-invariant variants");
      r.variants.push_back(kind);
    }
  }
  detail::read(j, "n", r.n);
  detail::read(j, "sigma", r.sigma);
  detail::read(j, "K", r.K);
  detail::read(j, "pairs", r.pairs);
  detail::read(j, "radius", r.radius);
  if (r.n < 1 || r.K < 2 || r.pairs < 1 || !(r.sigma > 0.0) || !(r.radius > 0.0)) {
    throw ConfigError("check: n, K, pairs, sigma and radius must be positive (K at least 2)");
  }
  return r;
}

}  // namespace rfadapt
