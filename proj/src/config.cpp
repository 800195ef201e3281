#include "tensortopo/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace tensortopo {

namespace {

template <typename E>
struct EnumTable {
  std::vector<std::pair<E, std::string>> entries;

  std::string name(E e) const {
    for (const auto& [v, s] : entries)
      if (v == e) return s;
    return "?";
  }
  E parse(const std::string& s, const std::string& field) const {
    for (const auto& [v, n] : entries)
      if (n == s) return v;
    std::string allowed;
    for (const auto& [v, n] : entries) allowed += (allowed.empty() ? "" : ", ") + n;
    throw ConfigError(field + ": unknown value '" + s + "' (expected one of " + allowed + ")");
  }
};

const EnumTable<Mode> kModes{{{Mode::kBatch, "batch"},
                              {Mode::kPartial, "partial"},
                              {Mode::kBlind, "blind"},
                              {Mode::kTrack, "track"}}};
const EnumTable<GraphKind> kGraphs{
    {{GraphKind::kKronecker, "kronecker"}, {GraphKind::kErdosRenyi, "erdos_renyi"}}};
const EnumTable<VarianceKind> kVariances{
    {{VarianceKind::kRandom, "random"}, {VarianceKind::kScalar, "scalar"}}};
const EnumTable<EtaPolicy> kEtaPolicies{{{EtaPolicy::kFixed, "fixed"},
                                         {EtaPolicy::kOracleTrial, "oracle_trial"},
                                         {EtaPolicy::kOracleGlobal, "oracle_global"}}};
const EnumTable<RxSource> kRxSources{
    {{RxSource::kPopulation, "population"}, {RxSource::kSample, "sample"}}};
const EnumTable<DriftPattern> kPatterns{
    {{DriftPattern::kSinusoidal, "p1"}, {DriftPattern::kEdgeDrops, "p2"}}};
const EnumTable<SolverMethod> kMethods{{{SolverMethod::kLevenbergMarquardt, "lm"},
                                        {SolverMethod::kAlternating, "als"}}};

const std::vector<std::string> kSweepKeys{"l", "m", "noise_var", "miss_probability",
                                          "power", "n", "p", "beta"};

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename E>
void read_enum(const Json& j, const char* key, const EnumTable<E>& table, E& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) throw ConfigError(std::string("field '") + key + "' must be a string");
  out = table.parse(j.at(key).get<std::string>(), key);
}

void check_keys(const Json& j, const std::vector<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError(where + ": unknown field '" + it.key() + "'");
}

SweepSpec read_sweep(const Json& j, const std::string& where) {
  check_keys(j, {"key", "values"}, where);
  SweepSpec s;
  read(j, "key", s.key);
  read(j, "values", s.values);
  return s;
}

Json sweep_json(const SweepSpec& s) { return Json{{"key", s.key}, {"values", s.values}}; }

}  // namespace

std::string to_string(Mode m) { return kModes.name(m); }
std::string to_string(EtaPolicy p) { return kEtaPolicies.name(p); }

Index ExperimentConfig::node_count() const {
  if (graph.kind == GraphKind::kErdosRenyi) return graph.n;
  Index n = 1;
  for (int i = 0; i < graph.power; ++i) n *= 4;
  return n;
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.trials < 1) fail("trials must be >= 1");
  if (c.threads < 0) fail("threads must be >= 0");
  if (c.graph.kind == GraphKind::kKronecker && (c.graph.power < 1 || c.graph.power > 4))
    fail("graph.power must lie in [1, 4]");
  if (c.graph.kind == GraphKind::kErdosRenyi && c.graph.n < 2) fail("graph.n must be >= 2");
  if (!(c.graph.p >= 0.0 && c.graph.p <= 1.0)) fail("graph.p must lie in [0, 1]");
  if (!(c.graph.weight_lo > 0.0 && c.graph.weight_hi > c.graph.weight_lo))
    fail("graph weights must satisfy 0 < weight_lo < weight_hi");
  if (!(c.gain_lo > 0.0 && c.gain_hi >= c.gain_lo)) fail("gains must satisfy 0 < gain_lo <= gain_hi");
  if (c.windows.m < 2) fail("windows.m must be >= 2");
  if (c.windows.l < 0) fail("windows.l must be >= 0 (0 selects analytic slices)");
  if (!(c.windows.var_lo > 0.0 && c.windows.var_hi >= c.windows.var_lo))
    fail("variances must satisfy 0 < var_lo <= var_hi");
  if (!(c.noise_var >= 0.0)) fail("noise_var must be >= 0");
  if (!(c.miss_probability >= 0.0 && c.miss_probability <= 1.0))
    fail("miss_probability must lie in [0, 1]");
  if (c.solver.max_sweeps < 1) fail("solver.max_sweeps must be >= 1");
  if (c.solver.restarts < 0) fail("solver.restarts must be >= 0");
  if (!(c.solver.fit_tolerance >= 0.0)) fail("solver.fit_tolerance must be >= 0");
  if (c.eta_policy == EtaPolicy::kFixed && !(c.eta >= 0.0)) fail("eta must be >= 0");
  if (c.mode == Mode::kTrack) {
    if (!(c.track.beta > 0.0 && c.track.beta <= 1.0)) fail("track.beta must lie in (0, 1]");
    if (!(c.track.a > 0.0)) fail("track.a must be positive");
    if (c.windows.l < 1) fail("track mode needs sampled windows (windows.l >= 1)");
    if (c.input) fail("track mode needs simulated data with known exogenous powers");
  }
  if (c.input) {
    if (c.input->path.empty()) fail("input.path must be set");
    if (c.mode != Mode::kBlind) fail("real-data input supports blind mode only");
    if (c.eta_policy != EtaPolicy::kFixed)
      fail("real-data runs need a fixed eta (no ground truth for the oracle)");
    if (c.windows.l < 1) fail("real-data input needs windows.l >= 1");
    if (c.sweep || c.series) fail("real-data input does not support sweeps");
  }
  for (const auto* s : {&c.sweep, &c.series}) {
    if (!*s) continue;
    if (std::find(kSweepKeys.begin(), kSweepKeys.end(), (*s)->key) == kSweepKeys.end())
      fail("unknown sweep key '" + (*s)->key + "'");
    if ((*s)->values.empty()) fail("sweep '" + (*s)->key + "' has no values");
    for (double v : (*s)->values) {
      ExperimentConfig probe = c;
      probe.sweep.reset();
      probe.series.reset();
      set_parameter(probe, (*s)->key, v);
      validate(probe);
    }
  }
}

void set_parameter(ExperimentConfig& c, const std::string& key, double v) {
  auto as_int = [&](double x) {
    if (x != std::round(x)) throw ConfigError("sweep value for '" + key + "' must be an integer");
    return static_cast<Index>(x);
  };
  if (key == "l")
    c.windows.l = as_int(v);
  else if (key == "m")
    c.windows.m = as_int(v);
  else if (key == "noise_var")
    c.noise_var = v;
  else if (key == "miss_probability")
    c.miss_probability = v;
  else if (key == "power")
    c.graph.power = static_cast<int>(as_int(v));
  else if (key == "n")
    c.graph.n = as_int(v);
  else if (key == "p")
    c.graph.p = v;
  else if (key == "beta")
    c.track.beta = v;
  else
    throw ConfigError("unknown parameter '" + key + "'");
}

ExperimentConfig config_from_json(const Json& j) {
  check_keys(j, {"name", "mode", "graph", "gains", "windows", "noise_var", "miss_probability",
                 "rx_source", "solver", "trials", "rng_seed", "eta", "track", "sweep", "series",
                 "input", "threads"},
             "config");
  ExperimentConfig c;
  read(j, "name", c.name);
  read_enum(j, "mode", kModes, c.mode);
  if (j.contains("graph")) {
    const Json& g = j["graph"];
    check_keys(g, {"generator", "power", "n", "p", "weight_lo", "weight_hi"}, "graph");
    read_enum(g, "generator", kGraphs, c.graph.kind);
    read(g, "power", c.graph.power);
    read(g, "n", c.graph.n);
    read(g, "p", c.graph.p);
    read(g, "weight_lo", c.graph.weight_lo);
    read(g, "weight_hi", c.graph.weight_hi);
  }
  if (j.contains("gains")) {
    check_keys(j["gains"], {"lo", "hi"}, "gains");
    read(j["gains"], "lo", c.gain_lo);
    read(j["gains"], "hi", c.gain_hi);
  }
  if (j.contains("windows")) {
    const Json& w = j["windows"];
    check_keys(w, {"m", "l", "variance", "var_lo", "var_hi"}, "windows");
    read(w, "m", c.windows.m);
    read(w, "l", c.windows.l);
    read_enum(w, "variance", kVariances, c.windows.variance);
    read(w, "var_lo", c.windows.var_lo);
    read(w, "var_hi", c.windows.var_hi);
  }
  read(j, "noise_var", c.noise_var);
  read(j, "miss_probability", c.miss_probability);
  read_enum(j, "rx_source", kRxSources, c.rx_source);
  if (j.contains("solver")) {
    const Json& s = j["solver"];
    check_keys(s, {"method", "max_sweeps", "fit_tolerance", "restarts", "spectral_init",
                   "blind_warm_start", "resolve_blind_permutation", "dense_parameter_limit"},
               "solver");
    read_enum(s, "method", kMethods, c.solver.method);
    read(s, "max_sweeps", c.solver.max_sweeps);
    read(s, "fit_tolerance", c.solver.fit_tolerance);
    read(s, "restarts", c.solver.restarts);
    read(s, "spectral_init", c.solver.spectral_init);
    read(s, "blind_warm_start", c.solver.blind_warm_start);
    read(s, "resolve_blind_permutation", c.resolve_blind_permutation);
    read(s, "dense_parameter_limit", c.solver.dense_parameter_limit);
  }
  read(j, "trials", c.trials);
  read(j, "rng_seed", c.rng_seed);
  if (j.contains("eta")) {
    const Json& e = j["eta"];
    check_keys(e, {"policy", "value", "abs"}, "eta");
    read_enum(e, "policy", kEtaPolicies, c.eta_policy);
    read(e, "value", c.eta);
    read(e, "abs", c.eta_abs);
  }
  if (j.contains("track")) {
    const Json& t = j["track"];
    check_keys(t, {"beta", "a", "pattern", "amplitude", "frequency", "drop_probability",
                   "drop_windows"},
               "track");
    read(t, "beta", c.track.beta);
    read(t, "a", c.track.a);
    read_enum(t, "pattern", kPatterns, c.track.pattern);
    read(t, "amplitude", c.track.drift.amplitude);
    read(t, "frequency", c.track.drift.frequency);
    read(t, "drop_probability", c.track.drift.drop_probability);
    read(t, "drop_windows", c.track.drift.drop_windows);
  }
  if (j.contains("sweep") && !j["sweep"].is_null()) c.sweep = read_sweep(j["sweep"], "sweep");
  if (j.contains("series") && !j["series"].is_null()) c.series = read_sweep(j["series"], "series");
  if (j.contains("input") && !j["input"].is_null()) {
    check_keys(j["input"], {"path", "center"}, "input");
    InputSpec in;
    read(j["input"], "path", in.path);
    read(j["input"], "center", in.center);
    c.input = in;
  }
  read(j, "threads", c.threads);
  validate(c);
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j{
      {"name", c.name},
      {"mode", kModes.name(c.mode)},
      {"graph",
       {{"generator", kGraphs.name(c.graph.kind)},
        {"power", c.graph.power},
        {"n", c.graph.n},
        {"p", c.graph.p},
        {"weight_lo", c.graph.weight_lo},
        {"weight_hi", c.graph.weight_hi}}},
      {"gains", {{"lo", c.gain_lo}, {"hi", c.gain_hi}}},
      {"windows",
       {{"m", c.windows.m},
        {"l", c.windows.l},
        {"variance", kVariances.name(c.windows.variance)},
        {"var_lo", c.windows.var_lo},
        {"var_hi", c.windows.var_hi}}},
      {"noise_var", c.noise_var},
      {"miss_probability", c.miss_probability},
      {"rx_source", kRxSources.name(c.rx_source)},
      {"solver",
       {{"method", kMethods.name(c.solver.method)},
        {"max_sweeps", c.solver.max_sweeps},
        {"fit_tolerance", c.solver.fit_tolerance},
        {"restarts", c.solver.restarts},
        {"spectral_init", c.solver.spectral_init},
        {"blind_warm_start", c.solver.blind_warm_start},
        {"resolve_blind_permutation", c.resolve_blind_permutation},
        {"dense_parameter_limit", c.solver.dense_parameter_limit}}},
      {"trials", c.trials},
      {"rng_seed", c.rng_seed},
      {"eta", {{"policy", kEtaPolicies.name(c.eta_policy)}, {"value", c.eta}, {"abs", c.eta_abs}}},
      {"track",
       {{"beta", c.track.beta},
        {"a", c.track.a},
        {"pattern", kPatterns.name(c.track.pattern)},
        {"amplitude", c.track.drift.amplitude},
        {"frequency", c.track.drift.frequency},
        {"drop_probability", c.track.drift.drop_probability},
        {"drop_windows", c.track.drift.drop_windows}}},
      {"threads", c.threads}};
  j["sweep"] = c.sweep ? sweep_json(*c.sweep) : Json();
  j["series"] = c.series ? sweep_json(*c.series) : Json();
  j["input"] = c.input ? Json{{"path", c.input->path}, {"center", c.input->center}} : Json();
  return j;
}

std::vector<std::string> preset_names() {
  return {"fig3", "fig4a", "fig4b", "fig4c", "fig6", "fig7", "fig8", "stocks"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.graph.kind = GraphKind::kKronecker;
  c.graph.power = 3;
  c.windows.l = 1000;
  c.noise_var = 1e-2;
  if (name == "fig3") {
    c.mode = Mode::kBatch;
    c.trials = 500;
    c.sweep = SweepSpec{"m", {5, 10, 20}};
  } else if (name == "fig4a" || name == "fig4b" || name == "fig4c") {
    c.mode = name == "fig4a" ? Mode::kBatch : name == "fig4b" ? Mode::kPartial : Mode::kBlind;
    c.trials = 500;
    c.sweep = SweepSpec{"l", {250, 500, 1000, 2000}};
    c.series = SweepSpec{"m", {10, 20}};
  } else if (name == "fig6") {
    c.mode = Mode::kBlind;
    c.graph.kind = GraphKind::kErdosRenyi;
    c.graph.n = 5;
    c.graph.p = 0.4;
    c.trials = 100;
    c.sweep = SweepSpec{"l", {100, 250, 500, 1000, 2000}};
  } else if (name == "fig7" || name == "fig8") {
    c.mode = Mode::kTrack;
    c.windows.m = 200;
    c.windows.l = 2000;
    c.trials = 100;
    c.track.pattern = name == "fig7" ? DriftPattern::kSinusoidal : DriftPattern::kEdgeDrops;
    c.series = SweepSpec{"l", {500, 2000, 3000}};
  } else if (name == "stocks") {
    c.mode = Mode::kBlind;
    c.windows.m = 12;
    c.windows.l = 100;
    c.trials = 1;
    c.solver.restarts = 100;
    c.eta_policy = EtaPolicy::kFixed;
    c.eta = 0.1;
    c.eta_abs = true;
    c.input = InputSpec{"stocks.csv", true};
  } else {
    std::string all;
    for (const auto& p : preset_names()) all += (all.empty() ? "" : ", ") + p;
    throw ConfigError("unknown preset '" + name + "' (available: " + all + ")");
  }
  return c;
}

ExperimentConfig load_config(const std::string& preset_or_path,
                             const std::vector<std::string>& overrides) {
  const auto names = preset_names();
  Json j;
  if (std::find(names.begin(), names.end(), preset_or_path) != names.end()) {
    j = config_to_json(preset(preset_or_path));
  } else {
    if (!std::filesystem::exists(preset_or_path))
      throw ConfigError("'" + preset_or_path + "' is neither a preset nor a readable file");
    try {
      j = read_json(preset_or_path);
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
    const std::string key = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    Json value;
    try {
      value = Json::parse(raw);
    } catch (const Json::exception&) {
      value = raw;
    }
    Json::json_pointer ptr("/" + [&] {
      std::string p = key;
      std::replace(p.begin(), p.end(), '.', '/');
      return p;
    }());
    j[ptr] = value;
  }
  return config_from_json(j);
}

}  // namespace tensortopo
