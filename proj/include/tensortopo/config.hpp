#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tensortopo/cptensor.hpp"
#include "tensortopo/io.hpp"
#include "tensortopo/semsim.hpp"

namespace tensortopo {

/// Invalid or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Mode { kBatch, kPartial, kBlind, kTrack };
enum class GraphKind { kKronecker, kErdosRenyi };
enum class VarianceKind { kRandom, kScalar };
enum class EtaPolicy { kFixed, kOracleTrial, kOracleGlobal };
/// What the pipeline is told about R^x: the powers used to draw x, or the sample powers of
/// the drawn x in each window.
enum class RxSource { kPopulation, kSample };

struct GraphSpec {
  GraphKind kind = GraphKind::kKronecker;
  int power = 2;       // Kronecker: N = 4^power
  Index n = 5;         // Erdos-Renyi
  double p = 0.4;      // Erdos-Renyi
  double weight_lo = 0.2;
  double weight_hi = 0.5;
};

struct WindowSpec {
  Index m = 10;
  /// Samples per window; 0 uses the analytic correlation of each window instead.
  Index l = 1000;
  VarianceKind variance = VarianceKind::kRandom;
  double var_lo = 0.5;
  double var_hi = 2.5;
};

struct TrackSpec {
  double beta = 0.999;
  double a = 1e5;
  DriftPattern pattern = DriftPattern::kEdgeDrops;
  DriftOptions drift;
};

/// A swept parameter: one of l, m, noise_var, miss_probability, power, n, p, beta.
struct SweepSpec {
  std::string key;
  std::vector<double> values;
};

/// Real-data run: read a CSV instead of simulating.
struct InputSpec {
  std::string path;
  bool center = true;
};

struct ExperimentConfig {
  std::string name = "custom";
  Mode mode = Mode::kBatch;
  GraphSpec graph;
  double gain_lo = 2.0;
  double gain_hi = 3.0;
  WindowSpec windows;
  double noise_var = 1e-2;
  double miss_probability = 0.5;
  RxSource rx_source = RxSource::kPopulation;
  SolverOptions solver;
  bool resolve_blind_permutation = true;
  int trials = 1;
  std::uint64_t rng_seed = 1;
  EtaPolicy eta_policy = EtaPolicy::kOracleTrial;
  double eta = 0.0;
  bool eta_abs = false;
  TrackSpec track;
  std::optional<SweepSpec> sweep;   // x-axis of the plot data
  std::optional<SweepSpec> series;  // one curve per value
  std::optional<InputSpec> input;
  int threads = 0;  // 0: hardware concurrency

  Index node_count() const;
};

/// Throws ConfigError when a field is out of range or the mode lacks what it needs.
void validate(const ExperimentConfig& cfg);

ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
/// Named reproductions: fig3, fig4a, fig4b, fig4c, fig6, fig7, fig8, stocks.
ExperimentConfig preset(const std::string& name);

/// Loads a preset by name or a JSON file by path, then applies "dotted.key=value"
/// overrides (values parsed as JSON, falling back to strings).
ExperimentConfig load_config(const std::string& preset_or_path,
                             const std::vector<std::string>& overrides = {});

/// Sets a sweepable parameter by key; throws ConfigError for unknown keys.
void set_parameter(ExperimentConfig& cfg, const std::string& key, double value);

std::string to_string(Mode m);
std::string to_string(EtaPolicy p);

}  // namespace tensortopo
