#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tensortopo/config.hpp"
#include "tensortopo/graphgen.hpp"
#include "tensortopo/topology.hpp"
#include "tensortopo/tracker.hpp"

namespace tensortopo {

/// Everything drawn for one simulated trial.
struct SimulatedTrial {
  WeightedGraph graph;
  InputGainMatrix gains;
  WindowPlan plan;
  NodalSeries x;  // empty for analytic slices
  NodalSeries y;  // empty for analytic slices
  CorrelationTensor tensor;
  ExogenousCorrelation known;  // values per rx_source, mask per mode
  /// Track mode: topology in force during window m is topology[m] (m = 1..M); [0] is the base.
  std::vector<AdjacencyMatrix> topology;
};

/// Stream seeds: trial seed = derive_seed(rng_seed, trial); stages use derive_seed(trial seed, k).
SimulatedTrial simulate_trial(const ExperimentConfig& cfg, int trial);

struct TrialResult {
  int trial = 0;
  std::string series = "all";
  double series_value = std::numeric_limits<double>::quiet_NaN();
  double x = std::numeric_limits<double>::quiet_NaN();
  bool ok = true;
  std::string error;
  double eier = std::numeric_limits<double>::quiet_NaN();
  double emse = std::numeric_limits<double>::quiet_NaN();
  double fit = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int sweeps = 0;
  double eta = 0.0;
  double miss_fraction = std::numeric_limits<double>::quiet_NaN();
  double max_objective_increase = 0.0;
  int consensus_votes = 0;
  double wall_time = 0.0;
  std::vector<double> eier_curve;  // track mode, one entry per window
  std::vector<double> emse_curve;
  // Kept in memory for threshold selection across trials; not serialised.
  AdjacencyMatrix a_hat;
  EdgeIndicator truth;
};

/// Runs one trial of `cfg` (sweep and series already applied).
TrialResult run_trial(const ExperimentConfig& cfg, int trial);

struct AggregateRow {
  std::string series;
  double series_value = std::numeric_limits<double>::quiet_NaN();
  double x = std::numeric_limits<double>::quiet_NaN();
  int trials = 0;
  int failures = 0;
  double eier_mean = 0, eier_median = 0, eier_q25 = 0, eier_q75 = 0;
  double success_rate = 0;  // fraction of successful trials with EIER == 0
  double emse_mean = 0, emse_median = 0;
  double fit_median = 0;
};

struct CurveRow {
  std::string series;
  Index window = 0;
  double eier_mean = 0, eier_median = 0, eier_q25 = 0, eier_q75 = 0;
  double emse_mean = 0, emse_median = 0, emse_q25 = 0, emse_q75 = 0;
};

struct ConsensusReport {
  Consensus consensus;
  std::string summary;  // e.g. "92 out of 100"
};

/// Frequency table and modal support of repeated blind estimates.
ConsensusReport consensus_report(const std::vector<EdgeIndicator>& estimates);

struct ExperimentReport {
  ExperimentConfig config;
  std::string eta_label;
  std::vector<TrialResult> trials;
  std::vector<AggregateRow> aggregates;
  std::vector<CurveRow> curves;
  /// Real-data runs only.
  std::optional<TopologyEstimate> real_estimate;
  std::optional<ConsensusReport> consensus;
  std::vector<std::string> notes;
  double wall_time = 0.0;
};

/// Runs every (series, x, trial) job on a worker pool; results do not depend on the
/// thread count. Per-trial failures are recorded, not thrown.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Aggregates grouped by (series, x), recomputed from trial rows alone.
std::vector<AggregateRow> aggregate(const std::vector<TrialResult>& trials);
std::vector<CurveRow> aggregate_curves(const std::vector<TrialResult>& trials);

/// Linear-interpolation quantile of the finite entries; NaN when none.
double quantile(std::vector<double> values, double q);

Json trial_to_json(const TrialResult& t, bool include_timing);
Json report_to_json(const ExperimentReport& r, bool include_timing = false);
void write_trials_csv(const std::filesystem::path& path, const ExperimentReport& r);
/// x-variable, per-series mean / median / quartiles (per window in track mode).
void write_plot_csv(const std::filesystem::path& path, const ExperimentReport& r);

struct IngestResult {
  NodalSeries series;
  std::vector<Index> boundaries;
  Index dropped = 0;
  std::vector<std::string> warnings;
};

/// Optional per-column centring, then uniform windows of `window_length`; trailing samples
/// that do not fill a window are dropped and reported.
IngestResult ingest_series(const NodalSeries& raw, Index window_length, bool center);
IngestResult ingest_csv(const std::filesystem::path& path, Index window_length, bool center);

}  // namespace tensortopo
