#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tensortopo/cptensor.hpp"
#include "tensortopo/graphgen.hpp"
#include "tensortopo/semsim.hpp"
#include "tensortopo/types.hpp"

namespace tensortopo {

/// A failure inside the batch pipeline, tagged with the stage that raised it
/// ("correlation", "decomposition", "recovery" or "threshold").
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// A = I - Diag(phi^{-1})^{-1} phi^{-1}, with an exactly zero diagonal.
///
/// Throws SingularMatrixError when phi is singular, and Error when a diagonal entry of
/// phi^{-1} has magnitude <= 1e-12.
AdjacencyMatrix recover_adjacency(const MixingMatrix& phi_hat);

struct IdentifiabilityReport {
  /// kr(R^x); only evaluated when every entry is known (0 otherwise).
  int kruskal_rank_rx = 0;
  /// The rank search was capped, so kruskal_rank_rx is a lower bound.
  bool kruskal_rank_capped = false;
  bool fully_known = false;
  bool full_condition_met = false;
  bool partial_condition_met = false;
  std::vector<std::pair<Index, Index>> failing_pairs;  // i < j
};

/// Advisory checks on R^x and its known-entry mask; never throws on valid input.
///
/// The partial test takes the rows known for node i or node j and requires the two
/// sub-columns to be independent: 1 - cos^2 > `tolerance`.
IdentifiabilityReport check_identifiability(const ExogenousCorrelation& rx,
                                            double tolerance = 1e-8);

/// Reorders the columns of a blind estimate Z = phi P Lambda so that each column sits where
/// its row of Z^{-1} is largest relative to the row norm. For |a_ij| < 1 this is the identity
/// ordering of phi.
MixingMatrix resolve_permutation(const MixingMatrix& phi_hat);

struct Consensus {
  EdgeIndicator modal;
  int votes = 0;
  int total = 0;
  /// Unique supports with their counts, in first-seen order.
  std::vector<std::pair<EdgeIndicator, int>> table;
  /// More than one support reached the top count; the first seen won.
  bool tie = false;
};

/// Frequency table and modal support; throws std::invalid_argument on empty input or
/// mixed dimensions.
Consensus tally_supports(const std::vector<EdgeIndicator>& estimates);
EdgeIndicator majority_vote(const std::vector<EdgeIndicator>& estimates);

struct TopologyEstimate {
  AdjacencyMatrix a_hat;
  EdgeIndicator s_hat;
  MixingMatrix phi_hat;
  double fit = 0.0;
  bool converged = false;
  double eta = 0.0;
  bool use_abs = false;
  IdentifiabilityReport report;
  std::vector<std::string> warnings;
  /// Blind mode: every restart that could be recovered, its support at `eta`, and the
  /// consensus of those supports.
  std::vector<AdjacencyMatrix> restart_adjacency;
  std::vector<EdgeIndicator> restart_supports;
  Consensus consensus;
  /// Best restart with objective trace, for diagnostics.
  CPResult solve;
};

struct BatchOptions {
  double eta = 0.0;
  bool use_abs = false;
  /// Blind problems only: reorder columns by diagonal dominance before recovery.
  bool resolve_blind_permutation = true;
  SolverOptions solver;
};

/// Decompose a ready tensor, recover A, threshold.
TopologyEstimate infer_topology_from_tensor(const CorrelationTensor& tensor,
                                            const ExogenousCorrelation& rx_known,
                                            const BatchOptions& opts);

/// Sample correlations per window, then infer_topology_from_tensor.
TopologyEstimate infer_topology_batch(const NodalSeries& y, const std::vector<Index>& boundaries,
                                      const ExogenousCorrelation& rx_known,
                                      const BatchOptions& opts);

/// Re-thresholds an estimate in place, including restart supports and their consensus.
void apply_threshold(TopologyEstimate& est, double eta, bool use_abs);

/// 50 log-spaced thresholds between the smallest and largest positive off-diagonal
/// magnitudes of `a_hat` (raw values, or absolute values with `use_abs`). The lowest point
/// is the next double below the smallest magnitude so that every edge can be kept.
std::vector<double> eta_grid(const AdjacencyMatrix& a_hat, bool use_abs, int points = 50);

struct EtaChoice {
  double eta = 0.0;
  double eier = 100.0;
};

/// Evaluation only: the grid threshold with the lowest EIER against `truth`
/// (first on ties). Returns eta 0 when the grid is empty.
EtaChoice oracle_eta(const EdgeIndicator& truth, const AdjacencyMatrix& a_hat, bool use_abs);

}  // namespace tensortopo
