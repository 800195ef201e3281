#pragma once

#include <cstdint>

#include "tensortopo/types.hpp"

namespace tensortopo {

/// The 4x4 Kronecker seed used for the synthetic 16- and 64-node benchmark graphs.
Eigen::MatrixXi kronecker_seed();

/// What kronecker_graph does when the weighted graph makes (I - A) badly conditioned.
enum class StabilityGuard {
  kNone,
  /// Rescale A by 0.95 / rho(A) when cond(I - A) exceeds the cap.
  kRescaleIfIllConditioned,
  /// Rescale A by 0.95 / rho(A) whenever rho(A) >= 1.
  kRescaleIfUnstable,
};

struct WeightedGraph {
  AdjacencyMatrix a;
  EdgeIndicator s;
  double spectral_radius = 0.0;  // of the returned A
  bool rescaled = false;
  double rescale_factor = 1.0;
};

/// Power-fold Kronecker product of `seed` with its diagonal zeroed; each edge gets a
/// weight drawn from Unif(weight_lo, weight_hi).
WeightedGraph kronecker_graph(const Eigen::MatrixXi& seed, int power, double weight_lo,
                              double weight_hi, std::uint64_t rng_seed,
                              StabilityGuard guard = StabilityGuard::kRescaleIfIllConditioned,
                              double max_condition = 1e8);

/// Directed Erdos-Renyi graph: each off-diagonal entry is an edge with probability p.
EdgeIndicator erdos_renyi(Index n, double p, std::uint64_t rng_seed);

/// Draws an edge weight Unif(weight_lo, weight_hi) for every edge of `s`, with the same
/// stability guard as kronecker_graph.
WeightedGraph weight_edges(const EdgeIndicator& s, double weight_lo, double weight_hi,
                           std::uint64_t rng_seed,
                           StabilityGuard guard = StabilityGuard::kRescaleIfIllConditioned,
                           double max_condition = 1e8);

/// Off-diagonal edges with a_hat(i, j) > eta, or |a_hat(i, j)| > eta when use_abs is set.
EdgeIndicator threshold_edges(const AdjacencyMatrix& a_hat, double eta, bool use_abs = false);

/// Edge identification error rate, in percent.
double eier(const EdgeIndicator& truth, const EdgeIndicator& estimate);

/// Squared Frobenius error normalised by N(N - 1).
double emse(const AdjacencyMatrix& truth, const AdjacencyMatrix& estimate);

double spectral_radius(const Matrix& m);

}  // namespace tensortopo
