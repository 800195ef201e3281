#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensortopo/types.hpp"

namespace tensortopo {

/// Diagonal exogenous gains B = Diag(b). Every gain is nonzero.
class InputGainMatrix {
 public:
  InputGainMatrix() = default;
  explicit InputGainMatrix(Vector b);

  Index n() const noexcept { return b_.size(); }
  const Vector& diagonal() const noexcept { return b_; }

 private:
  Vector b_;
};

/// Gains drawn i.i.d. from Unif(lo, hi).
InputGainMatrix random_gains(Index n, double lo, double hi, std::uint64_t rng_seed);

/// Piecewise-stationary window layout.
///
/// Windows are half-open sample ranges [boundaries[m], boundaries[m + 1]) with
/// boundaries[0] == 0, so window m has length boundaries[m + 1] - boundaries[m].
/// Row m of `variances` holds the per-node exogenous powers of window m.
struct WindowPlan {
  std::vector<Index> boundaries;
  Matrix variances;  // M x N

  Index window_count() const { return static_cast<Index>(boundaries.size()) - 1; }
  Index node_count() const { return variances.cols(); }
  Index window_length(Index m) const { return boundaries[m + 1] - boundaries[m]; }
  Index total_samples() const { return boundaries.back(); }

  /// Throws std::invalid_argument on non-increasing boundaries or non-positive variances.
  void validate() const;
};

/// M windows of equal length L.
std::vector<Index> uniform_boundaries(Index m_windows, Index window_length);
WindowPlan uniform_plan(Index window_length, Matrix variances);

/// Per-node, per-window variances drawn i.i.d. from Unif(lo, hi).
Matrix random_variance_profile(Index m_windows, Index n, double lo, double hi,
                               std::uint64_t rng_seed);
/// sigma_m^2 * I per window: every node shares the window's variance.
Matrix scalar_variance_profile(const Vector& window_variances, Index n);

/// Time-by-node sample matrix with optional node names.
class NodalSeries {
 public:
  NodalSeries() = default;
  explicit NodalSeries(Matrix values, std::vector<std::string> names = {});

  Index samples() const noexcept { return values_.rows(); }
  Index n() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  Matrix values_;
  std::vector<std::string> names_;
};

/// (I - A)^{-1} Diag(b). Throws SingularMatrixError when cond(I - A) > max_condition.
MixingMatrix mixing_matrix(const AdjacencyMatrix& a, const InputGainMatrix& b,
                           double max_condition = 1e12);

/// R^y = Phi Diag(rho) Phi^T, the noiseless correlation of one window.
Matrix analytic_correlation(const MixingMatrix& phi, const Vector& rho);

NodalSeries simulate_exogenous(const WindowPlan& plan, std::uint64_t rng_seed);

/// y_t = (I - A)^{-1} (B x_t + e_t) with e_t ~ N(0, noise_var I).
NodalSeries simulate_endogenous(const AdjacencyMatrix& a, const InputGainMatrix& b,
                                const NodalSeries& x, double noise_var, std::uint64_t rng_seed);

/// As simulate_endogenous, but window m of `boundaries` uses topology[m].
NodalSeries simulate_endogenous_piecewise(const std::vector<AdjacencyMatrix>& topology,
                                          const InputGainMatrix& b, const NodalSeries& x,
                                          const std::vector<Index>& boundaries, double noise_var,
                                          std::uint64_t rng_seed);

enum class DriftPattern {
  /// a_ij^m = a_ij^0 + 0.1 sin(0.01 m) on the initial support.
  kSinusoidal,
  /// Each surviving edge is removed with probability 0.2 at windows 50 and 100.
  kEdgeDrops,
};

struct DriftOptions {
  double amplitude = 0.1;
  double frequency = 0.01;
  double drop_probability = 0.2;
  std::vector<Index> drop_windows{50, 100};
};

/// Topology per window index m = 0..m_windows; element 0 is `base` and element m is the
/// topology in force during window m (windows numbered from 1). Dropped edges stay dropped.
std::vector<AdjacencyMatrix> piecewise_topology_series(const AdjacencyMatrix& base,
                                                       DriftPattern pattern, Index m_windows,
                                                       std::uint64_t rng_seed,
                                                       const DriftOptions& options = {});

}  // namespace tensortopo
