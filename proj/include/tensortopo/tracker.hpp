#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tensortopo/semsim.hpp"
#include "tensortopo/topology.hpp"
#include "tensortopo/types.hpp"

namespace tensortopo {

/// Exponentially weighted least-squares state for H = Phi (.) Phi (N^2 x N).
///
/// q accumulates beta-weighted r_bar rho^T; w is the inverse of the weighted Gram
/// P = beta^m a^{-1} I + sum beta^{m-l} rho_l rho_l^T; h = q w.
struct TrackerState {
  Index n = 0;
  double beta = 1.0;
  Matrix q;  // N^2 x N
  Matrix w;  // N x N, symmetric
  Index window_index = 0;
  Matrix h;  // N^2 x N
};

struct WindowObservation {
  Vector r_bar;  // vec of the window's sample correlation, length N^2
  Vector rho;    // exogenous powers of the window, length N
};

/// Throws std::invalid_argument unless 0 < beta <= 1, a > 0 and n >= 1.
TrackerState tracker_init(Index n, double beta = 0.999, double a = 1e5);

/// Symmetrises `r`, vectorises it column-major, and validates rho > 0.
WindowObservation make_observation(const Matrix& r, const Vector& rho);

/// One recursion: q <- beta q + r_bar rho^T, rank-1 Woodbury update of w, h <- q w.
/// Throws std::invalid_argument on dimension mismatch or non-finite input.
TrackerState tracker_update(TrackerState state, const WindowObservation& obs);

struct EigenPair {
  double value = 0.0;
  Vector vector;
  int iterations = 0;
};

/// Dominant eigen-pair of a symmetric matrix. Starts from the column with the largest
/// absolute diagonal entry; stops when the (sign-aligned) vector moves less than `tol`.
EigenPair power_iteration(const Matrix& m, double tol = 1e-10, int max_iterations = 1000);

struct ColumnDiagnostic {
  double eigenvalue = 0.0;
  /// ||H_i - lambda v v^T||_F / ||H_i||_F
  double residual = 0.0;
  bool rank_one = true;
};

struct MixingExtraction {
  MixingMatrix phi;
  std::vector<ColumnDiagnostic> columns;
  bool all_rank_one = true;
};

/// Column i of h reshaped to N x N and symmetrised gives alpha_i = sqrt(lambda) v; each
/// column is signed so its largest-magnitude entry is positive. A column is flagged when
/// lambda <= 0 or the rank-1 residual exceeds `residual_limit`.
MixingExtraction extract_mixing(const TrackerState& state, double residual_limit = 0.25);

struct TrackedWindow {
  Index window = 0;  // 1-based
  bool recovered = false;
  std::string error;
  TopologyEstimate estimate;  // a_hat / s_hat / phi_hat only meaningful when recovered
  MixingExtraction extraction;
};

/// Streaming form of the tracker: one push per window, constant state size.
class OnlineTracker {
 public:
  OnlineTracker(Index n, double beta, double eta, bool use_abs = false, double a = 1e5);

  TrackedWindow push(const Matrix& window_correlation, const Vector& rho);
  const TrackerState& state() const noexcept { return state_; }

 private:
  TrackerState state_;
  double eta_;
  bool use_abs_;
};

/// Runs the tracker across the windows of `boundaries`; rho holds one row per window.
std::vector<TrackedWindow> track_topology(const NodalSeries& y,
                                          const std::vector<Index>& boundaries, const Matrix& rho,
                                          double beta, double eta, bool use_abs = false,
                                          double a = 1e5);

}  // namespace tensortopo
