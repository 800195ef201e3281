#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tensortopo/semsim.hpp"
#include "tensortopo/types.hpp"

namespace tensortopo {

/// N x N x M stack of symmetric per-window correlation slices.
class CorrelationTensor {
 public:
  CorrelationTensor() = default;

  Index n() const noexcept { return slices_.empty() ? 0 : slices_.front().rows(); }
  Index m() const noexcept { return static_cast<Index>(slices_.size()); }
  const Matrix& slice(Index m) const { return slices_[static_cast<std::size_t>(m)]; }
  const std::vector<Matrix>& slices() const noexcept { return slices_; }

  double operator()(Index j, Index k, Index l) const { return slice(l)(j, k); }
  double squared_norm() const;
  /// Mode-1 matricisation: column j + N * l holds fiber (:, j, l).
  Matrix unfold_mode1() const;

  friend CorrelationTensor build_tensor(std::vector<Matrix> slices);

 private:
  std::vector<Matrix> slices_;
};

/// Validates and stacks slices: at least two, equal square size, symmetric to 1e-10
/// relative, PSD up to a -1e-8 relative eigenvalue tolerance. Throws std::invalid_argument.
CorrelationTensor build_tensor(std::vector<Matrix> slices);

/// (1 / L) sum of y_t y_t^T over samples [begin, end).
Matrix sample_correlation(const NodalSeries& y, Index begin, Index end);

/// One sample-correlation slice per window of `boundaries`.
CorrelationTensor tensor_from_series(const NodalSeries& y, const std::vector<Index>& boundaries);

/// Per-window exogenous powers R^x (M x N) together with the known-entry mask Omega.
/// Values outside the mask are carried along (for diagnostics with ground truth) but the
/// solver never reads them.
class ExogenousCorrelation {
 public:
  ExogenousCorrelation() = default;
  /// Throws std::invalid_argument on shape mismatch or non-positive known entries.
  ExogenousCorrelation(Matrix r, BoolMatrix mask);

  static ExogenousCorrelation full(Matrix r);
  static ExogenousCorrelation blind(Index m_windows, Index n);

  Index m() const noexcept { return r_.rows(); }
  Index n() const noexcept { return r_.cols(); }
  const Matrix& values() const noexcept { return r_; }
  const BoolMatrix& mask() const noexcept { return mask_; }
  bool known(Index m, Index i) const { return mask_(m, i); }
  Index known_count() const { return mask_.count(); }
  bool is_full() const { return known_count() == r_.size(); }
  bool is_blind() const { return known_count() == 0; }

 private:
  Matrix r_;
  BoolMatrix mask_;
};

/// Each entry of `r` is kept known with probability 1 - miss_probability.
ExogenousCorrelation random_mask(const Matrix& r, double miss_probability, std::uint64_t rng_seed);

struct CPFactors {
  Matrix z1;  // N x N
  Matrix z2;  // N x N, equal to z1
  Matrix z3;  // M x N
};

/// sum_n z1_n o z2_n o z3_n as slices.
std::vector<Matrix> reconstruct(const CPFactors& f);

/// Column-wise Kronecker product [a_1 (x) b_1, ..., a_R (x) b_R].
Matrix khatri_rao(const Matrix& a, const Matrix& b);

/// Largest k such that every k columns of z are linearly independent.
///
/// Rank decisions use singular values above `tolerance` relative to the largest singular
/// value of each submatrix (default: max(rows, cols) * eps * 16). Returns 0 if any column is
/// zero. When `max_k` is positive the search stops there, and the result is a lower bound.
int kruskal_rank(const Matrix& z, double tolerance = -1.0, int max_k = -1);

enum class SolverMethod {
  /// Damped Gauss-Newton on the shared (Z, Z3) parametrisation, steps accepted only on
  /// decrease.
  kLevenbergMarquardt,
  /// Symmetric half-step for Z with exact quartic line search, then constrained LS for Z3.
  kAlternating,
};

struct SolverOptions {
  SolverMethod method = SolverMethod::kLevenbergMarquardt;
  int max_sweeps = 500;
  /// Stop once the relative fit improves by less than this over a sweep.
  double fit_tolerance = 1e-9;
  /// Random initialisations; 0 picks 10 for blind problems and 1 otherwise.
  int restarts = 0;
  std::uint64_t rng_seed = 1;
  /// Start the first restart from the generalized eigenvectors of two slice combinations
  /// instead of a random draw; later restarts stay random.
  bool spectral_init = true;
  /// Solve partially known problems by first fitting blind and aligning to Omega.
  bool blind_warm_start = true;
  /// Ridge added to singular normal equations, relative to their trace.
  double ridge = 1e-12;
  /// Parameter count above which Gauss-Newton systems are solved by CG instead of LDLT.
  int dense_parameter_limit = 2500;
  int cg_max_iterations = 250;
  double cg_tolerance = 1e-8;
};

struct CPRun {
  CPFactors factors;
  double relative_fit = 0.0;  // ||R - model||_F / ||R||_F
  bool converged = false;
  int sweeps = 0;
  /// Objective 0.5 ||R - model||^2 after every sweep; entry 0 is the initial point.
  /// A warm-started run holds the blind trace followed by the constrained trace, with
  /// `phase_starts` marking where each phase begins.
  std::vector<double> objective_history;
  std::vector<std::size_t> phase_starts;
};

struct CPResult {
  CPFactors factors;  // best run
  double relative_fit = 0.0;
  bool converged = false;
  int sweeps = 0;
  int best_restart = 0;
  std::vector<CPRun> runs;  // every restart, in order
  std::vector<std::string> warnings;
};

/// Solves min ||R - sum z_n o z_n o z3_n||_F^2 with Z3 pinned to the known entries of Omega.
CPResult cp_decompose_constrained(const CorrelationTensor& tensor,
                                  const ExogenousCorrelation& known, const SolverOptions& opts);

/// Single run from a given starting point; known entries of `init.z3` are overwritten.
CPRun cp_refine(const CorrelationTensor& tensor, const ExogenousCorrelation& known,
                const SolverOptions& opts, CPFactors init);

/// Largest relative increase between consecutive objective values within each phase
/// (0 when the trace never increases).
double max_relative_increase(const CPRun& run);

namespace detail {

// Exposed for tests. Parameters are vec(Z) followed by vec(Z3) (column-major); entries of Z3
// on Omega are held fixed (their rows and columns in the Gramian are identity).
Matrix gauss_newton_gramian(const Matrix& z, const Matrix& z3, const BoolMatrix& fixed);
Vector gauss_newton_apply(const Matrix& z, const Matrix& z3, const BoolMatrix& fixed,
                          const Vector& v);
Vector gradient_of_half_squared_error(const CorrelationTensor& t, const Matrix& z, const Matrix& z3,
                                      const BoolMatrix& fixed);

}  // namespace detail

}  // namespace tensortopo
