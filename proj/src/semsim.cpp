#include "tensortopo/semsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/LU>

#include "tensortopo/rng.hpp"

namespace tensortopo {

InputGainMatrix::InputGainMatrix(Vector b) : b_(std::move(b)) {
  if (!b_.allFinite()) throw std::invalid_argument("input gains must be finite");
  if ((b_.array() == 0.0).any()) throw std::invalid_argument("input gains must be nonzero");
}

InputGainMatrix random_gains(Index n, double lo, double hi, std::uint64_t rng_seed) {
  if (n < 1 || !(hi >= lo)) throw std::invalid_argument("random_gains: bad arguments");
  Rng rng(rng_seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  Vector b(n);
  for (Index i = 0; i < n; ++i) b(i) = unif(rng);
  return InputGainMatrix(std::move(b));
}

void WindowPlan::validate() const {
  if (boundaries.size() < 2) throw std::invalid_argument("window plan needs at least one window");
  if (boundaries.front() != 0) throw std::invalid_argument("window plan must start at sample 0");
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    if (boundaries[i] <= boundaries[i - 1])
      throw std::invalid_argument("window boundaries must be strictly increasing");
  if (variances.rows() != window_count())
    throw std::invalid_argument("window plan needs one variance row per window");
  if (variances.cols() < 1) throw std::invalid_argument("window plan has no nodes");
  if (!variances.allFinite() || (variances.array() <= 0.0).any())
    throw std::invalid_argument("window variances must be positive");
}

std::vector<Index> uniform_boundaries(Index m_windows, Index window_length) {
  if (m_windows < 1 || window_length < 1)
    throw std::invalid_argument("uniform_boundaries: need M >= 1 and L >= 1");
  std::vector<Index> b(static_cast<std::size_t>(m_windows) + 1);
  for (Index m = 0; m <= m_windows; ++m) b[static_cast<std::size_t>(m)] = m * window_length;
  return b;
}

WindowPlan uniform_plan(Index window_length, Matrix variances) {
  WindowPlan plan{uniform_boundaries(variances.rows(), window_length), std::move(variances)};
  plan.validate();
  return plan;
}

Matrix random_variance_profile(Index m_windows, Index n, double lo, double hi,
                               std::uint64_t rng_seed) {
  if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("variance range must be positive");
  Rng rng(rng_seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  Matrix v(m_windows, n);
  for (Index m = 0; m < m_windows; ++m)
    for (Index i = 0; i < n; ++i) v(m, i) = unif(rng);
  return v;
}

Matrix scalar_variance_profile(const Vector& window_variances, Index n) {
  return window_variances.replicate(1, n);
}

NodalSeries::NodalSeries(Matrix values, std::vector<std::string> names)
    : values_(std::move(values)), names_(std::move(names)) {
  if (!values_.allFinite()) throw std::invalid_argument("nodal series has non-finite entries");
  if (!names_.empty() && static_cast<Index>(names_.size()) != values_.cols())
    throw std::invalid_argument("nodal series: one name per node required");
}

namespace {

Eigen::PartialPivLU<Matrix> factor_i_minus_a(const Matrix& a, double max_condition) {
  const Index n = a.rows();
  const Matrix m = Matrix::Identity(n, n) - a;
  const double rcond = reciprocal_condition(m);
  if (!(rcond > 0.0) || rcond * max_condition < 1.0) {
    throw SingularMatrixError("(I - A) is singular or ill-conditioned",
                              rcond > 0.0 ? 1.0 / rcond : INFINITY);
  }
  return Eigen::PartialPivLU<Matrix>(m);
}

}  // namespace

MixingMatrix mixing_matrix(const AdjacencyMatrix& a, const InputGainMatrix& b,
                           double max_condition) {
  if (a.n() != b.n()) throw std::invalid_argument("mixing_matrix: dimension mismatch");
  const auto lu = factor_i_minus_a(a.matrix(), max_condition);
  Matrix phi = lu.solve(Matrix(b.diagonal().asDiagonal()));
  return MixingMatrix(std::move(phi));
}

Matrix analytic_correlation(const MixingMatrix& phi, const Vector& rho) {
  if (rho.size() != phi.n()) throw std::invalid_argument("analytic_correlation: size mismatch");
  const Matrix& p = phi.matrix();
  Matrix r = p * rho.asDiagonal() * p.transpose();
  return 0.5 * (r + r.transpose());
}

NodalSeries simulate_exogenous(const WindowPlan& plan, std::uint64_t rng_seed) {
  plan.validate();
  Rng rng(rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index n = plan.node_count();
  Matrix x(plan.total_samples(), n);
  for (Index m = 0; m < plan.window_count(); ++m) {
    const Vector sd = plan.variances.row(m).transpose().cwiseSqrt();
    for (Index t = plan.boundaries[m]; t < plan.boundaries[m + 1]; ++t)
      for (Index i = 0; i < n; ++i) x(t, i) = sd(i) * gauss(rng);
  }
  return NodalSeries(std::move(x));
}

namespace {

// Rows [begin, end) of y get (I - A)^{-1} (B x_t + e_t); noise drawn from `rng`.
void propagate(const Matrix& a, const Vector& b, const Matrix& x, double noise_var, Index begin,
               Index end, Rng& rng, Matrix& y) {
  const auto lu = factor_i_minus_a(a, 1e12);
  const Index n = a.rows();
  Matrix drive = (x.middleRows(begin, end - begin) * b.asDiagonal()).transpose();  // n x len
  if (noise_var > 0.0) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_var));
    for (Index t = 0; t < drive.cols(); ++t)
      for (Index i = 0; i < n; ++i) drive(i, t) += gauss(rng);
  }
  y.middleRows(begin, end - begin) = lu.solve(drive).transpose();
}

}  // namespace

NodalSeries simulate_endogenous(const AdjacencyMatrix& a, const InputGainMatrix& b,
                                const NodalSeries& x, double noise_var, std::uint64_t rng_seed) {
  if (a.n() != b.n() || a.n() != x.n())
    throw std::invalid_argument("simulate_endogenous: dimension mismatch");
  if (!(noise_var >= 0.0)) throw std::invalid_argument("noise variance must be >= 0");
  Rng rng(rng_seed);
  Matrix y(x.samples(), x.n());
  propagate(a.matrix(), b.diagonal(), x.values(), noise_var, 0, x.samples(), rng, y);
  return NodalSeries(std::move(y));
}

NodalSeries simulate_endogenous_piecewise(const std::vector<AdjacencyMatrix>& topology,
                                          const InputGainMatrix& b, const NodalSeries& x,
                                          const std::vector<Index>& boundaries, double noise_var,
                                          std::uint64_t rng_seed) {
  if (boundaries.size() != topology.size() + 1)
    throw std::invalid_argument("simulate_endogenous_piecewise: one topology per window");
  if (boundaries.back() > x.samples())
    throw std::invalid_argument("simulate_endogenous_piecewise: windows exceed the series");
  if (!(noise_var >= 0.0)) throw std::invalid_argument("noise variance must be >= 0");
  Rng rng(rng_seed);
  Matrix y = Matrix::Zero(boundaries.back(), x.n());
  for (std::size_t m = 0; m < topology.size(); ++m) {
    if (topology[m].n() != x.n() || b.n() != x.n())
      throw std::invalid_argument("simulate_endogenous_piecewise: dimension mismatch");
    propagate(topology[m].matrix(), b.diagonal(), x.values(), noise_var, boundaries[m],
              boundaries[m + 1], rng, y);
  }
  return NodalSeries(std::move(y));
}

std::vector<AdjacencyMatrix> piecewise_topology_series(const AdjacencyMatrix& base,
                                                       DriftPattern pattern, Index m_windows,
                                                       std::uint64_t rng_seed,
                                                       const DriftOptions& options) {
  if (m_windows < 0) throw std::invalid_argument("piecewise_topology_series: negative count");
  const Matrix& a0 = base.matrix();
  const Index n = a0.rows();
  const Eigen::MatrixXi support = base.support().matrix();

  std::vector<AdjacencyMatrix> out;
  out.reserve(static_cast<std::size_t>(m_windows) + 1);
  out.push_back(base);

  if (pattern == DriftPattern::kSinusoidal) {
    for (Index m = 1; m <= m_windows; ++m) {
      const double shift = options.amplitude * std::sin(options.frequency * static_cast<double>(m));
      Matrix a = a0;
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
          if (support(i, j) != 0) a(i, j) += shift;
      out.emplace_back(std::move(a));
    }
    return out;
  }

  Rng rng(rng_seed);
  std::bernoulli_distribution drop(options.drop_probability);
  Matrix current = a0;
  for (Index m = 1; m <= m_windows; ++m) {
    if (std::find(options.drop_windows.begin(), options.drop_windows.end(), m) !=
        options.drop_windows.end()) {
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
          if (current(i, j) != 0.0 && drop(rng)) current(i, j) = 0.0;
    }
    out.emplace_back(current);
  }
  return out;
}

}  // namespace tensortopo
