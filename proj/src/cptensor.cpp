#include "tensortopo/cptensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "tensortopo/rng.hpp"

namespace tensortopo {

double CorrelationTensor::squared_norm() const {
  double s = 0.0;
  for (const auto& m : slices_) s += m.squaredNorm();
  return s;
}

Matrix CorrelationTensor::unfold_mode1() const {
  const Index nn = n();
  Matrix out(nn, nn * m());
  for (Index l = 0; l < m(); ++l) out.middleCols(l * nn, nn) = slice(l);
  return out;
}

CorrelationTensor build_tensor(std::vector<Matrix> slices) {
  if (slices.size() < 2)
    throw std::invalid_argument("correlation tensor needs at least two windows");
  const Index n = slices.front().rows();
  if (n < 1) throw std::invalid_argument("correlation slices must be non-empty");
  for (std::size_t l = 0; l < slices.size(); ++l) {
    const Matrix& s = slices[l];
    const std::string where = "slice " + std::to_string(l);
    if (s.rows() != n || s.cols() != n)
      throw std::invalid_argument(where + ": dimension mismatch");
    if (!s.allFinite()) throw std::invalid_argument(where + ": non-finite entries");
    const double scale = std::max(s.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw std::invalid_argument(where + ": not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8 * scale)
      throw std::invalid_argument(where + ": not positive semidefinite");
  }
  CorrelationTensor t;
  t.slices_ = std::move(slices);
  return t;
}

Matrix sample_correlation(const NodalSeries& y, Index begin, Index end) {
  if (begin < 0 || end > y.samples() || end <= begin)
    throw std::invalid_argument("sample_correlation: empty or out-of-range window");
  const auto block = y.values().middleRows(begin, end - begin);
  Matrix r = Matrix::Zero(y.n(), y.n());
  r.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose(), 1.0 / static_cast<double>(end - begin));
  return r.selfadjointView<Eigen::Lower>();
}

CorrelationTensor tensor_from_series(const NodalSeries& y, const std::vector<Index>& boundaries) {
  if (boundaries.size() < 2) throw std::invalid_argument("tensor_from_series: no windows");
  std::vector<Matrix> slices;
  slices.reserve(boundaries.size() - 1);
  for (std::size_t m = 0; m + 1 < boundaries.size(); ++m)
    slices.push_back(sample_correlation(y, boundaries[m], boundaries[m + 1]));
  return build_tensor(std::move(slices));
}

ExogenousCorrelation::ExogenousCorrelation(Matrix r, BoolMatrix mask)
    : r_(std::move(r)), mask_(std::move(mask)) {
  if (r_.rows() != mask_.rows() || r_.cols() != mask_.cols())
    throw std::invalid_argument("exogenous correlation: mask shape mismatch");
  for (Index j = 0; j < r_.cols(); ++j)
    for (Index i = 0; i < r_.rows(); ++i)
      if (mask_(i, j) && !(r_(i, j) > 0.0 && std::isfinite(r_(i, j))))
        throw std::invalid_argument("exogenous correlation: known entries must be positive");
}

ExogenousCorrelation ExogenousCorrelation::full(Matrix r) {
  BoolMatrix mask = BoolMatrix::Constant(r.rows(), r.cols(), true);
  return ExogenousCorrelation(std::move(r), std::move(mask));
}

ExogenousCorrelation ExogenousCorrelation::blind(Index m_windows, Index n) {
  return ExogenousCorrelation(Matrix::Zero(m_windows, n),
                              BoolMatrix::Constant(m_windows, n, false));
}

ExogenousCorrelation random_mask(const Matrix& r, double miss_probability,
                                 std::uint64_t rng_seed) {
  if (!(miss_probability >= 0.0 && miss_probability <= 1.0))
    throw std::invalid_argument("miss probability must lie in [0, 1]");
  Rng rng(rng_seed);
  std::bernoulli_distribution miss(miss_probability);
  BoolMatrix mask(r.rows(), r.cols());
  for (Index j = 0; j < r.cols(); ++j)
    for (Index i = 0; i < r.rows(); ++i) mask(i, j) = !miss(rng);
  return ExogenousCorrelation(r, std::move(mask));
}

std::vector<Matrix> reconstruct(const CPFactors& f) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(f.z3.rows()));
  for (Index l = 0; l < f.z3.rows(); ++l)
    out.push_back(f.z1 * f.z3.row(l).transpose().asDiagonal() * f.z2.transpose());
  return out;
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("khatri_rao: column count mismatch");
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Index r = 0; r < a.cols(); ++r)
    for (Index i = 0; i < a.rows(); ++i)
      out.col(r).segment(i * b.rows(), b.rows()) = a(i, r) * b.col(r);
  return out;
}

namespace {

bool full_column_rank(const Matrix& sub, double tolerance) {
  Eigen::JacobiSVD<Matrix> svd(sub);
  const Vector& sv = svd.singularValues();
  if (sv.size() < sub.cols()) return false;
  if (!(sv(0) > 0.0)) return false;
  return sv(sv.size() - 1) > tolerance * sv(0);
}

// Advances `idx` to the next k-combination of {0..n-1} in lexicographic order.
bool next_combination(std::vector<Index>& idx, Index n) {
  const Index k = static_cast<Index>(idx.size());
  for (Index i = k - 1; i >= 0; --i) {
    if (idx[static_cast<std::size_t>(i)] < n - k + i) {
      ++idx[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < k; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

int kruskal_rank(const Matrix& z, double tolerance, int max_k) {
  if (z.size() == 0) return 0;
  const Index rows = z.rows();
  const Index cols = z.cols();
  if (tolerance < 0.0)
    tolerance = 16.0 * static_cast<double>(std::max(rows, cols)) *
                std::numeric_limits<double>::epsilon();
  Index limit = std::min(rows, cols);
  if (max_k > 0) limit = std::min<Index>(limit, max_k);

  for (Index j = 0; j < cols; ++j)
    if (z.col(j).cwiseAbs().maxCoeff() == 0.0) return 0;

  Matrix sub(rows, 0);
  for (Index k = 1; k <= limit; ++k) {
    std::vector<Index> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), Index{0});
    sub.resize(rows, k);
    do {
      for (Index c = 0; c < k; ++c) sub.col(c) = z.col(idx[static_cast<std::size_t>(c)]);
      if (!full_column_rank(sub, tolerance)) return static_cast<int>(k - 1);
    } while (next_combination(idx, cols));
  }
  return static_cast<int>(limit);
}

}  // namespace tensortopo
