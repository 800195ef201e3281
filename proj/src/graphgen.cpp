#include "tensortopo/graphgen.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "tensortopo/rng.hpp"

namespace tensortopo {

Eigen::MatrixXi kronecker_seed() {
  Eigen::MatrixXi s(4, 4);
  s << 0, 0, 1, 1,
       0, 0, 1, 1,
       0, 1, 0, 1,
       1, 0, 1, 0;
  return s;
}

double spectral_radius(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

Eigen::MatrixXi kronecker_product(const Eigen::MatrixXi& a, const Eigen::MatrixXi& b) {
  Eigen::MatrixXi out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

void check_weight_range(double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi))
    throw std::invalid_argument("weight range must satisfy 0 < lo < hi");
}

void apply_guard(WeightedGraph& g, StabilityGuard guard, double max_condition) {
  const Matrix& a = g.a.matrix();
  const Index n = a.rows();
  g.spectral_radius = spectral_radius(a);
  bool rescale = false;
  switch (guard) {
    case StabilityGuard::kNone:
      break;
    case StabilityGuard::kRescaleIfUnstable:
      rescale = g.spectral_radius >= 1.0;
      break;
    case StabilityGuard::kRescaleIfIllConditioned: {
      const double rcond = reciprocal_condition(Matrix::Identity(n, n) - a);
      rescale = rcond * max_condition < 1.0;
      break;
    }
  }
  if (rescale && g.spectral_radius > 0.0) {
    g.rescale_factor = 0.95 / g.spectral_radius;
    g.a = AdjacencyMatrix(a * g.rescale_factor);
    g.spectral_radius *= g.rescale_factor;
    g.rescaled = true;
  }
}

}  // namespace

WeightedGraph weight_edges(const EdgeIndicator& s, double weight_lo, double weight_hi,
                           std::uint64_t rng_seed, StabilityGuard guard, double max_condition) {
  check_weight_range(weight_lo, weight_hi);
  Rng rng(rng_seed);
  std::uniform_real_distribution<double> unif(weight_lo, weight_hi);
  const Index n = s.n();
  Matrix a = Matrix::Zero(n, n);
  // Column-major draw order keeps sequences reproducible across graph sizes.
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (s(i, j) != 0) a(i, j) = unif(rng);
  WeightedGraph g{AdjacencyMatrix(std::move(a)), s};
  apply_guard(g, guard, max_condition);
  return g;
}

WeightedGraph kronecker_graph(const Eigen::MatrixXi& seed, int power, double weight_lo,
                              double weight_hi, std::uint64_t rng_seed, StabilityGuard guard,
                              double max_condition) {
  if (seed.rows() != 4 || seed.cols() != 4)
    throw std::invalid_argument("kronecker seed must be 4x4");
  if ((seed.array() != 0 && seed.array() != 1).any())
    throw std::invalid_argument("kronecker seed must be binary");
  if (power < 1) throw std::invalid_argument("kronecker power must be >= 1");
  check_weight_range(weight_lo, weight_hi);

  Eigen::MatrixXi s = seed;
  for (int p = 1; p < power; ++p) s = kronecker_product(s, seed);
  s.diagonal().setZero();
  return weight_edges(EdgeIndicator(std::move(s)), weight_lo, weight_hi, rng_seed, guard,
                      max_condition);
}

EdgeIndicator erdos_renyi(Index n, double p, std::uint64_t rng_seed) {
  if (n < 2) throw std::invalid_argument("erdos_renyi needs n >= 2");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("erdos_renyi needs 0 <= p <= 1");
  Rng rng(rng_seed);
  std::bernoulli_distribution coin(p);
  Eigen::MatrixXi s = Eigen::MatrixXi::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (i != j && coin(rng)) s(i, j) = 1;
  return EdgeIndicator(std::move(s));
}

EdgeIndicator threshold_edges(const AdjacencyMatrix& a_hat, double eta, bool use_abs) {
  if (!(eta >= 0.0)) throw std::invalid_argument("threshold must be non-negative");
  const Matrix& a = a_hat.matrix();
  const Index n = a.rows();
  Eigen::MatrixXi s = Eigen::MatrixXi::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      if (i == j) continue;
      const double v = use_abs ? std::abs(a(i, j)) : a(i, j);
      if (v > eta) s(i, j) = 1;
    }
  return EdgeIndicator(std::move(s));
}

double eier(const EdgeIndicator& truth, const EdgeIndicator& estimate) {
  if (truth.n() != estimate.n())
    throw std::invalid_argument("eier: dimension mismatch");
  const Index n = truth.n();
  if (n < 2) return 0.0;
  Index diff = 0;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (i != j && truth(i, j) != estimate(i, j)) ++diff;
  return 100.0 * static_cast<double>(diff) / static_cast<double>(n * (n - 1));
}

double emse(const AdjacencyMatrix& truth, const AdjacencyMatrix& estimate) {
  if (truth.n() != estimate.n())
    throw std::invalid_argument("emse: dimension mismatch");
  const Index n = truth.n();
  if (n < 2) return 0.0;
  return (truth.matrix() - estimate.matrix()).squaredNorm() / static_cast<double>(n * (n - 1));
}

}  // namespace tensortopo
