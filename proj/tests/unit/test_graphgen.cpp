#include <doctest.h>

#include <cmath>
#include <random>

#include "tensortopo/graphgen.hpp"

using namespace tensortopo;

namespace {

// Plain nested-loop Kronecker power, diagonal zeroed afterwards.
Eigen::MatrixXi kron_oracle(const Eigen::MatrixXi& seed, int power) {
  Eigen::MatrixXi k = Eigen::MatrixXi::Ones(1, 1);
  for (int p = 0; p < power; ++p) {
    Eigen::MatrixXi next(k.rows() * seed.rows(), k.cols() * seed.cols());
    for (Index i = 0; i < k.rows(); ++i)
      for (Index j = 0; j < k.cols(); ++j)
        for (Index a = 0; a < seed.rows(); ++a)
          for (Index b = 0; b < seed.cols(); ++b)
            next(i * seed.rows() + a, j * seed.cols() + b) = k(i, j) * seed(a, b);
    k = next;
  }
  k.diagonal().setZero();
  return k;
}

Matrix random_offdiag(Index n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = i == j ? 0.0 : u(g);
  return a;
}

}  // namespace

TEST_CASE("kronecker seed is the published 4x4 pattern") {
  Eigen::MatrixXi s0(4, 4);
  s0 << 0, 0, 1, 1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 0, 1, 0;
  CHECK(kronecker_seed() == s0);
}

TEST_CASE("kronecker power 3 gives a 64-node graph with the Kronecker support") {
  const WeightedGraph g = kronecker_graph(kronecker_seed(), 3, 0.2, 0.5, 11);
  REQUIRE(g.a.n() == 64);
  CHECK(g.s.matrix() == kron_oracle(kronecker_seed(), 3));
  CHECK(g.s == g.a.support());
}

TEST_CASE("kronecker support matches the oracle for powers 1 to 3") {
  for (int p = 1; p <= 3; ++p) {
    const WeightedGraph g = kronecker_graph(kronecker_seed(), p, 0.2, 0.5, 100 + p);
    CHECK(g.s.matrix() == kron_oracle(kronecker_seed(), p));
  }
}

TEST_CASE("all-zero seed gives an empty graph") {
  const WeightedGraph g = kronecker_graph(Eigen::MatrixXi::Zero(4, 4), 2, 0.2, 0.5, 3);
  CHECK(g.a.n() == 16);
  CHECK(g.s.edge_count() == 0);
  CHECK(g.a.matrix().isZero(0.0));
}

TEST_CASE("power-2 weights lie in range on exactly the support") {
  const WeightedGraph g = kronecker_graph(kronecker_seed(), 2, 0.2, 0.5, 5, StabilityGuard::kNone);
  REQUIRE_FALSE(g.rescaled);
  const Eigen::MatrixXi oracle = kron_oracle(kronecker_seed(), 2);
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j) {
      const double a = g.a(i, j);
      if (oracle(i, j)) {
        CHECK(a >= 0.2);
        CHECK(a <= 0.5);
      } else {
        CHECK(a == 0.0);
      }
    }
}

TEST_CASE("kronecker argument checks") {
  CHECK_THROWS_AS(kronecker_graph(Eigen::MatrixXi::Zero(3, 3), 2, 0.2, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(kronecker_graph(kronecker_seed(), 0, 0.2, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(kronecker_graph(kronecker_seed(), 2, 0.5, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(kronecker_graph(kronecker_seed(), 2, 0.0, 0.5, 1), std::invalid_argument);
}

TEST_CASE("stability guard rescales to spectral radius 0.95") {
  const EdgeIndicator full(Eigen::MatrixXi::Ones(6, 6) - Eigen::MatrixXi::Identity(6, 6));
  const WeightedGraph g = weight_edges(full, 0.3, 0.5, 4, StabilityGuard::kRescaleIfUnstable);
  CHECK(g.rescaled);
  CHECK(g.spectral_radius == doctest::Approx(0.95).epsilon(1e-9));
  CHECK(g.s == full);
  const WeightedGraph raw = weight_edges(full, 0.3, 0.5, 4, StabilityGuard::kNone);
  CHECK((raw.a.matrix() * g.rescale_factor).isApprox(g.a.matrix(), 1e-14));
}

TEST_CASE("generators are deterministic in the seed") {
  CHECK(kronecker_graph(kronecker_seed(), 2, 0.2, 0.5, 9).a.matrix() ==
        kronecker_graph(kronecker_seed(), 2, 0.2, 0.5, 9).a.matrix());
  CHECK(erdos_renyi(7, 0.3, 2) == erdos_renyi(7, 0.3, 2));
}

TEST_CASE("erdos-renyi extremes") {
  CHECK(erdos_renyi(5, 0.0, 1).edge_count() == 0);
  const EdgeIndicator s = erdos_renyi(5, 1.0, 1);
  CHECK(s.edge_count() == 20);
  for (Index i = 0; i < 5; ++i) CHECK(s(i, i) == 0);
  CHECK_THROWS_AS(erdos_renyi(1, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(erdos_renyi(5, 1.5, 1), std::invalid_argument);
}

TEST_CASE("erdos-renyi mean edge count is 0.4 * 20") {
  const int draws = 10000;
  double sum = 0.0;
  for (int d = 0; d < draws; ++d) sum += static_cast<double>(erdos_renyi(5, 0.4, 1000 + d).edge_count());
  const double mean = sum / draws;
  const double se = std::sqrt(20 * 0.4 * 0.6 / draws);
  CHECK(std::abs(mean - 8.0) < 3 * se);
}

TEST_CASE("threshold basics") {
  CHECK(threshold_edges(AdjacencyMatrix(Matrix::Zero(4, 4)), 0.1).edge_count() == 0);
  Matrix a = Matrix::Zero(3, 3);
  a(0, 2) = 0.3;
  const EdgeIndicator s = threshold_edges(AdjacencyMatrix(a), 0.1);
  CHECK(s.edge_count() == 1);
  CHECK(s(0, 2) == 1);
  CHECK_THROWS_AS(threshold_edges(AdjacencyMatrix(a), -0.1), std::invalid_argument);
}

TEST_CASE("threshold matches an elementwise comparison") {
  const Matrix a = random_offdiag(4, 17);
  const EdgeIndicator s = threshold_edges(AdjacencyMatrix(a), 0.5);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) CHECK(s(i, j) == (i != j && a(i, j) > 0.5 ? 1 : 0));
}

TEST_CASE("threshold on magnitudes keeps negative edges") {
  Matrix a = Matrix::Zero(3, 3);
  a(1, 0) = -0.4;
  a(2, 1) = 0.4;
  CHECK(threshold_edges(AdjacencyMatrix(a), 0.2).edge_count() == 1);
  CHECK(threshold_edges(AdjacencyMatrix(a), 0.2, true).edge_count() == 2);
}

TEST_CASE("threshold is monotone in eta") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const AdjacencyMatrix a(random_offdiag(6, seed));
    const EdgeIndicator lo = threshold_edges(a, 0.3);
    const EdgeIndicator hi = threshold_edges(a, 0.6);
    CHECK(((hi.matrix().array() <= lo.matrix().array()).all()));
  }
}

TEST_CASE("eier values") {
  const EdgeIndicator s = erdos_renyi(5, 0.5, 3);
  CHECK(eier(s, s) == 0.0);
  const Eigen::MatrixXi off = Eigen::MatrixXi::Ones(5, 5) - Eigen::MatrixXi::Identity(5, 5);
  CHECK(eier(s, EdgeIndicator(off - s.matrix())) == doctest::Approx(100.0));
  Eigen::MatrixXi one = s.matrix();
  one(0, 1) = 1 - one(0, 1);
  CHECK(eier(s, EdgeIndicator(one)) == doctest::Approx(5.0));
  CHECK_THROWS_AS(eier(s, EdgeIndicator(4)), std::invalid_argument);
}

TEST_CASE("eier is symmetric and bounded") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const EdgeIndicator a = erdos_renyi(6, 0.4, seed);
    const EdgeIndicator b = erdos_renyi(6, 0.6, seed + 1000);
    const double e = eier(a, b);
    CHECK(e == eier(b, a));
    CHECK(e >= 0.0);
    CHECK(e <= 100.0);
  }
}

TEST_CASE("emse values") {
  const AdjacencyMatrix a(random_offdiag(4, 1));
  CHECK(emse(a, a) == 0.0);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 1) = 1.0;
  CHECK(emse(AdjacencyMatrix(Matrix::Zero(2, 2)), AdjacencyMatrix(d)) == doctest::Approx(0.5));
  const AdjacencyMatrix b(random_offdiag(4, 2));
  double sum = 0.0;
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) sum += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  CHECK(emse(a, b) == doctest::Approx(sum / 12.0).epsilon(1e-14));
  CHECK_THROWS_AS(emse(a, AdjacencyMatrix(Matrix::Zero(3, 3))), std::invalid_argument);
}

TEST_CASE("indicator and adjacency invariants") {
  CHECK_THROWS(EdgeIndicator(Eigen::MatrixXi::Identity(3, 3)));
  Eigen::MatrixXi two = Eigen::MatrixXi::Zero(3, 3);
  two(0, 1) = 2;
  CHECK_THROWS(EdgeIndicator(two));
  Matrix a = Matrix::Zero(3, 3);
  a(1, 1) = 0.1;
  CHECK_THROWS(AdjacencyMatrix(a));
}
