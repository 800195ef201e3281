#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "tensortopo/assignment.hpp"
#include "tensortopo/graphgen.hpp"
#include "tensortopo/semsim.hpp"
#include "tensortopo/topology.hpp"

using namespace tensortopo;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d;
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = d(g);
  return m;
}

Vector random_nonzero(Index n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  Vector d(n);
  for (Index i = 0; i < n; ++i) d(i) = (g() % 2 ? 1.0 : -1.0) * u(g);
  return d;
}

WeightedGraph random_graph(Index n, std::uint64_t seed) {
  return weight_edges(erdos_renyi(n, 0.3, seed), 0.2, 0.5, seed + 1);
}

// Brute-force assignment for n <= 6.
double brute_assignment_cost(const Matrix& c) {
  std::vector<Index> p(static_cast<std::size_t>(c.rows()));
  std::iota(p.begin(), p.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (Index r = 0; r < c.rows(); ++r) s += c(r, p[static_cast<std::size_t>(r)]);
    best = std::min(best, s);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

}  // namespace

TEST_CASE("recovery from a diagonal mixing matrix is the empty graph") {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2, 3;
  CHECK(recover_adjacency(MixingMatrix(d)).matrix().isZero(0.0));
}

TEST_CASE("recovery of the 2-node example") {
  Matrix phi(2, 2);
  phi << 2, 1.5, 0.4, 3;
  phi /= 0.9;
  const Matrix a = recover_adjacency(MixingMatrix(phi)).matrix();
  CHECK(a(0, 0) == 0.0);
  CHECK(a(1, 1) == 0.0);
  CHECK(a(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(a(1, 0) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("recovery ignores column scaling, including sign flips") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const WeightedGraph g = random_graph(8, seed);
    const MixingMatrix phi = mixing_matrix(g.a, random_gains(8, 2.0, 3.0, seed + 5));
    const Matrix a0 = recover_adjacency(phi).matrix();
    const Matrix a1 = recover_adjacency(MixingMatrix(phi.matrix() * random_nonzero(8, seed + 9).asDiagonal())).matrix();
    CHECK((a0 - a1).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a0.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("recovery round trip of random graphs") {
  std::mt19937_64 pick(3);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index n = 2 + static_cast<Index>(pick() % 31);
    const WeightedGraph g = random_graph(n, seed + 100);
    const MixingMatrix phi = mixing_matrix(g.a, random_gains(n, 2.0, 3.0, seed + 200));
    CHECK((recover_adjacency(phi).matrix() - g.a.matrix()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("column permutations change the recovered graph") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const WeightedGraph g = random_graph(6, seed + 300);
    const Matrix phi = mixing_matrix(g.a, random_gains(6, 2.0, 3.0, seed)).matrix();
    const AdjacencyMatrix base = recover_adjacency(MixingMatrix(phi));
    std::vector<Index> p{1, 0, 2, 3, 4, 5};
    bool differs = false;
    for (int rot = 0; rot < 6 && !differs; ++rot) {
      Matrix permuted(6, 6);
      for (Index c = 0; c < 6; ++c) permuted.col(c) = phi.col(p[static_cast<std::size_t>(c)]);
      try {
        differs = !(threshold_edges(recover_adjacency(MixingMatrix(permuted)), 1e-9, true) ==
                    threshold_edges(base, 1e-9, true));
      } catch (const Error&) {
        differs = true;  // a zero diagonal in the inverse also rules the ordering out
      }
      std::rotate(p.begin(), p.begin() + 1, p.end());
    }
    CHECK(differs);
  }
}

TEST_CASE("recovery errors") {
  CHECK_THROWS_AS(recover_adjacency(MixingMatrix(Matrix::Zero(3, 3))), SingularMatrixError);
  Matrix anti(2, 2);
  anti << 0, 1, 1, 0;  // inverse has a zero diagonal
  CHECK_THROWS_AS(recover_adjacency(MixingMatrix(anti)), Error);
}

TEST_CASE("identifiability of proportional and independent profiles") {
  Matrix prop(3, 2);
  prop << 1, 2, 2, 4, 3, 6;
  const IdentifiabilityReport bad = check_identifiability(ExogenousCorrelation::full(prop));
  CHECK(bad.kruskal_rank_rx == 1);
  CHECK_FALSE(bad.full_condition_met);
  CHECK_FALSE(bad.partial_condition_met);
  CHECK(bad.failing_pairs == std::vector<std::pair<Index, Index>>{{0, 1}});

  Matrix rx(2, 2);
  rx << 1, 2, 2, 1;
  const IdentifiabilityReport good = check_identifiability(ExogenousCorrelation::full(rx));
  CHECK(good.kruskal_rank_rx == 2);
  CHECK(good.full_condition_met);
  CHECK(good.partial_condition_met);
  CHECK(good.failing_pairs.empty());
}

TEST_CASE("a single shared known row fails the pair test") {
  Matrix rx(3, 3);
  rx << 1, 2, 3, 2, 1, 1, 3, 3, 2;
  BoolMatrix mask = BoolMatrix::Constant(3, 3, false);
  mask(0, 0) = mask(0, 1) = true;
  mask.col(2).setConstant(true);
  const IdentifiabilityReport rep = check_identifiability(ExogenousCorrelation(rx, mask));
  CHECK_FALSE(rep.fully_known);
  CHECK_FALSE(rep.partial_condition_met);
  CHECK(std::find(rep.failing_pairs.begin(), rep.failing_pairs.end(), std::pair<Index, Index>{0, 1}) !=
        rep.failing_pairs.end());
  CHECK(std::find(rep.failing_pairs.begin(), rep.failing_pairs.end(), std::pair<Index, Index>{0, 2}) ==
        rep.failing_pairs.end());
}

TEST_CASE("distinct variance profiles are generically identifiable") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const IdentifiabilityReport rep =
        check_identifiability(ExogenousCorrelation::full(random_variance_profile(10, 16, 0.5, 2.5, seed)));
    CHECK(rep.full_condition_met);
    CHECK(rep.partial_condition_met);
    CHECK(rep.failing_pairs.empty() == rep.partial_condition_met);
    CHECK(rep.full_condition_met == (rep.kruskal_rank_rx >= 2));
  }
}

TEST_CASE("assignment solver matches brute force") {
  std::mt19937_64 g(5);
  for (int t = 0; t < 100; ++t) {
    const Index n = 1 + static_cast<Index>(g() % 6);
    const Matrix c = random_matrix(n, n, 400 + t).cwiseAbs();
    const std::vector<Index> col = solve_assignment(c);
    double s = 0.0;
    std::vector<Index> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    for (Index r = 0; r < n; ++r) {
      s += c(r, col[static_cast<std::size_t>(r)]);
      CHECK(sorted[static_cast<std::size_t>(r)] == r);
    }
    CHECK(s == doctest::Approx(brute_assignment_cost(c)).epsilon(1e-12));
  }
  CHECK_THROWS(solve_assignment(Matrix::Ones(2, 3)));
}

TEST_CASE("permutation resolution restores a scrambled mixing matrix") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const WeightedGraph g = random_graph(7, seed + 500);
    const Matrix phi = mixing_matrix(g.a, random_gains(7, 2.0, 3.0, seed)).matrix();
    std::vector<Index> p(7);
    std::iota(p.begin(), p.end(), Index{0});
    std::shuffle(p.begin(), p.end(), std::mt19937_64(seed));
    Matrix scrambled(7, 7);
    const Vector d = random_nonzero(7, seed + 600);
    for (Index c = 0; c < 7; ++c) scrambled.col(c) = d(c) * phi.col(p[static_cast<std::size_t>(c)]);
    const AdjacencyMatrix a = recover_adjacency(resolve_permutation(MixingMatrix(scrambled)));
    CHECK((a.matrix() - g.a.matrix()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("majority vote") {
  const EdgeIndicator p = erdos_renyi(5, 0.4, 1), q = erdos_renyi(5, 0.4, 2);
  REQUIRE_FALSE(p == q);
  CHECK(majority_vote({p, p, p}) == p);
  const Consensus c = tally_supports({q, p, p, q, p});
  CHECK(c.modal == p);
  CHECK(c.votes == 3);
  CHECK(c.total == 5);
  CHECK_FALSE(c.tie);
  REQUIRE(c.table.size() == 2);
  CHECK(c.table[0].first == q);  // first seen
  const Consensus tie = tally_supports({q, p, p, q});
  CHECK(tie.tie);
  CHECK(tie.modal == q);
  CHECK_THROWS_AS(majority_vote({}), std::invalid_argument);
  CHECK_THROWS_AS(majority_vote({p, EdgeIndicator(4)}), std::invalid_argument);
}

TEST_CASE("tally matches a hash-count oracle") {
  std::vector<EdgeIndicator> pool;
  for (std::uint64_t s = 0; s < 6; ++s) pool.push_back(erdos_renyi(4, 0.5, 700 + s));
  std::mt19937_64 g(8);
  std::vector<EdgeIndicator> draws;
  for (int i = 0; i < 100; ++i) draws.push_back(pool[g() % pool.size()]);
  std::map<std::vector<int>, int> oracle;
  for (const auto& d : draws) ++oracle[std::vector<int>(d.matrix().data(), d.matrix().data() + d.matrix().size())];
  const Consensus c = tally_supports(draws);
  CHECK(c.table.size() == oracle.size());
  int top = 0;
  for (const auto& [key, count] : oracle) top = std::max(top, count);
  CHECK(c.votes == top);
  for (const auto& [support, count] : c.table) {
    const std::vector<int> key(support.matrix().data(), support.matrix().data() + support.matrix().size());
    CHECK(oracle.at(key) == count);
  }
}

TEST_CASE("noiseless batch inference on analytic slices") {
  const WeightedGraph g = kronecker_graph(kronecker_seed(), 2, 0.2, 0.5, 31);
  const MixingMatrix phi = mixing_matrix(g.a, random_gains(16, 2.0, 3.0, 32));
  const Matrix rx = random_variance_profile(10, 16, 0.5, 2.5, 33);
  std::vector<Matrix> slices;
  for (Index l = 0; l < 10; ++l) slices.push_back(analytic_correlation(phi, rx.row(l).transpose()));
  BatchOptions o;
  o.eta = 0.1;
  const TopologyEstimate est = infer_topology_from_tensor(build_tensor(slices), ExogenousCorrelation::full(rx), o);
  CHECK((est.a_hat.matrix() - g.a.matrix()).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(est.s_hat == g.s);
  CHECK(est.s_hat == threshold_edges(est.a_hat, est.eta));
  CHECK(est.report.full_condition_met);
  CHECK(est.fit < 1e-8);
}

TEST_CASE("noiseless 2-node batch inference from a series") {
  Matrix a(2, 2);
  a << 0, 0.5, 0.2, 0;
  Vector b(2);
  b << 2, 3;
  Matrix rx(3, 2);
  rx << 1, 2, 2, 1, 1.5, 0.5;
  // Two orthogonal samples per window give exactly diagonal exogenous power.
  Matrix x(6, 2);
  for (Index w = 0; w < 3; ++w) {
    x.row(2 * w) << std::sqrt(2 * rx(w, 0)), 0.0;
    x.row(2 * w + 1) << 0.0, std::sqrt(2 * rx(w, 1));
  }
  const NodalSeries y = simulate_endogenous(AdjacencyMatrix(a), InputGainMatrix(b), NodalSeries(x), 0.0, 1);
  BatchOptions o;
  o.eta = 0.1;
  const TopologyEstimate est = infer_topology_batch(y, {0, 2, 4, 6}, ExogenousCorrelation::full(rx), o);
  CHECK((est.a_hat.matrix() - a).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("blind inference reports restart supports and a consensus") {
  const WeightedGraph g = weight_edges(erdos_renyi(5, 0.4, 41), 0.2, 0.5, 42);
  const MixingMatrix phi = mixing_matrix(g.a, random_gains(5, 2.0, 3.0, 43));
  const Matrix rx = random_variance_profile(8, 5, 0.5, 2.5, 44);
  std::vector<Matrix> slices;
  for (Index l = 0; l < 8; ++l) slices.push_back(analytic_correlation(phi, rx.row(l).transpose()));
  BatchOptions o;
  o.eta = 0.1;
  TopologyEstimate est = infer_topology_from_tensor(build_tensor(slices), ExogenousCorrelation::blind(8, 5), o);
  CHECK(est.restart_supports.size() == 10);
  CHECK(est.consensus.total == 10);
  CHECK(est.s_hat == g.s);
  CHECK(est.consensus.modal == g.s);
  apply_threshold(est, 10.0, false);
  CHECK(est.s_hat.edge_count() == 0);
  CHECK(est.consensus.modal.edge_count() == 0);
}

TEST_CASE("pipeline errors are tagged with their stage") {
  const Matrix y = Matrix::Ones(10, 3);
  BatchOptions o;
  try {
    infer_topology_batch(NodalSeries(y), {0, 10}, ExogenousCorrelation::blind(1, 3), o);
    FAIL("expected an error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "correlation");
  }
  o.eta = -1.0;
  try {
    infer_topology_batch(NodalSeries(y), {0, 5, 10}, ExogenousCorrelation::blind(2, 3), o);
    FAIL("expected an error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "threshold");
  }
  o.eta = 0.0;
  try {
    infer_topology_batch(NodalSeries(y), {0, 5, 10}, ExogenousCorrelation::blind(3, 3), o);
    FAIL("expected an error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "decomposition");
  }
}

TEST_CASE("threshold grid and oracle") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = 0.2;
  a(1, 2) = 0.4;
  a(2, 0) = -0.3;
  const auto grid = eta_grid(AdjacencyMatrix(a), false);
  REQUIRE(grid.size() == 50);
  CHECK(grid.front() < 0.2);
  CHECK(grid.front() == doctest::Approx(0.2));
  CHECK(grid.back() == doctest::Approx(0.4));
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  CHECK(eta_grid(AdjacencyMatrix(a), true).size() == 50);
  CHECK(eta_grid(AdjacencyMatrix(Matrix::Zero(3, 3)), false).empty());

  Eigen::MatrixXi truth = Eigen::MatrixXi::Zero(3, 3);
  truth(0, 1) = truth(1, 2) = 1;
  const EtaChoice best = oracle_eta(EdgeIndicator(truth), AdjacencyMatrix(a), false);
  CHECK(best.eier == 0.0);
  CHECK(best.eta < 0.2);
  truth(0, 1) = 0;
  const EtaChoice upper = oracle_eta(EdgeIndicator(truth), AdjacencyMatrix(a), false);
  CHECK(upper.eier == 0.0);
  CHECK(upper.eta >= 0.2);
}
