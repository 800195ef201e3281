#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "tensortopo/cptensor.hpp"
#include "tensortopo/graphgen.hpp"
#include "tensortopo/semsim.hpp"
#include "tensortopo/topology.hpp"

using namespace tensortopo;

namespace {

struct Instance {
  AdjacencyMatrix a;
  MixingMatrix phi;
  Matrix rx;
  CorrelationTensor tensor;
};

Instance analytic_instance(Index n_power_or_nodes, Index m, std::uint64_t seed, bool kronecker) {
  Instance in;
  if (kronecker) {
    in.a = kronecker_graph(kronecker_seed(), static_cast<int>(n_power_or_nodes), 0.2, 0.5, seed).a;
  } else {
    in.a = weight_edges(erdos_renyi(n_power_or_nodes, 0.4, seed), 0.2, 0.5, seed + 1).a;
  }
  const Index n = in.a.n();
  in.phi = mixing_matrix(in.a, random_gains(n, 2.0, 3.0, seed + 2));
  in.rx = random_variance_profile(m, n, 0.5, 2.5, seed + 3);
  std::vector<Matrix> slices;
  for (Index l = 0; l < m; ++l) slices.push_back(analytic_correlation(in.phi, in.rx.row(l).transpose()));
  in.tensor = build_tensor(std::move(slices));
  return in;
}

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d;
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = d(g);
  return m;
}

// vec of all model slices, slice-major, for finite differences.
Vector model_vec(const Matrix& z, const Matrix& z3) {
  const Index n = z.rows(), m = z3.rows();
  Vector out(n * n * m);
  for (Index l = 0; l < m; ++l) {
    const Matrix s = z * z3.row(l).transpose().asDiagonal() * z.transpose();
    out.segment(l * n * n, n * n) = Eigen::Map<const Vector>(s.data(), n * n);
  }
  return out;
}

void unpack(const Vector& p, Index n, Index m, Matrix& z, Matrix& z3) {
  z = Eigen::Map<const Matrix>(p.data(), n, n);
  z3 = Eigen::Map<const Matrix>(p.data() + n * n, m, n);
}

Vector pack(const Matrix& z, const Matrix& z3) {
  Vector p(z.size() + z3.size());
  p << Eigen::Map<const Vector>(z.data(), z.size()), Eigen::Map<const Vector>(z3.data(), z3.size());
  return p;
}

// Central-difference Jacobian of the model with respect to free parameters.
Matrix numeric_jacobian(const Matrix& z, const Matrix& z3, const BoolMatrix& fixed) {
  const Index n = z.rows(), m = z3.rows();
  const Vector p0 = pack(z, z3);
  const double h = 1e-5;
  Matrix j(n * n * m, p0.size());
  for (Index k = 0; k < p0.size(); ++k) {
    if (k >= n * n) {
      const Index q = k - n * n;
      if (fixed(q % m, q / m)) {
        j.col(k).setZero();
        continue;
      }
    }
    Vector pp = p0, pm = p0;
    pp(k) += h;
    pm(k) -= h;
    Matrix za, z3a, zb, z3b;
    unpack(pp, n, m, za, z3a);
    unpack(pm, n, m, zb, z3b);
    j.col(k) = (model_vec(za, z3a) - model_vec(zb, z3b)) / (2 * h);
  }
  return j;
}

// Matches each estimated column to a true column by trying all permutations (n <= 5).
double best_permuted_scaled_error(const Matrix& est, const Matrix& truth) {
  const Index n = truth.cols();
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (Index c = 0; c < n; ++c) {
      const Vector e = est.col(perm[static_cast<std::size_t>(c)]);
      const Vector t = truth.col(c);
      const double s = e.dot(t) / e.dot(e);
      worst = std::max(worst, (s * e - t).norm() / t.norm());
    }
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("gauss-newton gramian equals J^T J from finite differences") {
  const Index n = 3, m = 4;
  const Matrix z = random_matrix(n, n, 1), z3 = random_matrix(m, n, 2);
  BoolMatrix fixed = BoolMatrix::Constant(m, n, false);
  fixed(0, 1) = fixed(2, 2) = true;
  const Matrix j = numeric_jacobian(z, z3, fixed);
  Matrix expected = j.transpose() * j;
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < m; ++r)
      if (fixed(r, c)) expected(n * n + r + m * c, n * n + r + m * c) = 1.0;
  const Matrix h = detail::gauss_newton_gramian(z, z3, fixed);
  CHECK((h - expected).cwiseAbs().maxCoeff() < 1e-6 * expected.cwiseAbs().maxCoeff());

  const Vector v = random_matrix(n * n + m * n, 1, 3).col(0);
  CHECK((detail::gauss_newton_apply(z, z3, fixed, v) - h * v).cwiseAbs().maxCoeff() < 1e-10 * (h * v).norm());
}

TEST_CASE("gradient equals the finite-difference gradient") {
  const Index n = 3, m = 4;
  const Matrix z = random_matrix(n, n, 4), z3 = random_matrix(m, n, 5);
  std::vector<Matrix> slices;
  for (Index l = 0; l < m; ++l) {
    const Matrix s = random_matrix(n, n, 10 + l);
    slices.push_back(s * s.transpose());
  }
  const CorrelationTensor t = build_tensor(slices);
  BoolMatrix fixed = BoolMatrix::Constant(m, n, false);
  fixed(1, 0) = true;
  Vector r(n * n * m);
  for (Index l = 0; l < m; ++l) r.segment(l * n * n, n * n) = Eigen::Map<const Vector>(slices[l].data(), n * n);
  auto f = [&](const Vector& p) {
    Matrix a, b;
    unpack(p, n, m, a, b);
    return 0.5 * (r - model_vec(a, b)).squaredNorm();
  };
  const Vector p0 = pack(z, z3);
  const Vector g = detail::gradient_of_half_squared_error(t, z, z3, fixed);
  for (Index k = 0; k < p0.size(); ++k) {
    Vector pp = p0, pm = p0;
    pp(k) += 1e-6;
    pm(k) -= 1e-6;
    double fd = (f(pp) - f(pm)) / 2e-6;
    if (k >= n * n && fixed((k - n * n) % m, (k - n * n) / m)) fd = 0.0;
    CHECK(g(k) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("full knowledge round trip on a 16-node graph") {
  const Instance in = analytic_instance(2, 10, 21, true);
  SolverOptions o;
  const CPResult res = cp_decompose_constrained(in.tensor, ExogenousCorrelation::full(in.rx), o);
  CHECK(res.relative_fit < 1e-8);
  CHECK(res.converged);
  const AdjacencyMatrix a = recover_adjacency(MixingMatrix(res.factors.z1));
  CHECK((a.matrix() - in.a.matrix()).cwiseAbs().maxCoeff() < 1e-6);
  // Pinned entries are exact and the two symmetric factors are identical.
  CHECK(res.factors.z3 == in.rx);
  CHECK(res.factors.z1 == res.factors.z2);
}

TEST_CASE("single rank-one term") {
  Vector alpha(1);
  alpha << 1.7;
  Matrix r(3, 1);
  r << 0.5, 1.0, 2.0;
  std::vector<Matrix> slices;
  for (Index l = 0; l < 3; ++l) slices.push_back(alpha * alpha.transpose() * r(l, 0));
  const CorrelationTensor t = build_tensor(slices);
  const CPResult res = cp_decompose_constrained(t, ExogenousCorrelation::blind(3, 1), SolverOptions{});
  CHECK(res.relative_fit < 1e-10);
  const double c = res.factors.z1(0, 0) / alpha(0);
  CHECK((res.factors.z3 - r / (c * c)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("blind decomposition recovers the mixing matrix up to permutation and scaling") {
  for (std::uint64_t seed : {31, 32, 33}) {
    const Instance in = analytic_instance(5, 8, seed, false);
    SolverOptions o;
    const CPResult res = cp_decompose_constrained(in.tensor, ExogenousCorrelation::blind(8, 5), o);
    CHECK(res.relative_fit < 1e-8);
    CHECK(best_permuted_scaled_error(res.factors.z1, in.phi.matrix()) < 1e-6);
  }
}

TEST_CASE("partial knowledge round trip") {
  const Instance in = analytic_instance(2, 10, 41, true);
  const ExogenousCorrelation known = random_mask(in.rx, 0.5, 42);
  const CPResult res = cp_decompose_constrained(in.tensor, known, SolverOptions{});
  CHECK(res.relative_fit < 1e-8);
  for (Index l = 0; l < 10; ++l)
    for (Index i = 0; i < 16; ++i)
      if (known.known(l, i)) CHECK(res.factors.z3(l, i) == in.rx(l, i));
  const AdjacencyMatrix a = recover_adjacency(MixingMatrix(res.factors.z1));
  CHECK((a.matrix() - in.a.matrix()).cwiseAbs().maxCoeff() < 1e-6);
  REQUIRE(res.runs.front().phase_starts.size() == 2);
}

TEST_CASE("objective never increases, for both methods and every knowledge level") {
  const Instance in = analytic_instance(2, 10, 51, true);
  std::vector<double> noise;
  for (SolverMethod method : {SolverMethod::kLevenbergMarquardt, SolverMethod::kAlternating}) {
    SolverOptions o;
    o.method = method;
    o.restarts = 2;
    o.max_sweeps = method == SolverMethod::kAlternating ? 150 : 500;
    for (bool spectral : {true, false}) {
      o.spectral_init = spectral;
      for (double miss : {0.0, 0.5, 1.0}) {
        const CPResult res = cp_decompose_constrained(in.tensor, random_mask(in.rx, miss, 52), o);
        for (const CPRun& run : res.runs) {
          CHECK(max_relative_increase(run) <= 1e-12);
          CHECK(run.objective_history.size() >= 2);
        }
      }
    }
  }
}

TEST_CASE("spectral start is exact on noiseless slices") {
  const Instance in = analytic_instance(5, 10, 61, false);
  SolverOptions o;
  o.restarts = 1;
  o.max_sweeps = 1;
  for (double miss : {0.0, 1.0}) {
    const CPResult res = cp_decompose_constrained(in.tensor, random_mask(in.rx, miss, 62), o);
    CHECK(res.runs.front().objective_history.front() < 1e-16 * in.tensor.squared_norm());
    CHECK(best_permuted_scaled_error(res.factors.z1, in.phi.matrix()) < 1e-6);
  }
  o.spectral_init = false;
  const CPResult random = cp_decompose_constrained(in.tensor, ExogenousCorrelation::blind(10, 5), o);
  CHECK(random.relative_fit > 1e-3);
}

TEST_CASE("alternating method reduces the fit and keeps its constraints") {
  const Instance in = analytic_instance(4, 6, 61, false);
  SolverOptions o;
  o.method = SolverMethod::kAlternating;
  o.max_sweeps = 2000;
  const ExogenousCorrelation known = ExogenousCorrelation::full(in.rx);
  const CPResult res = cp_decompose_constrained(in.tensor, known, o);
  CHECK(res.runs.front().objective_history.back() < res.runs.front().objective_history.front());
  CHECK(res.factors.z3 == in.rx);
  CHECK(res.factors.z1 == res.factors.z2);
  CHECK(res.relative_fit < 1e-4);
}

TEST_CASE("refinement from the truth stays at the truth") {
  const Instance in = analytic_instance(5, 6, 71, false);
  CPFactors init{in.phi.matrix(), in.phi.matrix(), in.rx};
  const CPRun run = cp_refine(in.tensor, ExogenousCorrelation::full(in.rx), SolverOptions{}, init);
  CHECK(run.relative_fit < 1e-12);
  CHECK(run.converged);
}

TEST_CASE("restarts are reported and the best one returned") {
  const Instance in = analytic_instance(5, 6, 81, false);
  SolverOptions o;
  o.restarts = 3;
  const CPResult res = cp_decompose_constrained(in.tensor, ExogenousCorrelation::blind(6, 5), o);
  REQUIRE(res.runs.size() == 3);
  for (const CPRun& r : res.runs) CHECK(res.relative_fit <= r.relative_fit);
  CHECK(res.relative_fit == res.runs[static_cast<std::size_t>(res.best_restart)].relative_fit);
}

TEST_CASE("solver is deterministic in its seed") {
  const Instance in = analytic_instance(5, 6, 91, false);
  SolverOptions o;
  o.restarts = 2;
  const CPResult a = cp_decompose_constrained(in.tensor, ExogenousCorrelation::blind(6, 5), o);
  const CPResult b = cp_decompose_constrained(in.tensor, ExogenousCorrelation::blind(6, 5), o);
  CHECK(a.factors.z1 == b.factors.z1);
  CHECK(a.runs.back().objective_history == b.runs.back().objective_history);
}

TEST_CASE("sweep limit is reported as non-convergence") {
  const Instance in = analytic_instance(2, 10, 101, true);
  SolverOptions o;
  o.max_sweeps = 2;
  o.spectral_init = false;
  const CPResult res = cp_decompose_constrained(in.tensor, ExogenousCorrelation::blind(10, 16), o);
  CHECK_FALSE(res.converged);
  CHECK(std::find(res.warnings.begin(), res.warnings.end(),
                  "solver stopped at the sweep limit before converging") != res.warnings.end());
}

TEST_CASE("more nodes than windows is warned about") {
  const Instance in = analytic_instance(1, 3, 111, true);
  const CPResult res = cp_decompose_constrained(in.tensor, ExogenousCorrelation::full(in.rx), SolverOptions{});
  CHECK_FALSE(res.warnings.empty());
  CHECK(res.warnings.front().find("exceeds the window count") != std::string::npos);
}

TEST_CASE("dimension checks") {
  const Instance in = analytic_instance(5, 6, 121, false);
  CHECK_THROWS_AS(cp_decompose_constrained(in.tensor, ExogenousCorrelation::blind(5, 5), SolverOptions{}),
                  std::invalid_argument);
  CPFactors bad{Matrix::Ones(4, 4), Matrix::Ones(4, 4), Matrix::Ones(6, 4)};
  CHECK_THROWS_AS(cp_refine(in.tensor, ExogenousCorrelation::blind(6, 5), SolverOptions{}, bad),
                  std::invalid_argument);
}

TEST_CASE("conjugate-gradient path matches the dense path") {
  const Instance in = analytic_instance(2, 10, 131, true);
  SolverOptions o;
  o.dense_parameter_limit = 0;
  const CPResult res = cp_decompose_constrained(in.tensor, ExogenousCorrelation::full(in.rx), o);
  CHECK(res.relative_fit < 1e-8);
  const AdjacencyMatrix a = recover_adjacency(MixingMatrix(res.factors.z1));
  CHECK((a.matrix() - in.a.matrix()).cwiseAbs().maxCoeff() < 1e-6);
}
