#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "tensortopo/assignment.hpp"
#include "tensortopo/cptensor.hpp"
#include "tensortopo/rng.hpp"

namespace tensortopo {

namespace {

struct Layout {
  Index n;
  Index m;
  Index size() const { return n * n + m * n; }
  Index z(Index i, Index col) const { return i + n * col; }
  Index z3(Index row, Index col) const { return n * n + row + m * col; }
};

Vector pack(const Matrix& z, const Matrix& z3) {
  Vector v(z.size() + z3.size());
  v.head(z.size()) = Eigen::Map<const Vector>(z.data(), z.size());
  v.tail(z3.size()) = Eigen::Map<const Vector>(z3.data(), z3.size());
  return v;
}

void unpack(const Vector& v, Matrix& z, Matrix& z3) {
  z = Eigen::Map<const Matrix>(v.data(), z.rows(), z.cols());
  z3 = Eigen::Map<const Matrix>(v.data() + z.size(), z3.rows(), z3.cols());
}

Matrix model_slice(const Matrix& z, const Matrix& z3, Index m) {
  return z * z3.row(m).transpose().asDiagonal() * z.transpose();
}

double half_squared_error(const CorrelationTensor& t, const Matrix& z, const Matrix& z3) {
  double s = 0.0;
  for (Index m = 0; m < t.m(); ++m) s += (t.slice(m) - model_slice(z, z3, m)).squaredNorm();
  return 0.5 * s;
}

void check_shapes(const Matrix& z, const Matrix& z3, const BoolMatrix& fixed) {
  if (z.rows() != z.cols() || z3.cols() != z.cols() || fixed.rows() != z3.rows() ||
      fixed.cols() != z3.cols())
    throw std::invalid_argument("factor shape mismatch");
}

// Diagonal of J^T J; fixed entries report 1.
Vector gramian_diagonal(const Matrix& z, const Matrix& z3, const BoolMatrix& fixed) {
  const Layout lay{z.rows(), z3.rows()};
  const Vector g1 = z.colwise().squaredNorm().transpose();
  const Vector g3 = z3.colwise().squaredNorm().transpose();
  Vector d(lay.size());
  for (Index n = 0; n < lay.n; ++n) {
    for (Index i = 0; i < lay.n; ++i)
      d(lay.z(i, n)) = 2.0 * g3(n) * (g1(n) + z(i, n) * z(i, n));
    for (Index m = 0; m < lay.m; ++m) d(lay.z3(m, n)) = fixed(m, n) ? 1.0 : g1(n) * g1(n);
  }
  return d;
}

// Columns whose Z3 entries are all free carry a scale ambiguity; fold it into Z3.
void normalize_free_columns(Matrix& z, Matrix& z3, const std::vector<bool>& scale_free) {
  for (Index n = 0; n < z.cols(); ++n) {
    if (!scale_free[static_cast<std::size_t>(n)]) continue;
    const double s = z.col(n).norm();
    if (!(s > 0.0) || !std::isfinite(s)) continue;
    z.col(n) /= s;
    z3.col(n) *= s * s;
  }
}

std::vector<bool> scale_free_columns(const BoolMatrix& fixed) {
  std::vector<bool> out(static_cast<std::size_t>(fixed.cols()));
  for (Index n = 0; n < fixed.cols(); ++n)
    out[static_cast<std::size_t>(n)] = !fixed.col(n).any();
  return out;
}

void pin_known(Matrix& z3, const ExogenousCorrelation& known) {
  for (Index n = 0; n < z3.cols(); ++n)
    for (Index m = 0; m < z3.rows(); ++m)
      if (known.known(m, n)) z3(m, n) = known.values()(m, n);
}

// Preconditioned CG for (H + mu I) x = b with H applied matrix-free.
Vector solve_cg(const Matrix& z, const Matrix& z3, const BoolMatrix& fixed, double mu,
                const Vector& b, const SolverOptions& opts) {
  const Vector precond =
      (gramian_diagonal(z, z3, fixed).array() + mu).inverse().matrix();
  Vector x = Vector::Zero(b.size());
  Vector r = b;
  Vector p = precond.cwiseProduct(r);
  double rz = r.dot(p);
  const double stop = opts.cg_tolerance * b.norm();
  for (int it = 0; it < opts.cg_max_iterations && r.norm() > stop; ++it) {
    const Vector hp = detail::gauss_newton_apply(z, z3, fixed, p) + mu * p;
    const double php = p.dot(hp);
    if (!(php > 0.0)) break;
    const double alpha = rz / php;
    x += alpha * p;
    r -= alpha * hp;
    const Vector zr = precond.cwiseProduct(r);
    const double rz_next = r.dot(zr);
    p = zr + (rz_next / rz) * p;
    rz = rz_next;
  }
  return x;
}

Vector solve_dense(const Matrix& h, double mu, const Vector& b, double ridge) {
  Matrix a = h;
  a.diagonal().array() += mu;
  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    a.diagonal().array() += ridge * a.trace();
    ldlt.compute(a);
  }
  return ldlt.solve(b);
}

struct PhaseResult {
  std::vector<double> history;
  int sweeps = 0;
  bool converged = false;
};

PhaseResult run_levenberg_marquardt(const CorrelationTensor& t, const BoolMatrix& fixed,
                                    const SolverOptions& opts, Matrix& z, Matrix& z3) {
  PhaseResult out;
  const Layout lay{t.n(), t.m()};
  const auto scale_free = scale_free_columns(fixed);
  const bool dense = lay.size() <= opts.dense_parameter_limit;
  const double norm2 = t.squared_norm();

  normalize_free_columns(z, z3, scale_free);
  double f = half_squared_error(t, z, z3);
  out.history.push_back(f);

  double mu = -1.0;
  double nu = 2.0;
  Matrix h;
  bool refresh = true;
  Vector g;
  for (int it = 0; it < opts.max_sweeps; ++it) {
    if (f <= 1e-32 * norm2) {
      out.converged = true;
      break;
    }
    if (refresh) {
      g = detail::gradient_of_half_squared_error(t, z, z3, fixed);
      if (dense) h = detail::gauss_newton_gramian(z, z3, fixed);
      if (mu < 0.0) {
        const Vector d = dense ? Vector(h.diagonal()) : gramian_diagonal(z, z3, fixed);
        mu = 1e-3 * d.maxCoeff();
      }
      refresh = false;
    }
    if (g.lpNorm<Eigen::Infinity>() <= 1e-15 * std::sqrt(norm2)) {
      out.converged = true;
      break;
    }
    const Vector step = dense ? solve_dense(h, mu, -g, opts.ridge)
                              : solve_cg(z, z3, fixed, mu, -g, opts);
    ++out.sweeps;

    Matrix z_try = z;
    Matrix z3_try = z3;
    unpack(pack(z, z3) + step, z_try, z3_try);
    normalize_free_columns(z_try, z3_try, scale_free);
    const double f_try = half_squared_error(t, z_try, z3_try);
    const double predicted = 0.5 * step.dot(mu * step - g);

    if (std::isfinite(f_try) && f_try < f) {
      const double gain = predicted > 0.0 ? (f - f_try) / predicted : 0.0;
      const double decrease = (f - f_try) / f;
      z = std::move(z_try);
      z3 = std::move(z3_try);
      f = f_try;
      out.history.push_back(f);
      mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * gain - 1.0, 3));
      nu = 2.0;
      refresh = true;
      if (decrease < opts.fit_tolerance) {
        out.converged = true;
        break;
      }
    } else {
      out.history.push_back(f);
      mu *= nu;
      nu *= 2.0;
      if (!std::isfinite(mu) || mu > 1e30) {
        // No representable step decreases the objective any further.
        out.converged = true;
        break;
      }
    }
  }
  return out;
}

// Real roots of c0 + c1 t + c2 t^2 + c3 t^3.
std::vector<double> cubic_roots(double c0, double c1, double c2, double c3) {
  std::vector<double> roots;
  const double scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2), std::abs(c3)});
  if (scale == 0.0) return roots;
  if (std::abs(c3) > 1e-14 * scale) {
    Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
    companion(1, 0) = 1.0;
    companion(2, 1) = 1.0;
    companion(0, 2) = -c0 / c3;
    companion(1, 2) = -c1 / c3;
    companion(2, 2) = -c2 / c3;
    Eigen::EigenSolver<Eigen::Matrix3d> es(companion, false);
    for (Index i = 0; i < 3; ++i) {
      const std::complex<double> r = es.eigenvalues()(i);
      if (std::abs(r.imag()) <= 1e-9 * std::max(1.0, std::abs(r.real()))) roots.push_back(r.real());
    }
  } else if (std::abs(c2) > 1e-14 * scale) {
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc >= 0.0) {
      roots.push_back((-c1 + std::sqrt(disc)) / (2.0 * c2));
      roots.push_back((-c1 - std::sqrt(disc)) / (2.0 * c2));
    }
  } else if (c1 != 0.0) {
    roots.push_back(-c0 / c1);
  }
  return roots;
}

// Exact line search of the symmetric objective along z + t * dz.
double symmetric_line_search(const CorrelationTensor& t, const Matrix& z, const Matrix& z3,
                             const Matrix& dz) {
  double c[5] = {0, 0, 0, 0, 0};
  for (Index m = 0; m < t.m(); ++m) {
    const auto d = z3.row(m).transpose().asDiagonal();
    const Matrix e = t.slice(m) - model_slice(z, z3, m);
    const Matrix half = dz * d * z.transpose();
    const Matrix b = half + half.transpose();
    const Matrix q = dz * d * dz.transpose();
    c[0] += e.squaredNorm();
    c[1] += -2.0 * (e.cwiseProduct(b)).sum();
    c[2] += b.squaredNorm() - 2.0 * (e.cwiseProduct(q)).sum();
    c[3] += 2.0 * (b.cwiseProduct(q)).sum();
    c[4] += q.squaredNorm();
  }
  auto value = [&](double s) {
    return c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * c[4])));
  };
  double best = 0.0;
  double best_value = c[0];
  std::vector<double> candidates = cubic_roots(c[1], 2.0 * c[2], 3.0 * c[3], 4.0 * c[4]);
  candidates.push_back(1.0);
  for (double s : candidates) {
    if (!std::isfinite(s)) continue;
    const double v = value(s);
    if (v < best_value) {
      best_value = v;
      best = s;
    }
  }
  return best;
}

// Least squares for the free entries of each row of Z3 with Z held fixed.
void update_z3(const CorrelationTensor& t, const Matrix& z, Matrix& z3, const BoolMatrix& fixed,
               double ridge) {
  const Index n = z.cols();
  const Matrix g1 = z.transpose() * z;
  const Matrix hadamard = g1.cwiseProduct(g1);
  for (Index m = 0; m < t.m(); ++m) {
    std::vector<Index> free_idx;
    for (Index k = 0; k < n; ++k)
      if (!fixed(m, k)) free_idx.push_back(k);
    if (free_idx.empty()) continue;
    const Vector proj = (z.transpose() * t.slice(m) * z).diagonal();
    const Index f = static_cast<Index>(free_idx.size());
    Matrix a(f, f);
    Vector b(f);
    for (Index p = 0; p < f; ++p) {
      const Index kp = free_idx[static_cast<std::size_t>(p)];
      b(p) = proj(kp);
      for (Index k = 0; k < n; ++k)
        if (fixed(m, k)) b(p) -= hadamard(kp, k) * z3(m, k);
      for (Index q = 0; q < f; ++q) a(p, q) = hadamard(kp, free_idx[static_cast<std::size_t>(q)]);
    }
    Eigen::LDLT<Matrix> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.rcond() < std::numeric_limits<double>::epsilon()) {
      a.diagonal().array() += ridge * std::max(a.trace(), std::numeric_limits<double>::min());
      ldlt.compute(a);
    }
    const Vector sol = ldlt.solve(b);
    for (Index p = 0; p < f; ++p) z3(m, free_idx[static_cast<std::size_t>(p)]) = sol(p);
  }
}

PhaseResult run_alternating(const CorrelationTensor& t, const BoolMatrix& fixed,
                            const SolverOptions& opts, Matrix& z, Matrix& z3) {
  PhaseResult out;
  const auto scale_free = scale_free_columns(fixed);
  const double norm2 = t.squared_norm();
  normalize_free_columns(z, z3, scale_free);
  double f = half_squared_error(t, z, z3);
  out.history.push_back(f);

  for (int it = 0; it < opts.max_sweeps; ++it) {
    if (f <= 1e-32 * norm2) {
      out.converged = true;
      break;
    }
    ++out.sweeps;
    const double f_start = f;

    // Mode-1 least squares with the partner mode held at the current Z.
    Matrix rhs = Matrix::Zero(z.rows(), z.cols());
    for (Index m = 0; m < t.m(); ++m) rhs += t.slice(m) * z * z3.row(m).transpose().asDiagonal();
    Matrix gram = (z3.transpose() * z3).cwiseProduct(z.transpose() * z);
    Eigen::LDLT<Matrix> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.rcond() < std::numeric_limits<double>::epsilon()) {
      gram.diagonal().array() += opts.ridge * std::max(gram.trace(), std::numeric_limits<double>::min());
      ldlt.compute(gram);
    }
    const Matrix z_half = ldlt.solve(rhs.transpose()).transpose();
    const Matrix dz = z_half - z;
    const double step = symmetric_line_search(t, z, z3, dz);
    if (step != 0.0) {
      Matrix z_next = z + step * dz;
      const double f_next = half_squared_error(t, z_next, z3);
      if (f_next < f) {
        z = std::move(z_next);
        f = f_next;
      }
    }

    Matrix z3_next = z3;
    update_z3(t, z, z3_next, fixed, opts.ridge);
    Matrix z_norm = z;
    normalize_free_columns(z_norm, z3_next, scale_free);
    const double f_next = half_squared_error(t, z_norm, z3_next);
    if (f_next < f) {
      z = std::move(z_norm);
      z3 = std::move(z3_next);
      f = f_next;
    }
    out.history.push_back(f);
    if ((f_start - f) < opts.fit_tolerance * f_start) {
      out.converged = true;
      break;
    }
  }
  return out;
}

PhaseResult run_phase(const CorrelationTensor& t, const BoolMatrix& fixed,
                      const SolverOptions& opts, Matrix& z, Matrix& z3) {
  if (opts.method == SolverMethod::kAlternating) return run_alternating(t, fixed, opts, z, z3);
  return run_levenberg_marquardt(t, fixed, opts, z, z3);
}

// Matches blind columns to the known entries of Omega and rescales them accordingly.
void align_to_known(Matrix& z, Matrix& z3, const ExogenousCorrelation& known) {
  const Index n = z.cols();
  Matrix cost = Matrix::Zero(n, n);
  Matrix scale = Matrix::Ones(n, n);
  for (Index k = 0; k < n; ++k) {
    double rr = 0.0;
    for (Index m = 0; m < known.m(); ++m)
      if (known.known(m, k)) rr += known.values()(m, k) * known.values()(m, k);
    if (rr == 0.0) continue;
    for (Index c = 0; c < n; ++c) {
      double vv = 0.0, vr = 0.0;
      for (Index m = 0; m < known.m(); ++m) {
        if (!known.known(m, k)) continue;
        vv += z3(m, c) * z3(m, c);
        vr += z3(m, c) * known.values()(m, k);
      }
      const double s = vv > 0.0 ? vr / vv : 0.0;
      if (!(s > 0.0)) {
        cost(k, c) = 2.0;
        continue;
      }
      double res = 0.0;
      for (Index m = 0; m < known.m(); ++m) {
        if (!known.known(m, k)) continue;
        const double d = s * z3(m, c) - known.values()(m, k);
        res += d * d;
      }
      cost(k, c) = std::sqrt(res / rr);
      scale(k, c) = s;
    }
  }
  const std::vector<Index> match = solve_assignment(cost);
  Matrix z_new(z.rows(), n), z3_new(z3.rows(), n);
  for (Index k = 0; k < n; ++k) {
    const Index c = match[static_cast<std::size_t>(k)];
    const double s = scale(k, c);
    z_new.col(k) = z.col(c) / std::sqrt(s);
    z3_new.col(k) = z3.col(c) * s;
  }
  z = std::move(z_new);
  z3 = std::move(z3_new);
}

void random_init(Index n, Index m, std::uint64_t seed, Matrix& z, Matrix& z3) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  z.resize(n, n);
  z3.resize(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) z(i, j) = unif(rng);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) z3(i, j) = unif(rng);
}

// For T1 = Z D1 Z^T and T2 = Z D2 Z^T (T2 positive definite), the generalized eigenvectors V
// of (T1, T2) satisfy V^T Z = P S, so Z = V^{-T} up to column order and scale.
void spectral_init(const CorrelationTensor& t, std::uint64_t seed, Matrix& z, Matrix& z3) {
  const Index n = t.n();
  const Index m = t.m();
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Matrix t1 = Matrix::Zero(n, n), t2 = Matrix::Zero(n, n);
  for (Index l = 0; l < m; ++l) {
    t1 += unif(rng) * t.slice(l);
    t2 += unif(rng) * t.slice(l);
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(t1, t2);
  if (ges.info() != Eigen::Success) throw std::runtime_error("slice pencil is not definite");
  Eigen::FullPivLU<Matrix> lu(ges.eigenvectors().transpose());
  if (!lu.isInvertible()) throw std::runtime_error("generalized eigenvectors are singular");
  z = lu.inverse();
  for (Index c = 0; c < n; ++c) z.col(c).normalize();
  // Per window, least squares for the diagonal: (Z^T Z .* Z^T Z) d = diag(Z^T R Z).
  const Matrix g = z.transpose() * z;
  const Eigen::LDLT<Matrix> gram(g.cwiseProduct(g));
  z3.resize(m, n);
  for (Index l = 0; l < m; ++l)
    z3.row(l) = gram.solve((z.transpose() * t.slice(l) * z).diagonal()).transpose();
}

void check_problem(const CorrelationTensor& tensor, const ExogenousCorrelation& known) {
  if (tensor.m() < 2) throw std::invalid_argument("solver needs a tensor with at least two windows");
  if (known.m() != tensor.m() || known.n() != tensor.n())
    throw std::invalid_argument("exogenous correlation does not match the tensor dimensions");
}

CPRun finish_run(const CorrelationTensor& tensor, Matrix z, Matrix z3, bool converged, int sweeps,
                 std::vector<double> history, std::vector<std::size_t> phases) {
  CPRun run;
  const double f = half_squared_error(tensor, z, z3);
  const double norm2 = tensor.squared_norm();
  run.relative_fit = norm2 > 0.0 ? std::sqrt(2.0 * f / norm2) : std::sqrt(2.0 * f);
  run.factors.z2 = z;
  run.factors.z1 = std::move(z);
  run.factors.z3 = std::move(z3);
  run.converged = converged;
  run.sweeps = sweeps;
  run.objective_history = std::move(history);
  run.phase_starts = std::move(phases);
  return run;
}

}  // namespace

CPRun cp_refine(const CorrelationTensor& tensor, const ExogenousCorrelation& known,
                const SolverOptions& opts, CPFactors init) {
  check_problem(tensor, known);
  if (init.z1.rows() != tensor.n() || init.z1.cols() != tensor.n() ||
      init.z3.rows() != tensor.m() || init.z3.cols() != tensor.n())
    throw std::invalid_argument("initial factors do not match the tensor dimensions");
  Matrix z = std::move(init.z1);
  Matrix z3 = std::move(init.z3);
  pin_known(z3, known);
  PhaseResult ph = run_phase(tensor, known.mask(), opts, z, z3);
  return finish_run(tensor, std::move(z), std::move(z3), ph.converged, ph.sweeps,
                    std::move(ph.history), {0});
}

CPResult cp_decompose_constrained(const CorrelationTensor& tensor,
                                  const ExogenousCorrelation& known, const SolverOptions& opts) {
  check_problem(tensor, known);
  if (opts.max_sweeps < 1) throw std::invalid_argument("max_sweeps must be positive");
  const Index n = tensor.n();
  const Index m = tensor.m();
  const bool blind = known.is_blind();
  const bool partial = !blind && !known.is_full();
  const int restarts = opts.restarts > 0 ? opts.restarts : (blind ? 10 : 1);

  CPResult result;
  if (n > m)
    result.warnings.push_back("rank " + std::to_string(n) + " exceeds the window count " +
                              std::to_string(m));

  const BoolMatrix none = BoolMatrix::Constant(m, n, false);
  for (int r = 0; r < restarts; ++r) {
    Matrix z, z3;
    const std::uint64_t seed = derive_seed(opts.rng_seed, static_cast<std::uint64_t>(r));
    bool spectral = r == 0 && opts.spectral_init;
    if (spectral) {
      try {
        spectral_init(tensor, seed, z, z3);
      } catch (const std::runtime_error&) {
        spectral = false;
      }
    }
    if (!spectral) random_init(n, m, seed, z, z3);
    // A spectral start has no column order; match it to Omega before pinning.
    if (spectral && !blind) align_to_known(z, z3, known);
    CPRun run;
    if (partial && opts.blind_warm_start) {
      PhaseResult first = run_phase(tensor, none, opts, z, z3);
      align_to_known(z, z3, known);
      pin_known(z3, known);
      PhaseResult second = run_phase(tensor, known.mask(), opts, z, z3);
      std::vector<double> history = std::move(first.history);
      const std::size_t split = history.size();
      history.insert(history.end(), second.history.begin(), second.history.end());
      run = finish_run(tensor, std::move(z), std::move(z3), second.converged,
                       first.sweeps + second.sweeps, std::move(history), {0, split});
    } else {
      pin_known(z3, known);
      PhaseResult ph = run_phase(tensor, known.mask(), opts, z, z3);
      run = finish_run(tensor, std::move(z), std::move(z3), ph.converged, ph.sweeps,
                       std::move(ph.history), {0});
    }
    result.runs.push_back(std::move(run));
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < result.runs.size(); ++r)
    if (result.runs[r].relative_fit < result.runs[best].relative_fit) best = r;
  const CPRun& top = result.runs[best];
  result.factors = top.factors;
  result.relative_fit = top.relative_fit;
  result.converged = top.converged;
  result.sweeps = top.sweeps;
  result.best_restart = static_cast<int>(best);
  if (!top.converged)
    result.warnings.push_back("solver stopped at the sweep limit before converging");
  return result;
}

double max_relative_increase(const CPRun& run) {
  const auto& h = run.objective_history;
  std::vector<std::size_t> starts = run.phase_starts;
  if (starts.empty()) starts.push_back(0);
  starts.push_back(h.size());
  double worst = 0.0;
  for (std::size_t p = 0; p + 1 < starts.size(); ++p)
    for (std::size_t i = starts[p] + 1; i < starts[p + 1]; ++i) {
      const double prev = h[i - 1];
      if (h[i] > prev) {
        const double rel = prev > 0.0 ? (h[i] - prev) / prev : std::numeric_limits<double>::infinity();
        worst = std::max(worst, rel);
      }
    }
  return worst;
}

namespace detail {

Matrix gauss_newton_gramian(const Matrix& z, const Matrix& z3, const BoolMatrix& fixed) {
  check_shapes(z, z3, fixed);
  const Layout lay{z.rows(), z3.rows()};
  const Index n = lay.n;
  const Matrix g1 = z.transpose() * z;
  const Matrix g3 = z3.transpose() * z3;
  Matrix h = Matrix::Zero(lay.size(), lay.size());

  for (Index col_k = 0; col_k < n; ++col_k)
    for (Index col_n = 0; col_n < n; ++col_n) {
      auto block = h.block(lay.z(0, col_n), lay.z(0, col_k), n, n);
      block.noalias() = z.col(col_k) * z.col(col_n).transpose();
      block.diagonal().array() += g1(col_n, col_k);
      block *= 2.0 * g3(col_n, col_k);
    }

  for (Index col_k = 0; col_k < n; ++col_k)
    for (Index m = 0; m < lay.m; ++m) {
      if (fixed(m, col_k)) continue;
      const Index c = lay.z3(m, col_k);
      for (Index col_n = 0; col_n < n; ++col_n) {
        const double w = 2.0 * g1(col_n, col_k) * z3(m, col_n);
        for (Index i = 0; i < n; ++i) {
          const double v = w * z(i, col_k);
          h(lay.z(i, col_n), c) = v;
          h(c, lay.z(i, col_n)) = v;
        }
      }
      for (Index col_n = 0; col_n < n; ++col_n)
        if (!fixed(m, col_n)) h(lay.z3(m, col_n), c) = g1(col_n, col_k) * g1(col_n, col_k);
    }

  for (Index col = 0; col < n; ++col)
    for (Index m = 0; m < lay.m; ++m)
      if (fixed(m, col)) h(lay.z3(m, col), lay.z3(m, col)) = 1.0;
  return h;
}

Vector gauss_newton_apply(const Matrix& z, const Matrix& z3, const BoolMatrix& fixed,
                          const Vector& v) {
  check_shapes(z, z3, fixed);
  const Layout lay{z.rows(), z3.rows()};
  if (v.size() != lay.size()) throw std::invalid_argument("parameter vector size mismatch");
  Matrix dz(z.rows(), z.cols()), dz3(z3.rows(), z3.cols());
  unpack(v, dz, dz3);
  for (Index col = 0; col < lay.n; ++col)
    for (Index m = 0; m < lay.m; ++m)
      if (fixed(m, col)) dz3(m, col) = 0.0;

  Matrix gz = Matrix::Zero(z.rows(), z.cols());
  Matrix gz3(z3.rows(), z3.cols());
  for (Index m = 0; m < lay.m; ++m) {
    const auto d = z3.row(m).transpose().asDiagonal();
    const Matrix zd = z * d;
    const Matrix half = dz * zd.transpose();
    const Matrix u = half + half.transpose() + z * dz3.row(m).transpose().asDiagonal() * z.transpose();
    gz.noalias() += 2.0 * u * zd;
    const Matrix uz = u * z;
    for (Index col = 0; col < lay.n; ++col)
      gz3(m, col) = fixed(m, col) ? v(lay.z3(m, col)) : z.col(col).dot(uz.col(col));
  }
  return pack(gz, gz3);
}

Vector gradient_of_half_squared_error(const CorrelationTensor& t, const Matrix& z, const Matrix& z3,
                                      const BoolMatrix& fixed) {
  check_shapes(z, z3, fixed);
  if (t.n() != z.rows() || t.m() != z3.rows())
    throw std::invalid_argument("factor dimensions do not match the tensor");
  Matrix gz = Matrix::Zero(z.rows(), z.cols());
  Matrix gz3(z3.rows(), z3.cols());
  for (Index m = 0; m < t.m(); ++m) {
    const Matrix e = t.slice(m) - model_slice(z, z3, m);
    const Matrix es = e + e.transpose();
    gz.noalias() -= es * z * z3.row(m).transpose().asDiagonal();
    const Matrix ez = e * z;
    for (Index col = 0; col < z.cols(); ++col)
      gz3(m, col) = fixed(m, col) ? 0.0 : -z.col(col).dot(ez.col(col));
  }
  return pack(gz, gz3);
}

}  // namespace detail

}  // namespace tensortopo
