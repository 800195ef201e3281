#include "tensortopo/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/LU>

#include "tensortopo/assignment.hpp"

namespace tensortopo {

AdjacencyMatrix recover_adjacency(const MixingMatrix& phi_hat) {
  const Matrix& phi = phi_hat.matrix();
  const Index n = phi.rows();
  if (n == 0) throw std::invalid_argument("recover_adjacency: empty mixing matrix");
  if (!phi.allFinite()) throw SingularMatrixError("mixing estimate has non-finite entries", INFINITY);
  Eigen::FullPivLU<Matrix> lu(phi);
  if (!lu.isInvertible()) throw SingularMatrixError("mixing estimate is singular", INFINITY);
  const double rcond = reciprocal_condition(phi);
  if (!(rcond > std::numeric_limits<double>::epsilon()))
    throw SingularMatrixError("mixing estimate is numerically singular",
                              rcond > 0.0 ? 1.0 / rcond : INFINITY);
  const Matrix inv = lu.inverse();
  const Vector d = inv.diagonal();
  for (Index i = 0; i < n; ++i)
    if (!(std::abs(d(i)) > 1e-12))
      throw Error("inverse mixing estimate has a zero diagonal entry at node " + std::to_string(i));
  Matrix a = Matrix::Identity(n, n) - d.cwiseInverse().asDiagonal() * inv;
  a.diagonal().setZero();
  return AdjacencyMatrix(std::move(a));
}

namespace {

// Sum of C(n, k) for k = 1..kmax stays below `budget`; returns the largest such kmax.
int affordable_kruskal_depth(Index n, Index limit, double budget) {
  double total = 0.0;
  double comb = 1.0;
  int k = 0;
  while (k < limit) {
    comb = comb * static_cast<double>(n - k) / static_cast<double>(k + 1);
    if (total + comb > budget) break;
    total += comb;
    ++k;
  }
  return std::max(k, 2);
}

}  // namespace

IdentifiabilityReport check_identifiability(const ExogenousCorrelation& rx, double tolerance) {
  IdentifiabilityReport rep;
  const Index m = rx.m();
  const Index n = rx.n();
  const Matrix& r = rx.values();
  rep.fully_known = rx.is_full();
  if (rep.fully_known && n > 0) {
    const Index limit = std::min(m, n);
    const int depth = affordable_kruskal_depth(n, limit, 5e3);
    rep.kruskal_rank_rx = kruskal_rank(r, -1.0, depth);
    rep.kruskal_rank_capped = depth < limit && rep.kruskal_rank_rx == depth;
    rep.full_condition_met = rep.kruskal_rank_rx >= 2;
  }

  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      double aa = 0.0, bb = 0.0, ab = 0.0;
      Index rows = 0;
      bool finite = true;
      for (Index k = 0; k < m; ++k) {
        if (!rx.known(k, i) && !rx.known(k, j)) continue;
        const double a = r(k, i), b = r(k, j);
        if (!std::isfinite(a) || !std::isfinite(b)) finite = false;
        aa += a * a;
        bb += b * b;
        ab += a * b;
        ++rows;
      }
      bool independent = finite && rows >= 2 && aa > 0.0 && bb > 0.0;
      if (independent) independent = 1.0 - (ab / aa) * (ab / bb) > tolerance;
      if (!independent) rep.failing_pairs.emplace_back(i, j);
    }
  rep.partial_condition_met = rep.failing_pairs.empty();
  return rep;
}

MixingMatrix resolve_permutation(const MixingMatrix& phi_hat) {
  const Matrix& z = phi_hat.matrix();
  const Index n = z.rows();
  Eigen::FullPivLU<Matrix> lu(z);
  if (!lu.isInvertible()) return phi_hat;
  const Matrix w = lu.inverse();
  Matrix cost(n, n);
  for (Index r = 0; r < n; ++r) {
    const double norm = w.row(r).norm();
    for (Index c = 0; c < n; ++c) {
      const double rel = std::abs(w(r, c)) / norm;
      cost(r, c) = rel > 0.0 ? -std::log(rel) : 1e6;
    }
  }
  const std::vector<Index> target = solve_assignment(cost);
  Matrix out(n, n);
  for (Index r = 0; r < n; ++r) out.col(target[static_cast<std::size_t>(r)]) = z.col(r);
  return MixingMatrix(std::move(out));
}

Consensus tally_supports(const std::vector<EdgeIndicator>& estimates) {
  if (estimates.empty()) throw std::invalid_argument("majority vote needs at least one estimate");
  const Index n = estimates.front().n();
  Consensus c;
  for (const auto& e : estimates) {
    if (e.n() != n) throw std::invalid_argument("majority vote: dimension mismatch");
    auto it = std::find_if(c.table.begin(), c.table.end(),
                           [&](const auto& entry) { return entry.first == e; });
    if (it == c.table.end())
      c.table.emplace_back(e, 1);
    else
      ++it->second;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.table.size(); ++i)
    if (c.table[i].second > c.table[best].second) best = i;
  for (std::size_t i = 0; i < c.table.size(); ++i)
    if (i != best && c.table[i].second == c.table[best].second) c.tie = true;
  c.modal = c.table[best].first;
  c.votes = c.table[best].second;
  c.total = static_cast<int>(estimates.size());
  return c;
}

EdgeIndicator majority_vote(const std::vector<EdgeIndicator>& estimates) {
  return tally_supports(estimates).modal;
}

void apply_threshold(TopologyEstimate& est, double eta, bool use_abs) {
  est.eta = eta;
  est.use_abs = use_abs;
  est.s_hat = threshold_edges(est.a_hat, eta, use_abs);
  est.restart_supports.clear();
  for (const auto& a : est.restart_adjacency)
    est.restart_supports.push_back(threshold_edges(a, eta, use_abs));
  est.consensus = est.restart_supports.empty() ? Consensus{} : tally_supports(est.restart_supports);
}

TopologyEstimate infer_topology_from_tensor(const CorrelationTensor& tensor,
                                            const ExogenousCorrelation& rx_known,
                                            const BatchOptions& opts) {
  if (!(opts.eta >= 0.0)) throw StageError("threshold", "threshold must be non-negative");
  TopologyEstimate est;
  est.report = check_identifiability(rx_known);
  if (!est.report.full_condition_met && !est.report.partial_condition_met)
    est.warnings.push_back("identifiability conditions are not met; the estimate is not guaranteed");

  try {
    est.solve = cp_decompose_constrained(tensor, rx_known, opts.solver);
  } catch (const std::exception& e) {
    throw StageError("decomposition", e.what());
  }
  est.fit = est.solve.relative_fit;
  est.converged = est.solve.converged;
  est.warnings.insert(est.warnings.end(), est.solve.warnings.begin(), est.solve.warnings.end());

  const bool blind = rx_known.is_blind();
  auto to_mixing = [&](const Matrix& z1) {
    MixingMatrix phi(z1);
    if (blind && opts.resolve_blind_permutation) phi = resolve_permutation(phi);
    return phi;
  };

  try {
    est.phi_hat = to_mixing(est.solve.factors.z1);
    est.a_hat = recover_adjacency(est.phi_hat);
  } catch (const std::exception& e) {
    throw StageError("recovery", e.what());
  }
  if (blind) {
    for (const auto& run : est.solve.runs) {
      try {
        est.restart_adjacency.push_back(recover_adjacency(to_mixing(run.factors.z1)));
      } catch (const Error&) {
        // Restarts that land on a singular factor do not vote.
      }
    }
  }
  apply_threshold(est, opts.eta, opts.use_abs);
  return est;
}

TopologyEstimate infer_topology_batch(const NodalSeries& y, const std::vector<Index>& boundaries,
                                      const ExogenousCorrelation& rx_known,
                                      const BatchOptions& opts) {
  if (boundaries.size() < 3) throw StageError("correlation", "at least two windows are required");
  if (boundaries.back() > y.samples())
    throw StageError("correlation", "windows extend past the end of the series");
  CorrelationTensor tensor;
  try {
    tensor = tensor_from_series(y, boundaries);
  } catch (const std::exception& e) {
    throw StageError("correlation", e.what());
  }
  return infer_topology_from_tensor(tensor, rx_known, opts);
}

std::vector<double> eta_grid(const AdjacencyMatrix& a_hat, bool use_abs, int points) {
  const Matrix& a = a_hat.matrix();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) {
      if (i == j) continue;
      const double v = use_abs ? std::abs(a(i, j)) : a(i, j);
      if (v > 0.0) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  std::vector<double> grid;
  if (!(hi > 0.0) || points < 1) return grid;
  // Thresholds compare with '>', so the lowest point sits just below the smallest entry.
  lo = std::nextafter(lo, 0.0);
  if (points == 1) return {lo};
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int p = 0; p < points; ++p)
    grid.push_back(std::exp(llo + (lhi - llo) * static_cast<double>(p) / (points - 1)));
  return grid;
}

EtaChoice oracle_eta(const EdgeIndicator& truth, const AdjacencyMatrix& a_hat, bool use_abs) {
  EtaChoice best;
  const auto grid = eta_grid(a_hat, use_abs);
  if (grid.empty()) {
    best.eier = eier(truth, threshold_edges(a_hat, 0.0, use_abs));
    return best;
  }
  best.eier = std::numeric_limits<double>::infinity();
  for (double eta : grid) {
    const double e = eier(truth, threshold_edges(a_hat, eta, use_abs));
    if (e < best.eier) {
      best.eier = e;
      best.eta = eta;
    }
  }
  return best;
}

}  // namespace tensortopo
