#include "tensortopo/tracker.hpp"

#include <cmath>
#include <stdexcept>

#include "tensortopo/cptensor.hpp"
#include "tensortopo/graphgen.hpp"

namespace tensortopo {

TrackerState tracker_init(Index n, double beta, double a) {
  if (n < 1) throw std::invalid_argument("tracker needs at least one node");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("forgetting factor must lie in (0, 1]");
  if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("prior scale a must be positive");
  TrackerState s;
  s.n = n;
  s.beta = beta;
  s.q = Matrix::Zero(n * n, n);
  s.w = a * Matrix::Identity(n, n);
  s.h = Matrix::Zero(n * n, n);
  return s;
}

WindowObservation make_observation(const Matrix& r, const Vector& rho) {
  if (r.rows() != r.cols() || r.rows() != rho.size())
    throw std::invalid_argument("observation: dimension mismatch");
  if (!r.allFinite() || !rho.allFinite()) throw std::invalid_argument("observation: non-finite values");
  if ((rho.array() <= 0.0).any()) throw std::invalid_argument("observation: rho must be positive");
  const Matrix sym = 0.5 * (r + r.transpose());
  return {Eigen::Map<const Vector>(sym.data(), sym.size()), rho};
}

TrackerState tracker_update(TrackerState state, const WindowObservation& obs) {
  const Index n = state.n;
  if (obs.r_bar.size() != n * n || obs.rho.size() != n)
    throw std::invalid_argument("tracker_update: dimension mismatch");
  if (!obs.r_bar.allFinite() || !obs.rho.allFinite())
    throw std::invalid_argument("tracker_update: non-finite observation");

  const double beta = state.beta;
  state.q = beta * state.q + obs.r_bar * obs.rho.transpose();
  const Vector wr = state.w * obs.rho;
  const double denom = beta + obs.rho.dot(wr);
  state.w = (state.w - (wr * wr.transpose()) / denom) / beta;
  state.w = 0.5 * (state.w + state.w.transpose());
  state.h.noalias() = state.q * state.w;
  ++state.window_index;
  return state;
}

EigenPair power_iteration(const Matrix& m, double tol, int max_iterations) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw std::invalid_argument("power_iteration: matrix must be square and non-empty");
  EigenPair out;
  Index start = 0;
  m.diagonal().cwiseAbs().maxCoeff(&start);
  Vector v = m.col(start);
  if (!(v.norm() > 0.0)) {
    v = Vector::Zero(m.rows());
    v(start) = 1.0;
  }
  v.normalize();
  for (int it = 0; it < max_iterations; ++it) {
    Vector next = m * v;
    const double norm = next.norm();
    out.iterations = it + 1;
    if (!(norm > 0.0)) break;
    next /= norm;
    if (next.dot(v) < 0.0) next = -next;
    const double change = (next - v).norm();
    v = std::move(next);
    if (change < tol) break;
  }
  out.vector = v;
  out.value = v.dot(m * v);
  return out;
}

MixingExtraction extract_mixing(const TrackerState& state, double residual_limit) {
  const Index n = state.n;
  if (state.window_index < 1) throw std::invalid_argument("extract_mixing: tracker has no updates");
  MixingExtraction out;
  Matrix phi(n, n);
  for (Index i = 0; i < n; ++i) {
    const Matrix hbar = Eigen::Map<const Matrix>(state.h.col(i).data(), n, n);
    const Matrix sym = 0.5 * (hbar + hbar.transpose());
    const EigenPair ep = power_iteration(sym);
    Vector alpha = std::sqrt(std::abs(ep.value)) * ep.vector;
    Index pos = 0;
    alpha.cwiseAbs().maxCoeff(&pos);
    if (alpha(pos) < 0.0) alpha = -alpha;
    phi.col(i) = alpha;

    ColumnDiagnostic d;
    d.eigenvalue = ep.value;
    const double norm = sym.norm();
    d.residual = norm > 0.0 ? (sym - ep.value * ep.vector * ep.vector.transpose()).norm() / norm : 1.0;
    d.rank_one = ep.value > 0.0 && d.residual <= residual_limit;
    out.all_rank_one = out.all_rank_one && d.rank_one;
    out.columns.push_back(d);
  }
  out.phi = MixingMatrix(std::move(phi));
  return out;
}

OnlineTracker::OnlineTracker(Index n, double beta, double eta, bool use_abs, double a)
    : state_(tracker_init(n, beta, a)), eta_(eta), use_abs_(use_abs) {
  if (!(eta >= 0.0)) throw std::invalid_argument("threshold must be non-negative");
}

TrackedWindow OnlineTracker::push(const Matrix& window_correlation, const Vector& rho) {
  state_ = tracker_update(std::move(state_), make_observation(window_correlation, rho));
  TrackedWindow out;
  out.window = state_.window_index;
  out.extraction = extract_mixing(state_);
  out.estimate.phi_hat = out.extraction.phi;
  out.estimate.eta = eta_;
  out.estimate.use_abs = use_abs_;
  try {
    out.estimate.a_hat = recover_adjacency(out.extraction.phi);
    apply_threshold(out.estimate, eta_, use_abs_);
    out.recovered = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  if (!out.extraction.all_rank_one)
    out.estimate.warnings.push_back("some columns of the tracked estimate are not rank one");
  return out;
}

std::vector<TrackedWindow> track_topology(const NodalSeries& y,
                                          const std::vector<Index>& boundaries, const Matrix& rho,
                                          double beta, double eta, bool use_abs, double a) {
  if (boundaries.size() < 2) throw std::invalid_argument("track_topology: no windows");
  if (boundaries.back() > y.samples())
    throw std::invalid_argument("track_topology: windows extend past the series");
  const Index m_windows = static_cast<Index>(boundaries.size()) - 1;
  if (rho.rows() != m_windows || rho.cols() != y.n())
    throw std::invalid_argument("track_topology: need one rho row per window");
  OnlineTracker tracker(y.n(), beta, eta, use_abs, a);
  std::vector<TrackedWindow> out;
  out.reserve(static_cast<std::size_t>(m_windows));
  for (Index m = 0; m < m_windows; ++m)
    out.push_back(tracker.push(sample_correlation(y, boundaries[m], boundaries[m + 1]),
                               rho.row(m).transpose()));
  return out;
}

}  // namespace tensortopo
