#include "tensortopo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <thread>

#include "tensortopo/rng.hpp"

namespace tensortopo {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double mean_of_finite(const std::vector<double>& v) {
  double s = 0.0;
  int n = 0;
  for (double x : v)
    if (std::isfinite(x)) {
      s += x;
      ++n;
    }
  return n ? s / n : kNaN;
}

Matrix window_sample_powers(const NodalSeries& x, const std::vector<Index>& boundaries) {
  const Index m = static_cast<Index>(boundaries.size()) - 1;
  Matrix out(m, x.n());
  for (Index w = 0; w < m; ++w) {
    const auto block = x.values().middleRows(boundaries[w], boundaries[w + 1] - boundaries[w]);
    out.row(w) = block.array().square().colwise().mean();
  }
  return out;
}

void run_batch(const ExperimentConfig& cfg, const SimulatedTrial& sim, std::uint64_t trial_seed,
               TrialResult& r) {
  BatchOptions o;
  o.eta = cfg.eta_policy == EtaPolicy::kFixed ? cfg.eta : 0.0;
  o.use_abs = cfg.eta_abs;
  o.resolve_blind_permutation = cfg.resolve_blind_permutation;
  o.solver = cfg.solver;
  o.solver.rng_seed = derive_seed(trial_seed, 7);
  TopologyEstimate est = infer_topology_from_tensor(sim.tensor, sim.known, o);
  if (cfg.eta_policy != EtaPolicy::kFixed)
    apply_threshold(est, oracle_eta(sim.graph.s, est.a_hat, cfg.eta_abs).eta, cfg.eta_abs);
  r.a_hat = est.a_hat;
  r.eta = est.eta;
  r.eier = eier(sim.graph.s, est.s_hat);
  r.emse = emse(sim.graph.a, est.a_hat);
  r.fit = est.fit;
  r.converged = est.converged;
  r.sweeps = est.solve.sweeps;
  for (const auto& run : est.solve.runs)
    r.max_objective_increase = std::max(r.max_objective_increase, max_relative_increase(run));
  r.consensus_votes = est.consensus.votes;
}

void run_tracking(const ExperimentConfig& cfg, const SimulatedTrial& sim, TrialResult& r) {
  const Index m_windows = sim.plan.window_count();
  const Matrix& rho = sim.known.values();
  OnlineTracker tracker(sim.y.n(), cfg.track.beta, 0.0, cfg.eta_abs, cfg.track.a);
  std::vector<std::optional<AdjacencyMatrix>> estimates;
  for (Index w = 0; w < m_windows; ++w) {
    const Matrix rw = sample_correlation(sim.y, sim.plan.boundaries[w], sim.plan.boundaries[w + 1]);
    TrackedWindow tw = tracker.push(rw, rho.row(w).transpose());
    estimates.push_back(tw.recovered ? std::optional(tw.estimate.a_hat) : std::nullopt);
  }
  auto truth_at = [&](Index w) -> const AdjacencyMatrix& {
    return sim.topology[static_cast<std::size_t>(w + 1)];
  };

  double global_eta = cfg.eta;
  if (cfg.eta_policy == EtaPolicy::kOracleGlobal) {
    std::vector<double> grid;
    for (const auto& e : estimates)
      if (e) {
        const auto g = eta_grid(*e, cfg.eta_abs);
        grid.insert(grid.end(), g.begin(), g.end());
      }
    std::sort(grid.begin(), grid.end());
    double best = std::numeric_limits<double>::infinity();
    for (double eta : grid) {
      double total = 0.0;
      for (Index w = 0; w < m_windows; ++w) {
        const auto& e = estimates[static_cast<std::size_t>(w)];
        if (e) total += eier(truth_at(w).support(), threshold_edges(*e, eta, cfg.eta_abs));
      }
      if (total < best) {
        best = total;
        global_eta = eta;
      }
    }
  }
  for (Index w = 0; w < m_windows; ++w) {
    const auto& e = estimates[static_cast<std::size_t>(w)];
    if (!e) {
      r.eier_curve.push_back(kNaN);
      r.emse_curve.push_back(kNaN);
      continue;
    }
    const EdgeIndicator truth = truth_at(w).support();
    double eta = global_eta;
    if (cfg.eta_policy == EtaPolicy::kOracleTrial) eta = oracle_eta(truth, *e, cfg.eta_abs).eta;
    r.eier_curve.push_back(eier(truth, threshold_edges(*e, eta, cfg.eta_abs)));
    r.emse_curve.push_back(emse(truth_at(w), *e));
  }
  r.eta = cfg.eta_policy == EtaPolicy::kOracleTrial ? kNaN : global_eta;
  r.eier = mean_of_finite(r.eier_curve);
  r.emse = mean_of_finite(r.emse_curve);
  r.converged = true;
}

// Chooses one threshold per (series, x) group that minimises the group's mean EIER.
void apply_global_oracle(std::vector<TrialResult>& results) {
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      const auto& a = results[g.front()];
      return a.series == results[i].series && (a.x == results[i].x || (std::isnan(a.x) && std::isnan(results[i].x)));
    });
    if (it == groups.end())
      groups.push_back({i});
    else
      it->push_back(i);
  }
  for (const auto& g : groups) {
    std::vector<double> grid;
    for (std::size_t i : g)
      if (results[i].ok && results[i].a_hat.n() > 0) {
        const auto e = eta_grid(results[i].a_hat, false);
        grid.insert(grid.end(), e.begin(), e.end());
      }
    if (grid.empty()) continue;
    std::sort(grid.begin(), grid.end());
    double best = std::numeric_limits<double>::infinity();
    double best_eta = grid.front();
    for (double eta : grid) {
      double total = 0.0;
      for (std::size_t i : g)
        if (results[i].ok && results[i].a_hat.n() > 0)
          total += eier(results[i].truth, threshold_edges(results[i].a_hat, eta));
      if (total < best) {
        best = total;
        best_eta = eta;
      }
    }
    for (std::size_t i : g)
      if (results[i].ok && results[i].a_hat.n() > 0) {
        results[i].eta = best_eta;
        results[i].eier = eier(results[i].truth, threshold_edges(results[i].a_hat, best_eta));
      }
  }
}

ExperimentReport run_real_data(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.config = cfg;
  rep.eta_label = "fixed";
  const auto t0 = Clock::now();
  const IngestResult in = ingest_csv(cfg.input->path, cfg.windows.l, cfg.input->center);
  rep.notes = in.warnings;
  const Index m = static_cast<Index>(in.boundaries.size()) - 1;
  if (m != cfg.windows.m)
    rep.notes.push_back("input holds " + std::to_string(m) + " windows of length " +
                        std::to_string(cfg.windows.l) + "; all are used");
  BatchOptions o;
  o.eta = cfg.eta;
  o.use_abs = cfg.eta_abs;
  o.resolve_blind_permutation = cfg.resolve_blind_permutation;
  o.solver = cfg.solver;
  o.solver.rng_seed = derive_seed(cfg.rng_seed, 7);
  TopologyEstimate est =
      infer_topology_batch(in.series, in.boundaries, ExogenousCorrelation::blind(m, in.series.n()), o);
  if (!est.restart_supports.empty()) rep.consensus = consensus_report(est.restart_supports);
  rep.real_estimate = std::move(est);
  rep.wall_time = seconds_since(t0);
  return rep;
}

Json aggregate_json(const AggregateRow& a) {
  return Json{{"series", a.series},       {"series_value", a.series_value},
              {"x", a.x},                 {"trials", a.trials},
              {"failures", a.failures},   {"eier_mean", a.eier_mean},
              {"eier_median", a.eier_median}, {"eier_q25", a.eier_q25},
              {"eier_q75", a.eier_q75},   {"success_rate", a.success_rate},
              {"emse_mean", a.emse_mean}, {"emse_median", a.emse_median},
              {"fit_median", a.fit_median}};
}

Json curve_json(const CurveRow& c) {
  return Json{{"series", c.series},         {"window", c.window},
              {"eier_mean", c.eier_mean},   {"eier_median", c.eier_median},
              {"eier_q25", c.eier_q25},     {"eier_q75", c.eier_q75},
              {"emse_mean", c.emse_mean},   {"emse_median", c.emse_median},
              {"emse_q25", c.emse_q25},     {"emse_q75", c.emse_q75}};
}

void write_csv_value(std::ostream& out, double v) {
  if (std::isfinite(v))
    out << v;
  else if (std::isnan(v))
    out << "nan";
  else
    out << (v > 0 ? "inf" : "-inf");
}

}  // namespace

SimulatedTrial simulate_trial(const ExperimentConfig& cfg, int trial) {
  const std::uint64_t ts = derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(trial));
  SimulatedTrial s;
  if (cfg.graph.kind == GraphKind::kKronecker) {
    s.graph = kronecker_graph(kronecker_seed(), cfg.graph.power, cfg.graph.weight_lo,
                              cfg.graph.weight_hi, derive_seed(ts, 1));
  } else {
    const EdgeIndicator support = erdos_renyi(cfg.graph.n, cfg.graph.p, derive_seed(ts, 1));
    s.graph = weight_edges(support, cfg.graph.weight_lo, cfg.graph.weight_hi, derive_seed(ts, 9),
                           StabilityGuard::kRescaleIfIllConditioned, 1e8);
  }
  const Index n = s.graph.a.n();
  const Index m = cfg.windows.m;
  s.gains = random_gains(n, cfg.gain_lo, cfg.gain_hi, derive_seed(ts, 2));

  Matrix variances;
  if (cfg.windows.variance == VarianceKind::kRandom) {
    variances = random_variance_profile(m, n, cfg.windows.var_lo, cfg.windows.var_hi, derive_seed(ts, 3));
  } else {
    const Matrix per_window =
        random_variance_profile(m, 1, cfg.windows.var_lo, cfg.windows.var_hi, derive_seed(ts, 3));
    variances = scalar_variance_profile(per_window.col(0), n);
  }

  Matrix rx = variances;
  if (cfg.windows.l == 0) {
    s.plan.boundaries = uniform_boundaries(m, 1);
    s.plan.variances = variances;
    const MixingMatrix phi = mixing_matrix(s.graph.a, s.gains);
    std::vector<Matrix> slices;
    for (Index w = 0; w < m; ++w) slices.push_back(analytic_correlation(phi, variances.row(w).transpose()));
    s.tensor = build_tensor(std::move(slices));
  } else {
    s.plan = uniform_plan(cfg.windows.l, variances);
    s.x = simulate_exogenous(s.plan, derive_seed(ts, 4));
    if (cfg.mode == Mode::kTrack) {
      s.topology = piecewise_topology_series(s.graph.a, cfg.track.pattern, m, derive_seed(ts, 8),
                                             cfg.track.drift);
      const std::vector<AdjacencyMatrix> per_window(s.topology.begin() + 1, s.topology.end());
      s.y = simulate_endogenous_piecewise(per_window, s.gains, s.x, s.plan.boundaries, cfg.noise_var,
                                          derive_seed(ts, 5));
    } else {
      s.y = simulate_endogenous(s.graph.a, s.gains, s.x, cfg.noise_var, derive_seed(ts, 5));
      s.tensor = tensor_from_series(s.y, s.plan.boundaries);
    }
    if (cfg.rx_source == RxSource::kSample) rx = window_sample_powers(s.x, s.plan.boundaries);
  }

  switch (cfg.mode) {
    case Mode::kBatch:
    case Mode::kTrack:
      s.known = ExogenousCorrelation::full(rx);
      break;
    case Mode::kPartial:
      s.known = random_mask(rx, cfg.miss_probability, derive_seed(ts, 6));
      break;
    case Mode::kBlind:
      s.known = ExogenousCorrelation(rx, BoolMatrix::Constant(rx.rows(), rx.cols(), false));
      break;
  }
  return s;
}

TrialResult run_trial(const ExperimentConfig& cfg, int trial) {
  const auto t0 = Clock::now();
  TrialResult r;
  r.trial = trial;
  try {
    const SimulatedTrial sim = simulate_trial(cfg, trial);
    r.truth = sim.graph.s;
    r.miss_fraction = 1.0 - static_cast<double>(sim.known.known_count()) /
                                static_cast<double>(sim.known.values().size());
    if (cfg.mode == Mode::kTrack)
      run_tracking(cfg, sim, r);
    else
      run_batch(cfg, sim, derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(trial)), r);
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  r.wall_time = seconds_since(t0);
  return r;
}

ConsensusReport consensus_report(const std::vector<EdgeIndicator>& estimates) {
  ConsensusReport rep;
  rep.consensus = tally_supports(estimates);
  rep.summary = std::to_string(rep.consensus.votes) + " out of " + std::to_string(rep.consensus.total);
  return rep;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.input) return run_real_data(cfg);
  const auto t0 = Clock::now();

  const std::vector<double> series_values = cfg.series ? cfg.series->values : std::vector<double>{kNaN};
  const std::vector<double> x_values = cfg.sweep ? cfg.sweep->values : std::vector<double>{kNaN};

  struct Job {
    ExperimentConfig cfg;
    std::string label;
    double series_value;
    double x;
    int trial;
  };
  std::vector<Job> jobs;
  for (double sv : series_values)
    for (double xv : x_values) {
      ExperimentConfig point = cfg;
      point.sweep.reset();
      point.series.reset();
      std::string label = "all";
      if (cfg.series) {
        set_parameter(point, cfg.series->key, sv);
        label = cfg.series->key + "=" + format_value(sv);
      }
      if (cfg.sweep) set_parameter(point, cfg.sweep->key, xv);
      for (int t = 0; t < cfg.trials; ++t) jobs.push_back({point, label, sv, xv, t});
    }

  std::vector<TrialResult> results(jobs.size());
  unsigned threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      TrialResult r = run_trial(job.cfg, job.trial);
      r.series = job.label;
      r.series_value = job.series_value;
      r.x = job.x;
      results[i] = std::move(r);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ExperimentReport rep;
  rep.config = cfg;
  switch (cfg.eta_policy) {
    case EtaPolicy::kFixed:
      rep.eta_label = "fixed";
      break;
    case EtaPolicy::kOracleTrial:
      rep.eta_label = cfg.mode == Mode::kTrack ? "oracle per window (evaluation only)"
                                               : "oracle per trial (evaluation only)";
      break;
    case EtaPolicy::kOracleGlobal:
      rep.eta_label = cfg.mode == Mode::kTrack ? "oracle per trial (evaluation only)"
                                               : "oracle across trials (evaluation only)";
      break;
  }
  if (cfg.eta_policy == EtaPolicy::kOracleGlobal && cfg.mode != Mode::kTrack) apply_global_oracle(results);
  rep.trials = std::move(results);
  rep.aggregates = aggregate(rep.trials);
  if (cfg.mode == Mode::kTrack) rep.curves = aggregate_curves(rep.trials);
  for (const auto& t : rep.trials)
    if (!t.ok) {
      rep.notes.push_back("some trials failed; see the error column");
      break;
    }
  rep.wall_time = seconds_since(t0);
  return rep;
}

double quantile(std::vector<double> values, double q) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }),
               values.end());
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<AggregateRow> aggregate(const std::vector<TrialResult>& trials) {
  std::vector<AggregateRow> rows;
  std::vector<std::vector<const TrialResult*>> members;
  auto same_x = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
  for (const auto& t : trials) {
    std::size_t g = 0;
    while (g < rows.size() && !(rows[g].series == t.series && same_x(rows[g].x, t.x))) ++g;
    if (g == rows.size()) {
      AggregateRow row;
      row.series = t.series;
      row.series_value = t.series_value;
      row.x = t.x;
      rows.push_back(row);
      members.emplace_back();
    }
    members[g].push_back(&t);
  }
  for (std::size_t g = 0; g < rows.size(); ++g) {
    std::vector<double> e, m, f;
    int successes = 0;
    for (const TrialResult* t : members[g]) {
      ++rows[g].trials;
      if (!t->ok) {
        ++rows[g].failures;
        continue;
      }
      e.push_back(t->eier);
      m.push_back(t->emse);
      f.push_back(t->fit);
      if (t->eier == 0.0) ++successes;
    }
    rows[g].eier_mean = mean_of_finite(e);
    rows[g].eier_median = quantile(e, 0.5);
    rows[g].eier_q25 = quantile(e, 0.25);
    rows[g].eier_q75 = quantile(e, 0.75);
    rows[g].success_rate = static_cast<double>(successes) / static_cast<double>(rows[g].trials);
    rows[g].emse_mean = mean_of_finite(m);
    rows[g].emse_median = quantile(m, 0.5);
    rows[g].fit_median = quantile(f, 0.5);
  }
  return rows;
}

std::vector<CurveRow> aggregate_curves(const std::vector<TrialResult>& trials) {
  std::vector<CurveRow> rows;
  std::vector<std::string> labels;
  for (const auto& t : trials)
    if (std::find(labels.begin(), labels.end(), t.series) == labels.end()) labels.push_back(t.series);
  for (const auto& label : labels) {
    std::size_t windows = 0;
    for (const auto& t : trials)
      if (t.series == label) windows = std::max(windows, t.eier_curve.size());
    for (std::size_t w = 0; w < windows; ++w) {
      std::vector<double> e, m;
      for (const auto& t : trials) {
        if (t.series != label || !t.ok || w >= t.eier_curve.size()) continue;
        e.push_back(t.eier_curve[w]);
        m.push_back(t.emse_curve[w]);
      }
      CurveRow row;
      row.series = label;
      row.window = static_cast<Index>(w) + 1;
      row.eier_mean = mean_of_finite(e);
      row.eier_median = quantile(e, 0.5);
      row.eier_q25 = quantile(e, 0.25);
      row.eier_q75 = quantile(e, 0.75);
      row.emse_mean = mean_of_finite(m);
      row.emse_median = quantile(m, 0.5);
      row.emse_q25 = quantile(m, 0.25);
      row.emse_q75 = quantile(m, 0.75);
      rows.push_back(row);
    }
  }
  return rows;
}

Json trial_to_json(const TrialResult& t, bool include_timing) {
  Json j{{"trial", t.trial},
         {"series", t.series},
         {"series_value", t.series_value},
         {"x", t.x},
         {"ok", t.ok},
         {"eier", t.eier},
         {"emse", t.emse},
         {"fit", t.fit},
         {"converged", t.converged},
         {"sweeps", t.sweeps},
         {"eta", t.eta},
         {"miss_fraction", t.miss_fraction},
         {"max_objective_increase", t.max_objective_increase},
         {"consensus_votes", t.consensus_votes}};
  if (!t.ok) j["error"] = t.error;
  if (!t.eier_curve.empty()) {
    j["eier_curve"] = t.eier_curve;
    j["emse_curve"] = t.emse_curve;
  }
  if (include_timing) j["wall_time"] = t.wall_time;
  return j;
}

Json report_to_json(const ExperimentReport& r, bool include_timing) {
  Json j{{"config", config_to_json(r.config)}, {"eta_selection", r.eta_label}, {"notes", r.notes}};
  Json trials = Json::array();
  for (const auto& t : r.trials) trials.push_back(trial_to_json(t, include_timing));
  j["trials"] = trials;
  Json agg = Json::array();
  for (const auto& a : r.aggregates) agg.push_back(aggregate_json(a));
  j["aggregates"] = agg;
  if (!r.curves.empty()) {
    Json curves = Json::array();
    for (const auto& c : r.curves) curves.push_back(curve_json(c));
    j["curves"] = curves;
  }
  if (r.real_estimate) j["estimate"] = estimate_to_json(*r.real_estimate);
  if (r.consensus) {
    j["consensus"] = consensus_to_json(r.consensus->consensus);
    j["consensus"]["summary"] = r.consensus->summary;
  }
  if (include_timing) j["wall_time"] = r.wall_time;
  return j;
}

void write_trials_csv(const std::filesystem::path& path, const ExperimentReport& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "trial,series,series_value,x,ok,eier,emse,fit,converged,sweeps,eta,miss_fraction,"
         "max_objective_increase,consensus_votes,error\n";
  for (const auto& t : r.trials) {
    out << t.trial << ',' << t.series << ',';
    write_csv_value(out, t.series_value);
    out << ',';
    write_csv_value(out, t.x);
    out << ',' << (t.ok ? 1 : 0) << ',';
    for (double v : {t.eier, t.emse, t.fit}) {
      write_csv_value(out, v);
      out << ',';
    }
    out << (t.converged ? 1 : 0) << ',' << t.sweeps << ',';
    for (double v : {t.eta, t.miss_fraction, t.max_objective_increase}) {
      write_csv_value(out, v);
      out << ',';
    }
    std::string err = t.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << t.consensus_votes << ',' << err << '\n';
  }
}

void write_plot_csv(const std::filesystem::path& path, const ExperimentReport& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(10);
  if (!r.curves.empty()) {
    out << "series,window,eier_mean,eier_median,eier_q25,eier_q75,emse_mean,emse_median,emse_q25,"
           "emse_q75\n";
    for (const auto& c : r.curves) {
      out << c.series << ',' << c.window;
      for (double v : {c.eier_mean, c.eier_median, c.eier_q25, c.eier_q75, c.emse_mean,
                       c.emse_median, c.emse_q25, c.emse_q75}) {
        out << ',';
        write_csv_value(out, v);
      }
      out << '\n';
    }
    return;
  }
  const std::string xname = r.config.sweep ? r.config.sweep->key : "x";
  out << "series," << xname
      << ",trials,failures,eier_mean,eier_median,eier_q25,eier_q75,success_rate,emse_mean,"
         "emse_median\n";
  for (const auto& a : r.aggregates) {
    out << a.series << ',';
    write_csv_value(out, a.x);
    out << ',' << a.trials << ',' << a.failures;
    for (double v : {a.eier_mean, a.eier_median, a.eier_q25, a.eier_q75, a.success_rate,
                     a.emse_mean, a.emse_median}) {
      out << ',';
      write_csv_value(out, v);
    }
    out << '\n';
  }
}

IngestResult ingest_series(const NodalSeries& raw, Index window_length, bool center) {
  if (window_length < 1) throw std::invalid_argument("window length must be >= 1");
  const Index t = raw.samples();
  const Index m = t / window_length;
  if (m < 1)
    throw std::invalid_argument("series has " + std::to_string(t) +
                                " samples, fewer than one window of " +
                                std::to_string(window_length));
  IngestResult out;
  out.dropped = t - m * window_length;
  Matrix values = raw.values().topRows(m * window_length);
  if (center) values.rowwise() -= values.colwise().mean();
  out.series = NodalSeries(std::move(values), raw.names());
  out.boundaries = uniform_boundaries(m, window_length);
  if (out.dropped > 0)
    out.warnings.push_back(std::to_string(out.dropped) +
                           " trailing samples do not fill a window and were dropped");
  return out;
}

IngestResult ingest_csv(const std::filesystem::path& path, Index window_length, bool center) {
  return ingest_series(read_series_csv(path), window_length, center);
}

}  // namespace tensortopo
