// tensortopo: simulate, infer, track, run experiments and ingest real data.
//
// Exit codes: 0 success, 1 configuration / usage / input error, 2 runtime failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tensortopo/config.hpp"
#include "tensortopo/experiment.hpp"
#include "tensortopo/io.hpp"
#include "tensortopo/topology.hpp"
#include "tensortopo/tracker.hpp"

namespace fs = std::filesystem;
using namespace tensortopo;

namespace {

struct WindowArgs {
  Index window_length = 0;
  std::string boundaries_path;
  bool no_center = false;
};

void add_window_options(CLI::App* cmd, WindowArgs& w) {
  cmd->add_option("-L,--window-length", w.window_length, "samples per window");
  cmd->add_option("--boundaries", w.boundaries_path,
                  "JSON array of window boundaries (first 0, last <= samples)")
      ->check(CLI::ExistingFile);
  cmd->add_flag("--no-center", w.no_center, "keep column means");
}

// Series plus window boundaries from either a fixed L or an explicit boundary file.
IngestResult load_windowed(const std::string& path, const WindowArgs& w) {
  if (w.boundaries_path.empty()) {
    if (w.window_length < 1) throw ConfigError("give --window-length or --boundaries");
    return ingest_csv(path, w.window_length, !w.no_center);
  }
  const Json j = read_json(w.boundaries_path);
  if (!j.is_array()) throw ConfigError("--boundaries must hold a JSON array");
  NodalSeries raw = read_series_csv(path);
  IngestResult out;
  out.boundaries = j.get<std::vector<Index>>();
  if (out.boundaries.size() < 2 || out.boundaries.front() != 0 ||
      !std::is_sorted(out.boundaries.begin(), out.boundaries.end()) ||
      std::adjacent_find(out.boundaries.begin(), out.boundaries.end()) != out.boundaries.end() ||
      out.boundaries.back() > raw.samples())
    throw ConfigError("boundaries must increase strictly from 0 and stay within the series");
  out.dropped = raw.samples() - out.boundaries.back();
  Matrix values = raw.values().topRows(out.boundaries.back());
  if (!w.no_center) values.rowwise() -= values.colwise().mean();
  out.series = NodalSeries(std::move(values), raw.names());
  if (out.dropped > 0)
    out.warnings.push_back(std::to_string(out.dropped) + " trailing samples were dropped");
  return out;
}

// M x N sidecar of exogenous powers; nan cells are unknown.
ExogenousCorrelation load_rho(const std::string& path, Index m, Index n) {
  if (path.empty()) return ExogenousCorrelation::blind(m, n);
  Matrix r = read_matrix_csv(path);
  if (r.rows() != m || r.cols() != n)
    throw ConfigError("rho file must be " + std::to_string(m) + " x " + std::to_string(n) +
                      ", got " + std::to_string(r.rows()) + " x " + std::to_string(r.cols()));
  BoolMatrix mask = r.array().isFinite();
  r = mask.select(r, Matrix::Zero(m, n));
  return ExogenousCorrelation(std::move(r), std::move(mask));
}

void emit(const Json& j, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << j.dump(2) << '\n';
  else
    write_json(out, j);
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directed network topology inference from windowed correlation tensors"};
  app.require_subcommand(1);

  // simulate
  std::string sim_config = "fig4a";
  std::vector<std::string> sim_set;
  int sim_trial = 0;
  std::string sim_out = "sim";
  auto* sim = app.add_subcommand("simulate", "draw one trial and write its data files");
  sim->add_option("config", sim_config, "preset name or JSON config file");
  sim->add_option("--set", sim_set, "override, e.g. windows.l=500");
  sim->add_option("--trial", sim_trial, "trial index (selects the seed stream)");
  sim->add_option("-o,--out", sim_out, "output directory");

  // infer
  std::string inf_series, inf_tensor, inf_rho, inf_out;
  WindowArgs inf_w;
  double inf_eta = 0.0;
  bool inf_abs = false, inf_no_resolve = false;
  int inf_restarts = 0, inf_max_sweeps = 500;
  std::uint64_t inf_seed = 1;
  std::string inf_method = "lm";
  auto* inf = app.add_subcommand("infer", "batch topology inference from a series or a tensor");
  auto* inf_src = inf->add_option("--series", inf_series, "time-by-node CSV")->check(CLI::ExistingFile);
  inf->add_option("--tensor", inf_tensor, "tensor directory written by simulate or ingest")
      ->check(CLI::ExistingDirectory)
      ->excludes(inf_src);
  add_window_options(inf, inf_w);
  inf->add_option("--rho", inf_rho, "M x N exogenous powers CSV, nan for unknown (default: none known)")
      ->check(CLI::ExistingFile);
  inf->add_option("--eta", inf_eta, "edge threshold");
  inf->add_flag("--abs", inf_abs, "threshold |a_ij| instead of a_ij");
  inf->add_option("--restarts", inf_restarts, "random restarts (0: 10 blind, 1 otherwise)");
  inf->add_option("--max-sweeps", inf_max_sweeps, "solver sweep limit");
  inf->add_option("--seed", inf_seed, "solver seed");
  inf->add_option("--method", inf_method, "lm or als")->check(CLI::IsMember({"lm", "als"}));
  inf->add_flag("--no-resolve", inf_no_resolve, "skip blind column reordering");
  inf->add_option("-o,--out", inf_out, "JSON report path (default: stdout)");

  // track
  std::string trk_series, trk_rho, trk_out;
  WindowArgs trk_w;
  double trk_beta = 0.999, trk_eta = 0.0, trk_a = 1e5;
  bool trk_abs = false;
  auto* trk = app.add_subcommand("track", "online tracking; needs the exogenous powers of every window");
  trk->add_option("--series", trk_series, "time-by-node CSV")->required()->check(CLI::ExistingFile);
  add_window_options(trk, trk_w);
  trk->add_option("--rho", trk_rho, "M x N exogenous powers CSV");
  trk->add_option("--beta", trk_beta, "forgetting factor in (0, 1]");
  trk->add_option("--eta", trk_eta, "edge threshold");
  trk->add_flag("--abs", trk_abs, "threshold |a_ij| instead of a_ij");
  trk->add_option("--init-scale", trk_a, "initial W = a I");
  trk->add_option("-o,--out", trk_out, "JSON-lines output path (default: stdout)");

  // experiment
  std::string exp_config;
  std::vector<std::string> exp_set;
  std::string exp_out, exp_plot, exp_trials;
  bool exp_timing = false;
  auto* exp = app.add_subcommand("experiment", "run a preset or JSON config");
  exp->add_option("config", exp_config, "preset name or JSON config file")->required();
  exp->add_option("--set", exp_set, "override, e.g. trials=20");
  exp->add_option("-o,--out", exp_out, "JSON report path (default: stdout)");
  exp->add_option("--plot", exp_plot, "plot-data CSV path");
  exp->add_option("--trials-csv", exp_trials, "per-trial CSV path");
  exp->add_flag("--timing", exp_timing, "include wall times in the report");
  exp->add_flag_callback("--list", [] {
    for (const auto& p : preset_names()) std::cout << p << '\n';
    std::exit(0);
  }, "list presets and exit");

  // ingest
  std::string ing_input, ing_out = "ingested";
  WindowArgs ing_w;
  auto* ing = app.add_subcommand("ingest", "centre and window a CSV, write the correlation tensor");
  ing->add_option("input", ing_input, "time-by-node CSV")->required()->check(CLI::ExistingFile);
  add_window_options(ing, ing_w);
  ing->add_option("-o,--out", ing_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*sim) {
      const ExperimentConfig cfg = load_config(sim_config, sim_set);
      validate(cfg);
      if (cfg.input) throw ConfigError("simulate needs a synthetic config");
      const SimulatedTrial t = simulate_trial(cfg, sim_trial);
      const fs::path dir = sim_out;
      fs::create_directories(dir);
      write_adjacency_csv(dir / "adjacency.csv", t.graph.a);
      write_indicator_csv(dir / "support.csv", t.graph.s);
      write_matrix_csv(dir / "gains.csv", t.gains.diagonal().transpose());
      Matrix rho = t.known.values();
      for (Index m = 0; m < rho.rows(); ++m)
        for (Index i = 0; i < rho.cols(); ++i)
          if (!t.known.known(m, i)) rho(m, i) = std::nan("");
      write_matrix_csv(dir / "rho.csv", rho);
      if (t.y.samples() > 0) {
        write_series_csv(dir / "y.csv", t.y);
        write_series_csv(dir / "x.csv", t.x);
      }
      if (t.tensor.m() > 0) write_tensor_dir(dir / "tensor", t.tensor, t.plan.boundaries);
      if (!t.topology.empty()) {
        for (std::size_t m = 1; m < t.topology.size(); ++m) {
          char name[32];
          std::snprintf(name, sizeof name, "window_%03zu.csv", m);
          write_adjacency_csv(dir / "topology" / name, t.topology[m]);
        }
      }
      Json manifest{{"config", config_to_json(cfg)},
                    {"trial", sim_trial},
                    {"boundaries", t.plan.boundaries},
                    {"rescaled", t.graph.rescaled},
                    {"rescale_factor", t.graph.rescale_factor},
                    {"spectral_radius", t.graph.spectral_radius}};
      write_json(dir / "manifest.json", manifest);
      std::cout << "wrote " << dir.string() << '\n';
      return 0;
    }

    if (*inf) {
      BatchOptions o;
      o.eta = inf_eta;
      o.use_abs = inf_abs;
      o.resolve_blind_permutation = !inf_no_resolve;
      o.solver.restarts = inf_restarts;
      o.solver.max_sweeps = inf_max_sweeps;
      o.solver.rng_seed = inf_seed;
      o.solver.method = inf_method == "als" ? SolverMethod::kAlternating : SolverMethod::kLevenbergMarquardt;
      TopologyEstimate est;
      std::vector<std::string> notes;
      if (!inf_tensor.empty()) {
        const TensorBundle b = read_tensor_dir(inf_tensor);
        est = infer_topology_from_tensor(b.tensor, load_rho(inf_rho, b.tensor.m(), b.tensor.n()), o);
      } else {
        if (inf_series.empty()) throw ConfigError("give --series or --tensor");
        const IngestResult in = load_windowed(inf_series, inf_w);
        notes = in.warnings;
        const Index m = static_cast<Index>(in.boundaries.size()) - 1;
        est = infer_topology_batch(in.series, in.boundaries, load_rho(inf_rho, m, in.series.n()), o);
      }
      print_warnings(notes);
      print_warnings(est.warnings);
      Json j = estimate_to_json(est);
      if (!est.restart_supports.empty()) {
        const ConsensusReport c = consensus_report(est.restart_supports);
        j["consensus"] = consensus_to_json(c.consensus);
        j["consensus"]["summary"] = c.summary;
      }
      emit(j, inf_out);
      return 0;
    }

    if (*trk) {
      if (trk_rho.empty())
        throw ConfigError("track needs --rho: the exogenous powers of every window");
      if (!(trk_beta > 0.0 && trk_beta <= 1.0)) throw ConfigError("--beta must lie in (0, 1]");
      const IngestResult in = load_windowed(trk_series, trk_w);
      print_warnings(in.warnings);
      const Index m = static_cast<Index>(in.boundaries.size()) - 1;
      const ExogenousCorrelation rho = load_rho(trk_rho, m, in.series.n());
      if (!rho.is_full()) throw ConfigError("track needs every entry of --rho");
      const auto windows =
          track_topology(in.series, in.boundaries, rho.values(), trk_beta, trk_eta, trk_abs, trk_a);
      // One JSON object per line, one line per window.
      std::ofstream file;
      if (!trk_out.empty() && trk_out != "-") {
        if (fs::path(trk_out).has_parent_path()) fs::create_directories(fs::path(trk_out).parent_path());
        file.open(trk_out);
        if (!file) throw IoError("cannot write " + trk_out);
      }
      std::ostream& out = file.is_open() ? file : std::cout;
      for (const auto& w : windows) out << tracked_window_to_json(w).dump() << '\n';
      return 0;
    }

    if (*exp) {
      const ExperimentConfig cfg = load_config(exp_config, exp_set);
      const ExperimentReport rep = run_experiment(cfg);
      print_warnings(rep.notes);
      if (!exp_plot.empty()) write_plot_csv(exp_plot, rep);
      if (!exp_trials.empty()) write_trials_csv(exp_trials, rep);
      emit(report_to_json(rep, exp_timing), exp_out);
      return 0;
    }

    if (*ing) {
      const IngestResult in = load_windowed(ing_input, ing_w);
      print_warnings(in.warnings);
      const fs::path dir = ing_out;
      fs::create_directories(dir);
      write_series_csv(dir / "series.csv", in.series);
      write_tensor_dir(dir / "tensor", tensor_from_series(in.series, in.boundaries), in.boundaries);
      const Index m = static_cast<Index>(in.boundaries.size()) - 1;
      write_json(dir / "manifest.json", Json{{"samples", in.series.samples()},
                                             {"nodes", in.series.n()},
                                             {"windows", m},
                                             {"boundaries", in.boundaries},
                                             {"dropped", in.dropped},
                                             {"centered", !ing_w.no_center}});
      std::cout << m << " windows, " << in.dropped << " samples dropped\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
