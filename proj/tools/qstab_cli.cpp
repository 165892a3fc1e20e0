// qstab: analysis, synthesis and simulation of measured quantum systems
// driven towards a target subspace.
//
//   qstab analyze    --config model.json
//   qstab synthesize --config model.json --out results/
//   qstab simulate   --config model.json --seed 7 --trajectories 3
//   qstab ensemble   --config model.json --trajectories 1000
//   qstab report     --config model.json
//
// Exit codes: 0 success, 2 configuration or assumption error, 3 numerical
// abort, 4 verdict failure (not stabilizable, failed verification or
// thresholds missed), 1 anything else.

#include "qstab/diagnostics.hpp"
#include "qstab/io.hpp"
#include "qstab/synthesis.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using nlohmann::json;
using namespace qstab;

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kAbort = 3, kVerdict = 4 };

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trajectories;
  std::optional<double> dt;
  std::optional<double> gamma;
  bool quiet = false;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.out) cfg.output.directory = *o.out;
  if (o.seed) cfg.run.base_seed = *o.seed;
  if (o.trajectories) {
    if (*o.trajectories == 0) throw ConfigError("--trajectories", "must be positive");
    cfg.run.trajectories = *o.trajectories;
  }
  if (o.dt) {
    if (!(*o.dt > 0.0) || *o.dt > cfg.run.horizon) throw ConfigError("--dt", "must lie in (0, horizon]");
    cfg.run.dt = *o.dt;
  }
  if (o.gamma) {
    if (!(*o.gamma > 0.0 && *o.gamma < 1.0)) throw ConfigError("--gamma", "must lie in (0, 1)");
    cfg.controller.gamma = *o.gamma;
  }
  return cfg;
}

std::string path_in(const ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.output.directory) / (cfg.output.prefix + "_" + name)).string();
}

void emit(const Options& o, const json& doc) {
  if (!o.quiet) std::cout << doc.dump(2) << '\n';
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    const std::vector<std::uint64_t>& seeds,
                    std::vector<std::string> files) {
  const std::string path = path_in(cfg, "manifest.json");
  write_text_file(path, make_manifest(cfg, command, seeds, files).dump(2) + "\n");
}

int cmd_analyze(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const ControlModel& m = cfg.model;
  json doc;
  const auto cls = openloop_stabilizable(m, m.decomp);
  doc["classification"] = to_string(cls);
  if (cfg.analysis.check_invariance) {
    doc["invariance_u0"] = to_json(check_invariant(m, m.decomp, 0.0));
    doc["invariance_u_bar"] = to_json(check_invariant(m, m.decomp, cfg.analysis.u_bar));
    doc["R_not_invariant"] = check_R_not_invariant(m, m.decomp, 0.0);
    doc["deterministic_invariance"] = deterministic_invariance(m, m.decomp);
  }
  doc["u_bar"] = cfg.analysis.u_bar;
  doc["stationary_support"] = to_json(stationary_support(m, cfg.analysis.u_bar, m.decomp));
  const auto violations = design_assumption_violations(m);
  doc["design_assumptions"] = {{"satisfied", violations.empty()}, {"violations", violations}};
  write_text_file(path_in(cfg, "analyze.json"), doc.dump(2) + "\n");
  emit(o, doc);
  return kOk;
}

int cmd_synthesize(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const ControlModel& m = cfg.model;
  const auto cls = openloop_stabilizable(m, m.decomp);
  json doc;
  doc["classification"] = to_string(cls);
  Operator h;
  if (cls == Stabilizability::Stabilizable) {
    const OpenLoopSynthesis syn = synthesize_open_loop(m, m.decomp);
    h = syn.hamiltonian;
    doc["mode"] = "open-loop";
    doc["invariance_term"] = matrix_to_json(syn.invariance_term);
    doc["trace"] = to_json(syn.trace);
    if (h.norm() == 0.0) doc["note"] = "already stabilizable, no correction needed";
  } else if (cls == Stabilizability::NeedsFeedback) {
    const SynthesisTrace trace = design_procedure(m);
    h = trace.H_c;
    doc["mode"] = "feedback";
    doc["trace"] = to_json(trace);
  } else {
    throw NotStabilizableError(cls);
  }
  doc["H_c"] = matrix_to_json(h);
  bool verified = true;
  if (cfg.analysis.verify) {
    const double u_bar = cls == Stabilizability::Stabilizable ? 0.0 : cfg.analysis.u_bar;
    const SynthesisVerification v = verify_synthesis(m, h, u_bar);
    doc["verification"] = to_json(v);
    doc["verification"]["u_bar"] = u_bar;
    verified = v.verified;
  }
  write_text_file(path_in(cfg, "synthesis.json"), doc.dump(2) + "\n");
  emit(o, doc);
  return verified ? kOk : kVerdict;
}

ControlModel simulation_model(const ExperimentConfig& cfg, json& info) {
  if (!cfg.run.synthesize) return cfg.model;
  const SynthesisChoice c = choose_synthesis(cfg.model, cfg.controller);
  info["synthesis"] = {{"classification", to_string(c.classification)},
                       {"applied", c.applied},
                       {"note", c.note},
                       {"hamiltonian", matrix_to_json(c.hamiltonian)}};
  return cfg.model.with_extra_hamiltonian(c.hamiltonian);
}

QuantumState initial_state(const ExperimentConfig& cfg) {
  return cfg.run.rho0 ? *cfg.run.rho0 : mixed_R_state(cfg.model.decomp);
}

int cmd_simulate(const Options& o) {
  ExperimentConfig cfg = load(o);
  if (!o.trajectories) cfg.run.trajectories = 1;
  json doc;
  const ControlModel model = simulation_model(cfg, doc);
  const QuantumState rho0 = initial_state(cfg);
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> files;
  json runs = json::array();
  for (std::size_t i = 0; i < cfg.run.trajectories; ++i) {
    const std::uint64_t seed = cfg.run.base_seed + i;
    const Trajectory tr = simulate_sme(model, rho0, make_controller(cfg.controller, model),
                                       cfg.run.horizon, cfg.run.dt, seed,
                                       cfg.run.ensemble.sample_every);
    std::ostringstream csv;
    write_trajectory_csv(csv, tr);
    const std::string path = path_in(cfg, "traj_" + std::to_string(seed) + ".csv");
    write_text_file(path, csv.str());
    seeds.push_back(seed);
    files.push_back(std::filesystem::path(path).filename().string());
    runs.push_back({{"seed", seed},
                    {"file", files.back()},
                    {"rows", tr.size()},
                    {"final_V1", tr.v1.back()},
                    {"final_fidelity", tr.fidelity.back()},
                    {"max_trace_drift", tr.max_trace_drift}});
  }
  write_manifest(cfg, "simulate", seeds, files);
  doc["trajectories"] = std::move(runs);
  emit(o, doc);
  return kOk;
}

int cmd_ensemble(const Options& o) {
  const ExperimentConfig cfg = load(o);
  json doc;
  const ControlModel model = simulation_model(cfg, doc);
  const EnsembleStats stats =
      run_ensemble(model, initial_state(cfg), cfg.controller, cfg.run.trajectories,
                   cfg.run.horizon, cfg.run.dt, cfg.run.base_seed, cfg.run.ensemble);
  std::ostringstream csv;
  write_ensemble_csv(csv, stats);
  const std::string csv_path = path_in(cfg, "ensemble.csv");
  write_text_file(csv_path, csv.str());
  doc["ensemble"] = to_json(stats);
  write_text_file(path_in(cfg, "ensemble.json"), doc.dump(2) + "\n");
  write_manifest(cfg, "ensemble", {cfg.run.base_seed},
                 {std::filesystem::path(csv_path).filename().string(),
                  cfg.output.prefix + "_ensemble.json"});
  emit(o, doc);
  return kOk;
}

int cmd_report(const Options& o) {
  const ExperimentConfig cfg = load(o);
  RunConfig run = cfg.run;
  const StabilizationVerdict v = stabilization_report(cfg.model, cfg.controller, run);
  const json doc = to_json(v);
  write_text_file(path_in(cfg, "verdict.json"), doc.dump(2) + "\n");
  emit(o, doc);
  return v.pass ? kOk : kVerdict;
}

int fail(int code, const std::string& kind, const std::string& what) {
  std::cerr << "qstab: " << kind << ": " << what << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stabilization analysis and simulation for monitored quantum systems"};
  app.require_subcommand(1);
  Options opts;

  auto add_common = [&opts](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Experiment configuration (JSON)")->required();
    sub->add_option("--out", opts.out, "Output directory (overrides the config)");
    sub->add_option("--seed", opts.seed, "Base seed (overrides the config)");
    sub->add_option("--trajectories", opts.trajectories, "Number of trajectories");
    sub->add_option("--dt", opts.dt, "Integrator time step");
    sub->add_option("--gamma", opts.gamma, "Switching threshold in (0, 1)");
    sub->add_flag("--quiet", opts.quiet, "Do not print the result document");
  };

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"analyze", "Invariance, stabilizability and stationary-state analysis", cmd_analyze},
      {"synthesize", "Synthesize a stabilizing Hamiltonian correction", cmd_synthesize},
      {"simulate", "Simulate trajectories and export CSV", cmd_simulate},
      {"ensemble", "Run an ensemble and export statistics", cmd_ensemble},
      {"report", "End-to-end stabilization verdict", cmd_report},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      return cmd->run(opts);
    } catch (const ConfigError& e) {
      return fail(kConfig, "configuration error", e.what());
    } catch (const AssumptionError& e) {
      return fail(kConfig, "assumption error", e.what());
    } catch (const NotStabilizableError& e) {
      return fail(kVerdict, "not stabilizable", e.what());
    } catch (const NumericalAbort& e) {
      return fail(kAbort, "numerical abort", e.what());
    } catch (const DegenerateStateError& e) {
      return fail(kAbort, "numerical abort", e.what());
    } catch (const std::exception& e) {
      return fail(kOther, "error", e.what());
    }
  }
  return kOther;
}
