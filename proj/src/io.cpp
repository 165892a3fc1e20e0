#include "qstab/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace qstab {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_state_header(std::ostream& os, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      os << ",re_" << i << j << ",im_" << i << j;
}

void write_state_row(std::ostream& os, const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      os << ',' << fmt(m(i, j).real()) << ',' << fmt(m(i, j).imag());
}

std::string join_field(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError(join_field(where, key), "required field is missing");
  }
  return obj.at(key);
}

template <typename T>
T get_or(const json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key, std::string("wrong type: ") + e.what());
  }
}

double get_number(const json& obj, const char* key, const std::string& where,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) throw ConfigError(where + "." + key, "expected a number");
  return obj.at(key).get<double>();
}

bool same_matrix(const CMatrix& a, const CMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool same_state(const std::optional<QuantumState>& a, const std::optional<QuantumState>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_matrix(a->rho(), b->rho());
}

json vector_to_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

}  // namespace

ConfigError::ConfigError(std::string field, const std::string& message)
    : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  const auto& ma = a.model;
  const auto& mb = b.model;
  if (!same_matrix(ma.H_o, mb.H_o) || !same_matrix(ma.H_f, mb.H_f)) return false;
  if (ma.L.size() != mb.L.size()) return false;
  for (std::size_t k = 0; k < ma.L.size(); ++k)
    if (!same_matrix(ma.L[k], mb.L[k])) return false;
  if (ma.eta != mb.eta || ma.decomp.dims() != mb.decomp.dims()) return false;
  if (ma.decomp.basis().has_value() != mb.decomp.basis().has_value()) return false;
  if (ma.decomp.basis() && !same_matrix(*ma.decomp.basis(), *mb.decomp.basis())) return false;
  if (!same_state(ma.rho_d, mb.rho_d)) return false;
  const auto& ra = a.run;
  const auto& rb = b.run;
  return a.controller == b.controller && ra.horizon == rb.horizon && ra.dt == rb.dt &&
         ra.trajectories == rb.trajectories && ra.base_seed == rb.base_seed &&
         same_state(ra.rho0, rb.rho0) && ra.synthesize == rb.synthesize &&
         ra.v1_threshold == rb.v1_threshold &&
         ra.fidelity_threshold == rb.fidelity_threshold &&
         ra.ensemble.sample_every == rb.ensemble.sample_every &&
         ra.ensemble.bootstrap_resamples == rb.ensemble.bootstrap_resamples &&
         a.analysis == b.analysis && a.output == b.output;
}

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const json& j, const std::string& field, Eigen::Index expected_dim) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  if (expected_dim >= 0 && n != expected_dim) {
    throw ConfigError(field, "expected " + std::to_string(expected_dim) + " rows, got " +
                                 std::to_string(n));
  }
  CMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    const std::string rf = field + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ConfigError(rf, "expected a row of " + std::to_string(n) + " entries");
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      const json& e = row[static_cast<std::size_t>(c)];
      const std::string ef = rf + "[" + std::to_string(c) + "]";
      if (e.is_number()) {
        m(r, c) = cplx(e.get<double>(), 0.0);
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
      } else {
        throw ConfigError(ef, "expected [re, im] or a real number");
      }
    }
  }
  return m;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "configuration must be a JSON object");
  ExperimentConfig cfg;

  const json& jm = require(doc, "model", "");
  const std::string mw = "model";
  const json& jdim = require(jm, "dim", mw);
  if (!jdim.is_number_integer() || jdim.get<long long>() < 1) {
    throw ConfigError("model.dim", "expected a positive integer");
  }
  const auto dim = static_cast<Eigen::Index>(jdim.get<long long>());
  Operator h_o = jm.contains("H_o") ? matrix_from_json(jm["H_o"], "model.H_o", dim)
                                    : CMatrix::Zero(dim, dim);
  Operator h_f = jm.contains("H_f") ? matrix_from_json(jm["H_f"], "model.H_f", dim)
                                    : CMatrix::Zero(dim, dim);
  std::vector<Operator> ls;
  if (jm.contains("L")) {
    if (!jm["L"].is_array()) throw ConfigError("model.L", "expected a list of matrices");
    for (std::size_t k = 0; k < jm["L"].size(); ++k) {
      ls.push_back(matrix_from_json(jm["L"][k], "model.L[" + std::to_string(k) + "]", dim));
    }
  }
  const double eta = get_number(jm, "eta", mw, 1.0);

  const json& jd = require(jm, "decomposition", mw);
  std::vector<int> dims;
  try {
    dims = require(jd, "dims", "model.decomposition").get<std::vector<int>>();
  } catch (const json::exception&) {
    throw ConfigError("model.decomposition.dims", "expected a list of integers");
  }
  std::optional<CMatrix> basis;
  if (jd.contains("basis")) basis = matrix_from_json(jd["basis"], "model.decomposition.basis", dim);
  Decomposition decomp;
  try {
    decomp = Decomposition(dims, basis);
  } catch (const Error& e) {
    throw ConfigError("model.decomposition", e.what());
  }

  std::optional<QuantumState> target;
  if (jm.contains("target")) {
    try {
      target = QuantumState(matrix_from_json(jm["target"], "model.target", dim));
      if (std::abs(target->purity() - 1.0) > 1e-9) {
        throw ConfigError("model.target", "target must be a pure state");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("model.target", e.what());
    }
  }
  try {
    cfg.model = make_model(std::move(h_o), std::move(h_f), std::move(ls), eta,
                           std::move(decomp), std::move(target));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("model", e.what());
  }

  if (doc.contains("controller")) {
    const json& jc = doc["controller"];
    const std::string cw = "controller";
    try {
      cfg.controller.type = controller_type_from_string(
          get_or<std::string>(jc, "type", cw, to_string(cfg.controller.type)));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("controller.type", e.what());
    }
    cfg.controller.gamma = get_number(jc, "gamma", cw, cfg.controller.gamma);
    cfg.controller.value = get_number(jc, "value", cw, cfg.controller.value);
    if (!(cfg.controller.gamma > 0.0 && cfg.controller.gamma < 1.0)) {
      throw ConfigError("controller.gamma", "must lie in (0, 1)");
    }
    if (cfg.controller.type != ControllerType::Constant && !cfg.model.has_target()) {
      throw ConfigError("controller.type", "feedback controllers need a target state");
    }
  }

  if (doc.contains("run")) {
    const json& jr = doc["run"];
    const std::string rw = "run";
    auto& run = cfg.run;
    run.horizon = get_number(jr, "horizon", rw, run.horizon);
    run.dt = get_number(jr, "dt", rw, run.dt);
    run.trajectories = get_or<std::size_t>(jr, "trajectories", rw, run.trajectories);
    run.base_seed = get_or<std::uint64_t>(jr, "base_seed", rw, run.base_seed);
    run.synthesize = get_or<bool>(jr, "synthesize", rw, run.synthesize);
    run.v1_threshold = get_number(jr, "v1_threshold", rw, run.v1_threshold);
    run.fidelity_threshold = get_number(jr, "fidelity_threshold", rw, run.fidelity_threshold);
    run.ensemble.sample_every =
        get_or<std::size_t>(jr, "sample_every", rw, run.ensemble.sample_every);
    run.ensemble.bootstrap_resamples =
        get_or<int>(jr, "bootstrap_resamples", rw, run.ensemble.bootstrap_resamples);
    if (jr.contains("rho0")) {
      try {
        run.rho0 = QuantumState(matrix_from_json(jr["rho0"], "run.rho0", dim));
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError("run.rho0", e.what());
      }
    }
    if (!(run.dt > 0.0)) throw ConfigError("run.dt", "must be positive");
    if (!(run.horizon >= run.dt)) throw ConfigError("run.horizon", "must be at least dt");
    if (run.trajectories == 0) throw ConfigError("run.trajectories", "must be positive");
    if (run.ensemble.sample_every == 0) throw ConfigError("run.sample_every", "must be positive");
  }

  if (doc.contains("analysis")) {
    const json& ja = doc["analysis"];
    const std::string aw = "analysis";
    auto& a = cfg.analysis;
    a.check_invariance = get_or<bool>(ja, "check_invariance", aw, a.check_invariance);
    a.synthesize = get_or<bool>(ja, "synthesize", aw, a.synthesize);
    a.verify = get_or<bool>(ja, "verify", aw, a.verify);
    a.u_bar = get_number(ja, "u_bar", aw, a.u_bar);
  }

  if (doc.contains("output")) {
    const json& jo = doc["output"];
    cfg.output.directory = get_or<std::string>(jo, "directory", "output", cfg.output.directory);
    cfg.output.prefix = get_or<std::string>(jo, "prefix", "output", cfg.output.prefix);
  }
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(e.byte > 0 ? e.byte - 1 : 0, text.size()); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("", "JSON syntax error at line " + std::to_string(line) + ", column " +
                              std::to_string(col) + ": " + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json serialize_config(const ExperimentConfig& cfg) {
  const auto& m = cfg.model;
  json jm;
  jm["dim"] = m.dim();
  jm["H_o"] = matrix_to_json(m.H_o);
  jm["H_f"] = matrix_to_json(m.H_f);
  jm["L"] = json::array();
  for (const auto& l : m.L) jm["L"].push_back(matrix_to_json(l));
  jm["eta"] = m.eta;
  jm["decomposition"]["dims"] = m.decomp.dims();
  if (m.decomp.basis()) jm["decomposition"]["basis"] = matrix_to_json(*m.decomp.basis());
  if (m.rho_d) jm["target"] = matrix_to_json(m.rho_d->rho());

  json doc;
  doc["model"] = std::move(jm);
  doc["controller"] = {{"type", to_string(cfg.controller.type)},
                       {"gamma", cfg.controller.gamma},
                       {"value", cfg.controller.value}};
  const auto& r = cfg.run;
  json jr = {{"horizon", r.horizon},
             {"dt", r.dt},
             {"trajectories", r.trajectories},
             {"base_seed", r.base_seed},
             {"synthesize", r.synthesize},
             {"v1_threshold", r.v1_threshold},
             {"fidelity_threshold", r.fidelity_threshold},
             {"sample_every", r.ensemble.sample_every},
             {"bootstrap_resamples", r.ensemble.bootstrap_resamples}};
  if (r.rho0) jr["rho0"] = matrix_to_json(r.rho0->rho());
  doc["run"] = std::move(jr);
  doc["analysis"] = {{"check_invariance", cfg.analysis.check_invariance},
                     {"synthesize", cfg.analysis.synthesize},
                     {"verify", cfg.analysis.verify},
                     {"u_bar", cfg.analysis.u_bar}};
  doc["output"] = {{"directory", cfg.output.directory}, {"prefix", cfg.output.prefix}};
  return doc;
}

std::string config_hash(const ExperimentConfig& cfg) {
  json doc = serialize_config(cfg);
  doc.erase("output");
  const std::string text = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  const Eigen::Index n = tr.states.empty() ? 0 : tr.states.front().dim();
  os << "t,u,dy,V1,V2,fidelity,region";
  write_state_header(os, n);
  os << '\n';
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << fmt(tr.times[k]) << ',' << fmt(tr.controls[k]) << ',' << fmt(tr.record[k]) << ','
       << fmt(tr.v1[k]) << ',' << fmt(tr.v2[k]) << ',' << fmt(tr.fidelity[k]) << ','
       << tr.regions[k];
    write_state_row(os, tr.states[k].rho());
    os << '\n';
  }
}

void write_ensemble_csv(std::ostream& os, const EnsembleStats& s) {
  const Eigen::Index n = s.mean_state.empty() ? 0 : s.mean_state.front().rows();
  os << "t,mean_V1,se_V1,mean_V2,se_V2,mean_fidelity,se_fidelity,state_se";
  write_state_header(os, n);
  os << '\n';
  for (std::size_t g = 0; g < s.times.size(); ++g) {
    os << fmt(s.times[g]) << ',' << fmt(s.mean_v1[g]) << ',' << fmt(s.se_v1[g]) << ','
       << fmt(s.mean_v2[g]) << ',' << fmt(s.se_v2[g]) << ',' << fmt(s.mean_fidelity[g]) << ','
       << fmt(s.se_fidelity[g]) << ',' << fmt(s.state_se[g]);
    write_state_row(os, s.mean_state[g]);
    os << '\n';
  }
}

json to_json(const InvarianceReport& r) {
  json w = json::array();
  for (const auto& x : r.witnesses) {
    w.push_back({{"condition", x.condition},
                 {"operator_index", x.operator_index},
                 {"residual", x.residual},
                 {"violated", x.residual > r.tol}});
  }
  return {{"invariant", r.invariant}, {"tol", r.tol}, {"witnesses", std::move(w)}};
}

json to_json(const StationaryReport& r) {
  json out = {{"kernel_dimension", r.kernel_dimension},
              {"r_kernel_dimension", r.r_kernel_dimension},
              {"has_R_supported_stationary_state", r.has_R_supported_stationary_state},
              {"conclusive", r.conclusive}};
  if (r.offending_state) out["offending_state"] = matrix_to_json(r.offending_state->rho());
  return out;
}

json to_json(const SynthesisTrace& t) {
  json steps = json::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"index", s.index},
                     {"branch", to_string(s.branch)},
                     {"direction", vector_to_json(s.direction)},
                     {"gain", s.gain},
                     {"coupling", complex_to_json(s.coupling)}});
  }
  json basis = json::array();
  for (const auto& v : t.final_decomposition) basis.push_back(vector_to_json(v));
  return {{"steps", std::move(steps)},
          {"H_c", matrix_to_json(t.H_c)},
          {"final_decomposition", std::move(basis)}};
}

json to_json(const SynthesisVerification& v) {
  return {{"verified", v.verified},
          {"invariance", to_json(v.invariance)},
          {"stationary", to_json(v.stationary)}};
}

json to_json(const StabilizationVerdict& v) {
  return {{"classification", to_string(v.classification)},
          {"synthesis_applied", v.synthesis_applied},
          {"note", v.note},
          {"applied_hamiltonian", matrix_to_json(v.applied_hamiltonian)},
          {"chi", v.chi.value},
          {"chi_se", v.chi.standard_error},
          {"terminal_v1", v.terminal_v1},
          {"terminal_fidelity", v.terminal_fidelity},
          {"feedback", v.feedback},
          {"pass", v.pass}};
}

json to_json(const EnsembleStats& s) {
  json out = {{"schema", kEnsembleSchema},
              {"sample_count", s.sample_count},
              {"dt", s.dt},
              {"grid_points", s.times.size()},
              {"chi", s.chi},
              {"chi_se", s.chi_se},
              {"max_trace_drift", s.max_trace_drift}};
  if (!s.times.empty()) {
    out["terminal"] = {{"t", s.times.back()},
                       {"mean_V1", s.mean_v1.back()},
                       {"se_V1", s.se_v1.back()},
                       {"mean_V2", s.mean_v2.back()},
                       {"mean_fidelity", s.mean_fidelity.back()},
                       {"se_fidelity", s.se_fidelity.back()},
                       {"mean_state", matrix_to_json(s.mean_state.back())}};
  }
  return out;
}

json make_manifest(const ExperimentConfig& cfg, const std::string& command,
                   const std::vector<std::uint64_t>& seeds,
                   const std::vector<std::string>& files) {
  return {{"schema_version", kSchemaVersion},
          {"csv_schema", kTrajectorySchema},
          {"qstab_version", kVersion},
          {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
          {"command", command},
          {"config_hash", config_hash(cfg)},
          {"seeds", seeds},
          {"files", files},
          {"config", serialize_config(cfg)}};
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace qstab
