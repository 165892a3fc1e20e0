#pragma once

// Experiment configuration documents (JSON, complex matrices as nested
// [re, im] pairs), trajectory and ensemble CSV export, run manifests and JSON
// renderings of the analysis reports.

#include "qstab/diagnostics.hpp"
#include "qstab/synthesis.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace qstab {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kTrajectorySchema = "qstab-trajectory-v1";
inline constexpr const char* kEnsembleSchema = "qstab-ensemble-v1";

/// Malformed or inconsistent configuration. `field` is a JSON-pointer-like
/// path to the offending entry ("" when the document itself is unreadable).
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct AnalysisToggles {
  bool check_invariance = true;
  bool synthesize = true;
  bool verify = true;
  double u_bar = 1.0;
  bool operator==(const AnalysisToggles&) const = default;
};

struct OutputPaths {
  std::string directory = "out";
  std::string prefix = "run";
  bool operator==(const OutputPaths&) const = default;
};

struct ExperimentConfig {
  ControlModel model;
  ControllerSpec controller;
  RunConfig run;
  AnalysisToggles analysis;
  OutputPaths output;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

nlohmann::json matrix_to_json(const CMatrix& m);
/// Throws ConfigError naming `field` on shape or type errors.
CMatrix matrix_from_json(const nlohmann::json& j, const std::string& field,
                         Eigen::Index expected_dim = -1);

ExperimentConfig parse_config(const nlohmann::json& doc);
/// Parse errors report the line and column of the failure.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
nlohmann::json serialize_config(const ExperimentConfig& cfg);

/// 64-bit FNV-1a of the canonical serialization without the output
/// section, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Columns: t,u,dy,V1,V2,fidelity,region, then re_ij,im_ij of the state
/// (row-major). Numbers use %.17g.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

/// Columns: t, mean/se of V1, V2, fidelity, state_se, then re_ij,im_ij of
/// the mean state.
void write_ensemble_csv(std::ostream& os, const EnsembleStats& stats);

nlohmann::json to_json(const InvarianceReport& r);
nlohmann::json to_json(const StationaryReport& r);
nlohmann::json to_json(const SynthesisTrace& t);
nlohmann::json to_json(const SynthesisVerification& v);
nlohmann::json to_json(const StabilizationVerdict& v);
/// Summary of an ensemble (without per-time curves).
nlohmann::json to_json(const EnsembleStats& s);

nlohmann::json make_manifest(const ExperimentConfig& cfg, const std::string& command,
                             const std::vector<std::uint64_t>& seeds,
                             const std::vector<std::string>& files);

/// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace qstab
