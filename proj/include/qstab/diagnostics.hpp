#pragma once

// Ensemble-level diagnostics: the chi functional min_t E V1(rho_t) with a
// bootstrap error, and the end-to-end stabilization verdict.

#include "qstab/ensemble.hpp"
#include "qstab/invariance.hpp"
#include "qstab/lyapunov.hpp"

#include <optional>
#include <string>

namespace qstab {

struct ChiEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Minimum over the grid of mean V1; the error is the standard deviation of
/// the same minimum over bootstrap resamples of whole trajectories.
ChiEstimate chi_estimate(const EnsembleStats& stats, int resamples = 200,
                         std::uint64_t seed = 0);

struct RunConfig {
  double horizon = 5.0;
  double dt = 1e-3;
  std::size_t trajectories = 500;
  std::uint64_t base_seed = 1;
  /// Initial state; defaults to the maximally mixed state on R.
  std::optional<QuantumState> rho0;
  /// Add the synthesized Hamiltonian before simulating.
  bool synthesize = true;
  double v1_threshold = 0.05;
  double fidelity_threshold = 0.95;
  EnsembleOptions ensemble;
};

struct StabilizationVerdict {
  Stabilizability classification = Stabilizability::NeedsFeedback;
  bool synthesis_applied = false;
  std::string note;
  Operator applied_hamiltonian;
  ChiEstimate chi;
  double terminal_v1 = 0.0;
  double terminal_fidelity = 0.0;
  bool feedback = false;
  bool pass = false;
};

struct SynthesisChoice {
  Stabilizability classification = Stabilizability::NeedsFeedback;
  Operator hamiltonian;
  bool applied = false;
  std::string note;
};

/// Hamiltonian added before simulating: the feedback design for feedback
/// controllers, the open-loop synthesis for constant controllers on the
/// open-loop stabilizable class, nothing otherwise.
SynthesisChoice choose_synthesis(const ControlModel& model, const ControllerSpec& controller);

/// Maximally mixed state on part 1.. of the decomposition.
QuantumState mixed_R_state(const Decomposition& decomp);

/// classify -> synthesize (open-loop or feedback design) -> ensemble ->
/// thresholds. Pass requires terminal mean V1 <= v1_threshold and, for
/// feedback controllers, terminal mean fidelity >= fidelity_threshold.
StabilizationVerdict stabilization_report(const ControlModel& model,
                                          const ControllerSpec& controller,
                                          const RunConfig& run,
                                          EnsembleStats* stats_out = nullptr);

}  // namespace qstab
