#pragma once

// Open-loop Hamiltonian design: the correction that restores invariance of
// the target subspace, and the iterative chain construction that leaves no
// stationary state supported on the complement H_R.

#include "qstab/core.hpp"
#include "qstab/invariance.hpp"
#include "qstab/superop.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qstab {

/// A model failed one or more structural preconditions of the design.
class AssumptionError : public Error {
 public:
  explicit AssumptionError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// The classifier ruled out the requested construction.
class NotStabilizableError : public Error {
 public:
  explicit NotStabilizableError(Stabilizability cls);
  Stabilizability classification() const noexcept { return cls_; }

 private:
  Stabilizability cls_;
};

enum class Branch { NoiseConnected, HamiltonianAdded, DriftConnected };

std::string to_string(Branch b);

struct SynthesisStep {
  int index = 0;
  Branch branch = Branch::DriftConnected;
  /// Unit vector spanning the next C subspace, standard basis.
  CVector direction;
  /// h_j for HamiltonianAdded, 0 otherwise.
  double gain = 0.0;
  /// l_{j+1} for NoiseConnected, the nonzero entry of L_W in the new basis.
  cplx coupling{0.0, 0.0};
};

struct SynthesisTrace {
  std::vector<SynthesisStep> steps;
  Operator H_c;
  /// S direction, then C^(0), C^(1), ... (standard basis unit vectors).
  std::vector<CVector> final_decomposition;
};

struct DesignOptions {
  double gain = 1.0;
  /// Block-nonzero threshold relative to the largest operator norm.
  double rel_tol = 1e-9;
};

/// Hermitian correction with only P and P^dag blocks populated,
/// P block = -H_{o,P} - (i/2) sum_k L_{k,S}^dag L_{k,P}.
Operator enforce_invariance(const ControlModel& model, const Decomposition& decomp,
                            double tol = kDefaultTol);

/// Iterative chain construction for the feedback class (one-dimensional
/// target, H_{o,P} = 0, block-diagonal L_k, normal non-degenerate L_0,
/// H_f coupling S only to R). H_C starts as span(H_{f,P}^dag).
SynthesisTrace design_procedure(const ControlModel& model,
                                const DesignOptions& opts = {});

/// Names of the violated preconditions of design_procedure (empty if none).
std::vector<std::string> design_assumption_violations(const ControlModel& model,
                                                      double tol = kDefaultTol);

struct OpenLoopSynthesis {
  Operator hamiltonian;      // invariance term + chain term
  Operator invariance_term;  // enforce_invariance output
  SynthesisTrace trace;      // chain started from the L_{k,P} coupling
};

/// Open-loop stabilizer for the L_{k,P} != 0 class.
OpenLoopSynthesis synthesize_open_loop(const ControlModel& model,
                                       const Decomposition& decomp,
                                       const DesignOptions& opts = {});

struct SynthesisVerification {
  InvarianceReport invariance;  // open-loop part H_o + H_extra
  StationaryReport stationary;  // at H_o + H_extra + u_bar H_f
  bool verified = false;
};

/// Target invariance for H_o + H_extra and absence of R-supported stationary
/// states for H_o + H_extra + u_bar H_f.
SynthesisVerification verify_synthesis(const ControlModel& model,
                                       const Operator& H_extra, double u_bar,
                                       double tol = 1e-8);

/// Randomized fallback: a generic Hermitian supported on the R block,
/// accepted once verify_synthesis passes. Throws Error after `attempts`
/// failures.
Operator generic_correction(const ControlModel& model, double u_bar,
                            std::uint64_t seed, int attempts = 16,
                            double tol = 1e-8);

}  // namespace qstab
