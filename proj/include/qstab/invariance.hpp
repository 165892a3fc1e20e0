#pragma once

// Block-algebraic invariance and stabilizability tests for a target subspace
// H_S, the observability escape test for linear flows, the auxiliary
// conditions on the S (+) C (+) Z refinement, and a spectral search for
// stationary states supported on the complement H_R.

#include "qstab/core.hpp"
#include "qstab/superop.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qstab {

class AnomalyError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kCondLQ = "L_Q zero";
inline constexpr const char* kCondHP = "iH_P - 1/2 sum L_S^dag L_P zero";

struct InvarianceWitness {
  std::string condition;
  int operator_index = -1;  // -1 for the Hamiltonian condition
  double residual = 0.0;    // Frobenius norm of the offending block
};

struct InvarianceReport {
  bool invariant = true;
  /// Every checked condition with its residual; entries above tolerance are
  /// the violations.
  std::vector<InvarianceWitness> witnesses;
  double tol = kDefaultTol;

  std::vector<InvarianceWitness> violations() const;
};

/// Invariance of part 0 of `decomp` (parts 1.. merged into R) for the
/// Lindblad dynamics with H = H_o + u H_f.
InvarianceReport check_invariant(const ControlModel& model,
                                 const Decomposition& decomp, double u,
                                 double tol = kDefaultTol);

/// True when H_R is not invariant, i.e. the target can be made GAS by a
/// time-independent Hamiltonian.
bool check_R_not_invariant(const ControlModel& model,
                           const Decomposition& decomp, double u,
                           double tol = kDefaultTol);

enum class Stabilizability { Stabilizable, NeedsFeedback, TargetNotInvariantable };

std::string to_string(Stabilizability s);

Stabilizability openloop_stabilizable(const ControlModel& model,
                                      const Decomposition& decomp,
                                      double tol = kDefaultTol);

/// True iff H_R contains no A-invariant subspace, so every trajectory of
/// dx/dt = A x started in H_R leaves it. Rank test on the stacked blocks
/// Pi_S A^k Pi_R, k = 0..n-1, with relative singular-value threshold.
bool observability_escape(const CMatrix& A, const Decomposition& decomp,
                          double tol = kDefaultTol);

/// Upper block-triangularity of the drift and input matrices of the
/// deterministic companion system dv/dt = A v + w L_0 v with
/// A = -iH - 1/2 sum L_k^dag L_k - 1/2 L_0^2, H = H_o + u H_f.
bool deterministic_invariance(const ControlModel& model,
                              const Decomposition& decomp,
                              double tol = kDefaultTol, double u = 0.0);

struct ProbeVerdict {
  double scond_norm = 0.0;  // |sum_k L_kW rho_Z L_kW^dag|
  double pcond_norm = 0.0;  // |V_W rho_Z + sum_k L_kW rho_Z L_kZ^dag|
  bool satisfied = false;
};

struct AuxConditionReport {
  /// Common kernel of the L_{k,W} rows is trivial.
  bool scond_universal = false;
  /// V_W = -iH_{o,W} - 1/2 sum_k (L_{k,C}^dag L_{k,W} + L_{k,Y}^dag L_{k,Z}).
  CMatrix pcond_operator;
  std::vector<ProbeVerdict> probes;
};

/// decomp3 must be S (+) C (+) Z with dim C = 1. Probes are Z-block density
/// matrices (dims[2] x dims[2]).
AuxConditionReport lemma_aux_conditions(const ControlModel& model,
                                        const Decomposition& decomp3,
                                        const std::vector<CMatrix>& probes,
                                        double tol = kDefaultTol);

struct StationaryReport {
  int kernel_dimension = 0;
  bool has_R_supported_stationary_state = false;
  std::optional<QuantumState> offending_state;
  /// Dimension of the stationary subspace of operators living in the R block.
  int r_kernel_dimension = 0;
  /// False when the extracted offending state failed its residual re-check.
  bool conclusive = true;
};

/// Kernel of the vectorized generator and the subspace of stationary
/// operators supported on H_R. Any nonzero Hermitian stationary operator of a
/// trace-preserving semigroup has stationary positive and negative parts, so
/// R-supported stationary states exist iff that subspace is nonzero.
StationaryReport stationary_support(const ControlModel& model, double u,
                                    const Decomposition& decomp,
                                    double tol = kDefaultTol);

}  // namespace qstab
