#pragma once

// Superoperators of the monitored open-system dynamics, the Lindblad
// generator, drift matrices of the linear vector unravelings and the
// infinitesimal generator evaluated on the two Lyapunov functionals used
// throughout (linear tr(X rho) and the quadratic fidelity functional).

#include "qstab/core.hpp"

#include <optional>
#include <vector>

namespace qstab {

/// (H_o, H_f, {L_k}, eta, decomposition, target). L[0] is the measured
/// channel, L[1..] are unmonitored noise operators. An empty L means no
/// measurement and no noise.
struct ControlModel {
  Operator H_o;
  Operator H_f;
  std::vector<Operator> L;
  double eta = 1.0;
  Decomposition decomp;
  std::optional<QuantumState> rho_d;

  int dim() const { return static_cast<int>(H_o.rows()); }

  /// Throws DimensionError / InvalidStateError on any violated invariant.
  void validate(double tol = kDefaultTol) const;

  /// H_o + u H_f.
  Operator hamiltonian(double u) const;

  /// L[0], or the zero operator when the model has no channels.
  Operator measurement() const;

  /// Explicit rho_d, or the projector onto a one-dimensional part 0.
  CMatrix target() const;
  bool has_target() const;

  /// Copy with H_o replaced by H_o + extra.
  ControlModel with_extra_hamiltonian(const Operator& extra) const;
};

/// Convenience constructor that fills in the zero operators and validates.
ControlModel make_model(Operator H_o, Operator H_f, std::vector<Operator> L,
                        double eta, Decomposition decomp,
                        std::optional<QuantumState> rho_d = std::nullopt);

/// -i[H, rho]
CMatrix hamiltonian_part(const Operator& H, const CMatrix& rho);

/// L rho L^dag - (L^dag L rho + rho L^dag L)/2
CMatrix dissipator(const Operator& L, const CMatrix& rho);

/// sqrt(eta) (L rho + rho L^dag - tr((L + L^dag) rho) rho)
CMatrix diffusion(const Operator& L0, const CMatrix& rho, double eta);

/// Lindblad generator with H = H_o + u H_f: F(H, rho) + sum_k D(L_k, rho).
CMatrix lindblad_rhs(const ControlModel& model, const CMatrix& rho, double u);

inline CMatrix sme_drift(const ControlModel& model, const CMatrix& rho,
                         double u) {
  return lindblad_rhs(model, rho, u);
}

inline CMatrix sme_diffusion(const ControlModel& model, const CMatrix& rho) {
  return diffusion(model.measurement(), rho, model.eta);
}

/// -i(H_o + u H_f) - 1/2 sum_k L_k^dag L_k
CMatrix ito_drift_matrix(const ControlModel& model, double u);

/// ito_drift_matrix - 1/2 L_0^2 (Wong-Zakai correction; L_0 squared, not
/// L_0^dag L_0).
CMatrix stratonovich_drift_matrix(const ControlModel& model, double u);

/// Generator on V(rho) = tr(X rho). Diffusion does not contribute to a
/// linear functional.
double generator_linear(const ControlModel& model, const CMatrix& X,
                        const CMatrix& rho, double u);

/// Generator on V(rho) = 1 - tr(rho_d rho)^2:
///   -2 tr(rho_d L(rho)) tr(rho_d rho) - tr(rho_d G(L_0, rho))^2
double generator_quadratic_fidelity(const ControlModel& model,
                                    const CMatrix& rho, double u);

/// dim^2 x dim^2 matrix of rho -> lindblad_rhs(model, rho, u) acting on
/// column-major vec(rho).
CMatrix liouvillian_matrix(const ControlModel& model, double u);

/// Column-major vectorization helpers matching liouvillian_matrix.
CVector vec(const CMatrix& x);
CMatrix unvec(const CVector& v, Eigen::Index dim);

}  // namespace qstab
