#pragma once

#include "qstab/core.hpp"

namespace qstab {

/// tr(Pi_R rho): weight outside the target subspace (part 0).
double V1(const CMatrix& rho, const Decomposition& decomp);

/// 1 - tr(rho_d rho)^2.
double V2(const CMatrix& rho, const CMatrix& rho_d);

/// sqrt(|rho_P|^2 + |rho_Q|^2 + |rho_R|^2) (Frobenius), zero exactly on I_S.
double set_distance_proxy(const CMatrix& rho, const Decomposition& decomp);

/// Precomputed Pi_R and rho_d for per-step evaluation in integrators.
class LyapunovProbe {
 public:
  LyapunovProbe(const Decomposition& decomp, const CMatrix* rho_d);
  double v1(const CMatrix& rho) const;
  /// NaN when no target is available.
  double fidelity(const CMatrix& rho) const;
  double v2(const CMatrix& rho) const;
  bool has_target() const noexcept { return has_target_; }

 private:
  CMatrix pi_r_;
  CMatrix rho_d_;
  bool has_target_ = false;
};

}  // namespace qstab
