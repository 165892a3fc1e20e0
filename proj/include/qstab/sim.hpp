#pragma once

// Integrators for the monitored dynamics: Euler-Maruyama for the stochastic
// master equation (with per-step physical projection), RK4 for the Lindblad
// equation and the deterministic companion system, Euler for the linear
// (Zakai-type) diffusion, and Euler/Heun for the Ito/Stratonovich vector
// unravelings.

#include "qstab/control.hpp"
#include "qstab/core.hpp"
#include "qstab/lyapunov.hpp"
#include "qstab/superop.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace qstab {

/// Generator for trajectory `seed`; streams for different seeds are
/// independent of execution order.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Wiener increments dW ~ N(0, dt), optionally with an independent auxiliary
/// path dW' for the sqrt(eta) y + sqrt(1 - eta) W' construction.
struct NoisePath {
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> increments;
  std::vector<double> aux;

  static NoisePath generate(std::size_t steps, double dt, std::uint64_t seed,
                            bool with_aux = false);
  /// Sum consecutive groups of `factor` increments: the same Brownian path
  /// sampled on a coarser grid.
  NoisePath coarsened(std::size_t factor) const;
  /// sqrt(eta) dy + sqrt(1 - eta) dW' from a record path and this path's aux.
  static NoisePath mixed(const std::vector<double>& record, const NoisePath& aux_source,
                         double eta);
  std::size_t steps() const noexcept { return increments.size(); }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<QuantumState> states;
  /// Control applied on [t, t + dt]; the final row repeats the controller on
  /// the final state.
  std::vector<double> controls;
  /// Record increment dy over [t, t + dt]; 0 on the final row.
  std::vector<double> record;
  std::vector<double> v1;
  std::vector<double> v2;
  std::vector<double> fidelity;
  std::vector<std::string> regions;
  /// Largest |tr(rho_{n+1}) - tr(rho_n)| before projection.
  double max_trace_drift = 0.0;
  std::size_t size() const noexcept { return times.size(); }
};

/// One Euler-Maruyama step of the SME in preallocated workspace:
///   rho <- P(rho + L_u(rho) dt + G(L_0, rho) dW)
/// with P = project_to_physical. Also yields the record increment
///   dy = sqrt(eta) tr(rho (L_0 + L_0^dag)) dt + dW.
class SmeIntegrator {
 public:
  SmeIntegrator(const ControlModel& model, double dt);

  struct StepResult {
    double record = 0.0;
    double trace_drift = 0.0;
    bool ok = true;
  };

  StepResult step(CMatrix& rho, double u, double dW);
  double dt() const noexcept { return dt_; }

 private:
  std::vector<Operator> ls_;
  std::vector<Operator> ls_adj_;
  Operator l0_;
  Operator l0_adj_;
  CMatrix k0_;   // -i H_o - 1/2 sum L^dag L
  CMatrix khf_;  // -i H_f
  double sqrt_eta_;
  double dt_;
  CMatrix k_, tmp_, tmp2_, drift_, next_;
  PhysicalProjector projector_;
};

std::size_t step_count(double horizon, double dt);

/// SME trajectory. Noise is drawn from make_rng(seed) in step order;
/// record_every thins the stored rows (the final row is always kept).
Trajectory simulate_sme(const ControlModel& model, const QuantumState& rho0,
                        Controller controller, double horizon, double dt,
                        std::uint64_t seed, std::size_t record_every = 1);

/// SME trajectory driven by a given noise path (horizon = steps * dt).
Trajectory simulate_sme(const ControlModel& model, const QuantumState& rho0,
                        Controller controller, const NoisePath& noise,
                        std::size_t record_every = 1);

/// Lindblad equation at constant control, classical RK4 (the one-step map is
/// applied as a precomputed polynomial in the vectorized generator).
Trajectory propagate_me(const ControlModel& model, const QuantumState& rho0, double u,
                        double horizon, double dt, std::size_t record_every = 1);

/// Same RK4 map applied to an arbitrary (not necessarily physical) operator;
/// returns the operator at each stored time.
std::vector<CMatrix> propagate_me_operator(const ControlModel& model, const CMatrix& x0,
                                           double u, double horizon, double dt,
                                           std::size_t record_every = 1);

struct ZakaiPath {
  std::vector<double> times;
  std::vector<CMatrix> unnormalized;
  std::vector<CMatrix> normalized;
};

/// Linear diffusion d rho~ = L_u(rho~) dt + sqrt(eta)(L_0 rho~ + rho~ L_0^dag) dy
/// driven by a measurement record (Euler). u_path holds one control per step,
/// or a single constant. Throws NumericalAbort if tr(rho~) stops being positive.
ZakaiPath simulate_zakai(const ControlModel& model, const CMatrix& rho0,
                         const std::vector<double>& u_path,
                         const std::vector<double>& record, double dt,
                         std::size_t record_every = 1);

enum class Calculus { Ito, Stratonovich };

struct VectorPath {
  std::vector<double> times;
  std::vector<CVector> vectors;
};

/// dv = A v dt + L_0 v dW~. Ito uses Euler-Maruyama with the Ito drift;
/// Stratonovich uses Heun with the Wong-Zakai corrected drift.
VectorPath simulate_vector(const ControlModel& model, const CVector& v0, double u,
                           const NoisePath& noise, Calculus form,
                           std::size_t record_every = 1);

/// Piecewise-constant input: value[i] holds on [start[i], start[i+1]).
struct PiecewiseControl {
  std::vector<double> start;
  std::vector<double> value;
  double at(double t) const;
  static PiecewiseControl constant(double v);
};

/// dv/dt = (-i (H_o + u H_f) - 1/2 sum L^dag L - 1/2 L_0^2) v + w(t) L_0 v, RK4.
/// w is evaluated at the midpoint of each step.
VectorPath simulate_deterministic(const ControlModel& model, const CVector& v0,
                                  const PiecewiseControl& w, double horizon, double dt,
                                  double u = 0.0, std::size_t record_every = 1);

}  // namespace qstab
