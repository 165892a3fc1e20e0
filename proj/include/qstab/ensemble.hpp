#pragma once

// Monte Carlo ensembles of SME trajectories. Trajectory i uses seed
// base_seed + i; aggregation runs over fixed blocks of trajectories combined
// in index order, so results do not depend on the thread count.

#include "qstab/control.hpp"
#include "qstab/sim.hpp"

#include <cstdint>
#include <vector>

namespace qstab {

struct EnsembleOptions {
  /// Integrator steps between stored grid points (the final time is always stored).
  std::size_t sample_every = 10;
  int bootstrap_resamples = 200;
  std::uint64_t bootstrap_seed = 0;
  /// 0 uses the OpenMP default.
  int threads = 0;
};

struct EnsembleStats {
  std::size_t sample_count = 0;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<CMatrix> mean_state;
  /// sqrt(sum_ij Var(rho_ij) / N): standard error of mean_state in Frobenius norm.
  std::vector<double> state_se;
  std::vector<double> mean_v1, se_v1;
  std::vector<double> mean_v2, se_v2;
  std::vector<double> mean_fidelity, se_fidelity;
  /// V1 per trajectory (rows) and grid point (columns).
  Eigen::MatrixXd v1_samples;
  double chi = 0.0;
  double chi_se = 0.0;
  double max_trace_drift = 0.0;
};

/// Parallel ensemble. Throws std::invalid_argument for N = 0 and
/// NumericalAbort if any trajectory degenerates.
EnsembleStats run_ensemble(const ControlModel& model, const QuantumState& rho0,
                           const Controller& controller, std::size_t n,
                           double horizon, double dt, std::uint64_t base_seed,
                           const EnsembleOptions& opts = {});

EnsembleStats run_ensemble(const ControlModel& model, const QuantumState& rho0,
                           const ControllerSpec& spec, std::size_t n, double horizon,
                           double dt, std::uint64_t base_seed,
                           const EnsembleOptions& opts = {});

/// Single-threaded reference with a plain running sum, for testing the
/// parallel reduction.
EnsembleStats run_ensemble_serial(const ControlModel& model, const QuantumState& rho0,
                                  const Controller& controller, std::size_t n,
                                  double horizon, double dt, std::uint64_t base_seed,
                                  const EnsembleOptions& opts = {});

}  // namespace qstab
