#include "qstab/diagnostics.hpp"

#include "qstab/synthesis.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace qstab {

namespace {

CMatrix r_projector(const Decomposition& d) {
  CMatrix p = CMatrix::Zero(d.dim(), d.dim());
  for (std::size_t k = 1; k < d.parts(); ++k) p += projector(d, k);
  return p;
}

}  // namespace

double V1(const CMatrix& rho, const Decomposition& decomp) {
  if (rho.rows() != decomp.dim()) throw DimensionError("V1: dimension mismatch");
  return trace_product_real(r_projector(decomp), rho);
}

double V2(const CMatrix& rho, const CMatrix& rho_d) {
  if (rho.rows() != rho_d.rows()) throw DimensionError("V2: dimension mismatch");
  const double f = trace_product_real(rho_d, rho);
  return 1.0 - f * f;
}

double set_distance_proxy(const CMatrix& rho, const Decomposition& decomp) {
  if (rho.rows() != decomp.dim()) throw DimensionError("set_distance_proxy: dimension mismatch");
  const Decomposition d = decomp.coarsened();
  if (d.parts() < 2) return 0.0;
  const double p = block(rho, d, 0, 1).squaredNorm();
  const double q = block(rho, d, 1, 0).squaredNorm();
  const double r = block(rho, d, 1, 1).squaredNorm();
  return std::sqrt(p + q + r);
}

LyapunovProbe::LyapunovProbe(const Decomposition& decomp, const CMatrix* rho_d)
    : pi_r_(r_projector(decomp)) {
  if (rho_d != nullptr) {
    rho_d_ = *rho_d;
    has_target_ = true;
  }
}

double LyapunovProbe::v1(const CMatrix& rho) const { return trace_product_real(pi_r_, rho); }

double LyapunovProbe::fidelity(const CMatrix& rho) const {
  if (!has_target_) return std::numeric_limits<double>::quiet_NaN();
  return trace_product_real(rho_d_, rho);
}

double LyapunovProbe::v2(const CMatrix& rho) const {
  const double f = fidelity(rho);
  return 1.0 - f * f;
}

ChiEstimate chi_estimate(const EnsembleStats& stats, int resamples, std::uint64_t seed) {
  const Eigen::MatrixXd& v = stats.v1_samples;
  if (v.rows() == 0 || v.cols() == 0) {
    throw std::invalid_argument("chi_estimate: ensemble holds no V1 samples");
  }
  const Eigen::Index n = v.rows();
  const Eigen::Index g = v.cols();
  ChiEstimate out;
  out.value = (v.colwise().sum() / static_cast<double>(n)).minCoeff();
  if (resamples <= 1 || n < 2) return out;

  auto rng = make_rng(seed, 0xc4u);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  Eigen::RowVectorXd sums(g);
  std::vector<double> minima(static_cast<std::size_t>(resamples));
  for (auto& m : minima) {
    sums.setZero();
    for (Eigen::Index i = 0; i < n; ++i) sums += v.row(pick(rng));
    m = sums.minCoeff() / static_cast<double>(n);
  }
  double mean = 0.0;
  for (double m : minima) mean += m;
  mean /= static_cast<double>(resamples);
  double ss = 0.0;
  for (double m : minima) ss += (m - mean) * (m - mean);
  out.standard_error = std::sqrt(ss / static_cast<double>(resamples - 1));
  return out;
}

QuantumState mixed_R_state(const Decomposition& decomp) {
  const CMatrix p = r_projector(decomp);
  const double r = p.trace().real();
  if (r < 0.5) throw InvalidStateError("mixed_R_state: R is zero-dimensional");
  return QuantumState::trusted(p / r);
}

SynthesisChoice choose_synthesis(const ControlModel& model, const ControllerSpec& controller) {
  SynthesisChoice c;
  c.classification = openloop_stabilizable(model, model.decomp);
  c.hamiltonian = CMatrix::Zero(model.dim(), model.dim());
  if (controller.type != ControllerType::Constant) {
    const SynthesisTrace trace = design_procedure(model);
    c.hamiltonian = trace.H_c;
    c.applied = true;
    c.note = "feedback design: " + std::to_string(trace.steps.size()) + " step(s)";
  } else if (c.classification == Stabilizability::Stabilizable) {
    const OpenLoopSynthesis syn = synthesize_open_loop(model, model.decomp);
    c.hamiltonian = syn.hamiltonian;
    c.applied = true;
    c.note = syn.hamiltonian.norm() == 0.0 ? "already stabilizable, no correction needed"
                                           : "open-loop correction applied";
  } else {
    c.note = "open-loop synthesis not applicable: " + to_string(c.classification);
  }
  return c;
}

StabilizationVerdict stabilization_report(const ControlModel& model,
                                          const ControllerSpec& controller,
                                          const RunConfig& run,
                                          EnsembleStats* stats_out) {
  StabilizationVerdict v;
  v.feedback = controller.type != ControllerType::Constant;
  if (run.synthesize) {
    SynthesisChoice c = choose_synthesis(model, controller);
    v.classification = c.classification;
    v.applied_hamiltonian = std::move(c.hamiltonian);
    v.synthesis_applied = c.applied;
    v.note = std::move(c.note);
  } else {
    v.classification = openloop_stabilizable(model, model.decomp);
    v.applied_hamiltonian = CMatrix::Zero(model.dim(), model.dim());
  }

  const ControlModel augmented = model.with_extra_hamiltonian(v.applied_hamiltonian);
  const QuantumState rho0 = run.rho0 ? *run.rho0 : mixed_R_state(model.decomp);
  EnsembleStats stats = run_ensemble(augmented, rho0, controller, run.trajectories,
                                     run.horizon, run.dt, run.base_seed, run.ensemble);
  v.chi = {stats.chi, stats.chi_se};
  v.terminal_v1 = stats.mean_v1.back();
  v.terminal_fidelity = stats.mean_fidelity.back();
  v.pass = v.terminal_v1 <= run.v1_threshold &&
           (!v.feedback || v.terminal_fidelity >= run.fidelity_threshold);
  if (stats_out) *stats_out = std::move(stats);
  return v;
}

}  // namespace qstab
