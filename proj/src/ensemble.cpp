#include "qstab/ensemble.hpp"

#include "qstab/diagnostics.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <stdexcept>

namespace qstab {

namespace {

constexpr std::size_t kBlock = 32;

struct Grid {
  std::size_t steps = 0;
  std::size_t every = 1;
  std::size_t points = 0;

  Grid(std::size_t s, std::size_t e) : steps(s), every(e) {
    points = steps / every + 1 + (steps % every != 0 ? 1 : 0);
  }
  double time(std::size_t g, double dt) const {
    return static_cast<double>(std::min(g * every, steps)) * dt;
  }
};

// Sums of rho - center; the shift keeps the one-pass variance free of
// cancellation when the spread is small compared to the state itself.
struct Accumulator {
  CMatrix center;
  std::vector<CMatrix> sum;
  std::vector<double> sum_sq;

  Accumulator(std::size_t points, const CMatrix& c)
      : center(c), sum(points, CMatrix::Zero(c.rows(), c.cols())), sum_sq(points, 0.0) {}
  void add(std::size_t g, const CMatrix& rho) {
    sum[g] += rho - center;
    sum_sq[g] += (rho - center).squaredNorm();
  }
  void merge(const Accumulator& o) {
    for (std::size_t g = 0; g < sum.size(); ++g) {
      sum[g] += o.sum[g];
      sum_sq[g] += o.sum_sq[g];
    }
  }
};

struct Samples {
  Eigen::MatrixXd v1, v2, fid;
  Samples(std::size_t n, std::size_t points)
      : v1(n, points), v2(n, points), fid(n, points) {}
};

// Integrates trajectory `i` with the same noise stream as simulate_sme(seed)
// and records the grid samples. Returns the largest pre-projection trace drift.
double run_trajectory(const CMatrix& rho0, Controller ctl,
                      const Grid& grid, double dt, std::uint64_t seed,
                      SmeIntegrator& integ, const LyapunovProbe& probe, std::size_t row,
                      Samples& samples, Accumulator& acc) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(dt);
  CMatrix rho = rho0;
  double drift = 0.0;
  std::size_t g = 0;
  auto sample = [&]() {
    samples.v1(row, g) = probe.v1(rho);
    samples.fid(row, g) = probe.fidelity(rho);
    samples.v2(row, g) = probe.v2(rho);
    acc.add(g, rho);
    ++g;
  };
  for (std::size_t n = 0; n < grid.steps; ++n) {
    if (n % grid.every == 0) sample();
    const double u = evaluate(ctl, rho);
    const auto res = integ.step(rho, u, sd * normal(rng));
    if (!res.ok) throw NumericalAbort("run_ensemble: trajectory " + std::to_string(row) +
                                          " degenerated after projection", n);
    drift = std::max(drift, res.trace_drift);
  }
  sample();
  return drift;
}

void check_inputs(const ControlModel& model, const QuantumState& rho0, std::size_t n,
                  const EnsembleOptions& opts) {
  if (n == 0) throw std::invalid_argument("run_ensemble: trajectory count must be positive");
  if (opts.sample_every == 0) throw std::invalid_argument("sample_every must be positive");
  if (rho0.dim() != model.dim()) throw DimensionError("run_ensemble: state dimension mismatch");
}

void column_stats(const Eigen::MatrixXd& m, std::vector<double>& mean,
                  std::vector<double>& se) {
  const auto n = static_cast<double>(m.rows());
  mean.resize(m.cols());
  se.resize(m.cols());
  for (Eigen::Index g = 0; g < m.cols(); ++g) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) s += m(i, g);
    const double mu = s / n;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) ss += (m(i, g) - mu) * (m(i, g) - mu);
    mean[g] = mu;
    se[g] = m.rows() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  }
}

EnsembleStats finalize(const Grid& grid, double dt, std::size_t n, const Accumulator& acc,
                       Samples&& samples, double drift, const EnsembleOptions& opts) {
  EnsembleStats st;
  st.sample_count = n;
  st.dt = dt;
  st.max_trace_drift = drift;
  const auto nn = static_cast<double>(n);
  for (std::size_t g = 0; g < grid.points; ++g) {
    st.times.push_back(grid.time(g, dt));
    const CMatrix shift = acc.sum[g] / nn;
    double var = n > 1 ? (acc.sum_sq[g] / nn - shift.squaredNorm()) * nn / (nn - 1.0) : 0.0;
    CMatrix mean = acc.center + shift;
    st.state_se.push_back(std::sqrt(std::max(0.0, var) / nn));
    st.mean_state.push_back(std::move(mean));
  }
  column_stats(samples.v1, st.mean_v1, st.se_v1);
  column_stats(samples.v2, st.mean_v2, st.se_v2);
  column_stats(samples.fid, st.mean_fidelity, st.se_fidelity);
  st.v1_samples = std::move(samples.v1);
  const ChiEstimate chi = chi_estimate(st, opts.bootstrap_resamples, opts.bootstrap_seed);
  st.chi = chi.value;
  st.chi_se = chi.standard_error;
  return st;
}

const CMatrix* target_of(const ControlModel& model, CMatrix& store) {
  if (!model.has_target()) return nullptr;
  store = model.target();
  return &store;
}

}  // namespace

EnsembleStats run_ensemble(const ControlModel& model, const QuantumState& rho0,
                           const Controller& controller, std::size_t n,
                           double horizon, double dt, std::uint64_t base_seed,
                           const EnsembleOptions& opts) {
  check_inputs(model, rho0, n, opts);
  const Grid grid(step_count(horizon, dt), opts.sample_every);
  CMatrix target_store;
  const LyapunovProbe probe(model.decomp, target_of(model, target_store));
  const std::size_t blocks = (n + kBlock - 1) / kBlock;

  Samples samples(n, grid.points);
  std::vector<Accumulator> partial(blocks, Accumulator(0, rho0.rho()));
  std::vector<double> block_drift(blocks, 0.0);
  std::exception_ptr failure;
  const int threads = opts.threads > 0 ? opts.threads : omp_get_max_threads();

#pragma omp parallel num_threads(threads)
  {
    SmeIntegrator integ(model, dt);
#pragma omp for schedule(dynamic, 1)
    for (std::size_t b = 0; b < blocks; ++b) {
      try {
        Accumulator acc(grid.points, rho0.rho());
        double drift = 0.0;
        for (std::size_t i = b * kBlock; i < std::min(n, (b + 1) * kBlock); ++i) {
          drift = std::max(drift, run_trajectory(rho0.rho(), controller, grid, dt,
                                                 base_seed + i, integ, probe, i, samples, acc));
        }
        partial[b] = std::move(acc);
        block_drift[b] = drift;
      } catch (...) {
#pragma omp critical(qstab_ensemble_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);

  Accumulator total(grid.points, rho0.rho());
  double drift = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    total.merge(partial[b]);
    drift = std::max(drift, block_drift[b]);
  }
  return finalize(grid, dt, n, total, std::move(samples), drift, opts);
}

EnsembleStats run_ensemble(const ControlModel& model, const QuantumState& rho0,
                           const ControllerSpec& spec, std::size_t n, double horizon,
                           double dt, std::uint64_t base_seed,
                           const EnsembleOptions& opts) {
  return run_ensemble(model, rho0, make_controller(spec, model), n, horizon, dt, base_seed,
                      opts);
}

EnsembleStats run_ensemble_serial(const ControlModel& model, const QuantumState& rho0,
                                  const Controller& controller, std::size_t n,
                                  double horizon, double dt, std::uint64_t base_seed,
                                  const EnsembleOptions& opts) {
  check_inputs(model, rho0, n, opts);
  const Grid grid(step_count(horizon, dt), opts.sample_every);
  CMatrix target_store;
  const LyapunovProbe probe(model.decomp, target_of(model, target_store));
  SmeIntegrator integ(model, dt);
  Samples samples(n, grid.points);
  Accumulator total(grid.points, rho0.rho());
  double drift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    drift = std::max(drift, run_trajectory(rho0.rho(), controller, grid, dt,
                                           base_seed + i, integ, probe, i, samples, total));
  }
  return finalize(grid, dt, n, total, std::move(samples), drift, opts);
}

}  // namespace qstab
