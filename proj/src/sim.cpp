#include "qstab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qstab {

namespace {

const cplx kI(0.0, 1.0);

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void require_step(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("time step must be positive and finite");
  }
}

bool keep_row(std::size_t n, std::size_t steps, std::size_t every) {
  return n % every == 0 || n == steps;
}

// One RK4 step of the linear map x' = M x, as a matrix polynomial.
CMatrix rk4_map(const CMatrix& m, double h) {
  const Eigen::Index n = m.rows();
  const CMatrix hm = h * m;
  CMatrix term = CMatrix::Identity(n, n);
  CMatrix out = term;
  for (int k = 1; k <= 4; ++k) {
    term = (hm * term) / static_cast<double>(k);
    out += term;
  }
  return out;
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x5851f42d4c957f2dULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

NoisePath NoisePath::generate(std::size_t steps, double dt, std::uint64_t seed,
                              bool with_aux) {
  require_step(dt);
  NoisePath p;
  p.dt = dt;
  p.seed = seed;
  const double sd = std::sqrt(dt);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto rng = make_rng(seed);
  p.increments.resize(steps);
  for (auto& x : p.increments) x = sd * normal(rng);
  if (with_aux) {
    auto aux_rng = make_rng(seed, 1);
    p.aux.resize(steps);
    for (auto& x : p.aux) x = sd * normal(aux_rng);
  }
  return p;
}

NoisePath NoisePath::coarsened(std::size_t factor) const {
  if (factor == 0 || increments.size() % factor != 0) {
    throw std::invalid_argument("coarsening factor must divide the step count");
  }
  NoisePath out;
  out.dt = dt * static_cast<double>(factor);
  out.seed = seed;
  auto sum_groups = [factor](const std::vector<double>& in) {
    std::vector<double> res(in.size() / factor, 0.0);
    for (std::size_t i = 0; i < in.size(); ++i) res[i / factor] += in[i];
    return res;
  };
  out.increments = sum_groups(increments);
  if (!aux.empty()) out.aux = sum_groups(aux);
  return out;
}

NoisePath NoisePath::mixed(const std::vector<double>& record, const NoisePath& aux_source,
                           double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
  if (aux_source.aux.size() != record.size()) {
    throw std::invalid_argument("auxiliary path length does not match the record");
  }
  NoisePath out;
  out.dt = aux_source.dt;
  out.seed = aux_source.seed;
  out.increments.resize(record.size());
  const double a = std::sqrt(eta);
  const double b = std::sqrt(1.0 - eta);
  for (std::size_t i = 0; i < record.size(); ++i) {
    out.increments[i] = a * record[i] + b * aux_source.aux[i];
  }
  return out;
}

SmeIntegrator::SmeIntegrator(const ControlModel& model, double dt)
    : ls_(model.L),
      l0_(model.measurement()),
      sqrt_eta_(std::sqrt(model.eta)),
      dt_(dt),
      projector_(model.dim()) {
  require_step(dt);
  const Eigen::Index n = model.dim();
  for (const auto& l : ls_) ls_adj_.push_back(l.adjoint());
  l0_adj_ = l0_.adjoint();
  k0_ = -kI * model.H_o;
  for (const auto& l : ls_) k0_ -= 0.5 * (l.adjoint() * l);
  khf_ = -kI * model.H_f;
  k_.resize(n, n);
  tmp_.resize(n, n);
  tmp2_.resize(n, n);
  drift_.resize(n, n);
  next_.resize(n, n);
}

SmeIntegrator::StepResult SmeIntegrator::step(CMatrix& rho, double u, double dW) {
  StepResult r;
  k_ = k0_ + u * khf_;
  tmp_.noalias() = k_ * rho;
  drift_ = tmp_ + tmp_.adjoint();
  for (std::size_t k = 0; k < ls_.size(); ++k) {
    tmp_.noalias() = ls_[k] * rho;
    drift_.noalias() += tmp_ * ls_adj_[k];
  }
  tmp2_.noalias() = l0_ * rho;
  const double expect = 2.0 * tmp2_.trace().real();
  r.record = sqrt_eta_ * expect * dt_ + dW;

  const double g = sqrt_eta_ * dW;
  next_ = rho + dt_ * drift_ + g * (tmp2_ + tmp2_.adjoint() - expect * rho);
  r.trace_drift = std::abs(next_.trace().real() - rho.trace().real());
  rho = next_;
  r.ok = projector_.apply(rho);
  return r;
}

std::size_t step_count(double horizon, double dt) {
  require_step(dt);
  if (!(horizon >= dt)) throw std::invalid_argument("horizon must be at least one time step");
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

Trajectory simulate_sme(const ControlModel& model, const QuantumState& rho0,
                        Controller controller, double horizon, double dt,
                        std::uint64_t seed, std::size_t record_every) {
  return simulate_sme(model, rho0, std::move(controller),
                      NoisePath::generate(step_count(horizon, dt), dt, seed), record_every);
}

Trajectory simulate_sme(const ControlModel& model, const QuantumState& rho0,
                        Controller controller, const NoisePath& noise,
                        std::size_t record_every) {
  if (rho0.dim() != model.dim()) throw DimensionError("simulate_sme: state dimension mismatch");
  if (record_every == 0) throw std::invalid_argument("record_every must be positive");
  const std::size_t steps = noise.steps();
  const double dt = noise.dt;
  SmeIntegrator integ(model, dt);
  const CMatrix* target = nullptr;
  CMatrix target_store;
  if (model.has_target()) {
    target_store = model.target();
    target = &target_store;
  }
  const LyapunovProbe probe(model.decomp, target);

  Trajectory tr;
  const std::size_t rows = steps / record_every + 2;
  tr.times.reserve(rows);
  tr.states.reserve(rows);
  CMatrix rho = rho0.rho();
  auto push = [&](std::size_t n, double u, double dy) {
    tr.times.push_back(static_cast<double>(n) * dt);
    tr.states.push_back(QuantumState::trusted(rho));
    tr.controls.push_back(u);
    tr.record.push_back(dy);
    tr.v1.push_back(probe.v1(rho));
    tr.fidelity.push_back(probe.fidelity(rho));
    tr.v2.push_back(probe.v2(rho));
    tr.regions.push_back(region_label(controller));
  };

  for (std::size_t n = 0; n < steps; ++n) {
    const double u = evaluate(controller, rho);
    const bool keep = keep_row(n, steps, record_every);
    CMatrix before;
    if (keep) before = rho;
    const auto res = integ.step(rho, u, noise.increments[n]);
    if (!res.ok) throw NumericalAbort("simulate_sme: state degenerated after projection", n);
    tr.max_trace_drift = std::max(tr.max_trace_drift, res.trace_drift);
    if (keep) {
      std::swap(before, rho);
      push(n, u, res.record);
      std::swap(before, rho);
    }
  }
  const double u_final = evaluate(controller, rho);
  push(steps, u_final, 0.0);
  return tr;
}

std::vector<CMatrix> propagate_me_operator(const ControlModel& model, const CMatrix& x0,
                                           double u, double horizon, double dt,
                                           std::size_t record_every) {
  if (x0.rows() != model.dim() || x0.cols() != model.dim()) {
    throw DimensionError("propagate_me: operator dimension mismatch");
  }
  if (record_every == 0) throw std::invalid_argument("record_every must be positive");
  const std::size_t steps = step_count(horizon, dt);
  const CMatrix map = rk4_map(liouvillian_matrix(model, u), dt);
  const Eigen::Index n = model.dim();
  std::vector<CMatrix> out;
  out.reserve(steps / record_every + 2);
  CVector x = vec(x0);
  CVector next(x.size());
  out.push_back(x0);
  for (std::size_t k = 1; k <= steps; ++k) {
    next.noalias() = map * x;
    x.swap(next);
    if (keep_row(k, steps, record_every)) out.push_back(unvec(x, n));
  }
  return out;
}

Trajectory propagate_me(const ControlModel& model, const QuantumState& rho0, double u,
                        double horizon, double dt, std::size_t record_every) {
  const std::size_t steps = step_count(horizon, dt);
  const auto mats = propagate_me_operator(model, rho0.rho(), u, horizon, dt, record_every);
  const CMatrix* target = nullptr;
  CMatrix target_store;
  if (model.has_target()) {
    target_store = model.target();
    target = &target_store;
  }
  const LyapunovProbe probe(model.decomp, target);
  Trajectory tr;
  std::size_t k = 0;
  for (std::size_t i = 0; i < mats.size(); ++i) {
    tr.times.push_back(static_cast<double>(k) * dt);
    const CMatrix& m = mats[i];
    tr.states.push_back(QuantumState::trusted(m));
    tr.controls.push_back(u);
    tr.record.push_back(0.0);
    tr.v1.push_back(probe.v1(m));
    tr.fidelity.push_back(probe.fidelity(m));
    tr.v2.push_back(probe.v2(m));
    tr.regions.emplace_back();
    k = std::min(k + record_every, steps);
  }
  return tr;
}

ZakaiPath simulate_zakai(const ControlModel& model, const CMatrix& rho0,
                         const std::vector<double>& u_path,
                         const std::vector<double>& record, double dt,
                         std::size_t record_every) {
  require_step(dt);
  if (rho0.rows() != model.dim()) throw DimensionError("simulate_zakai: dimension mismatch");
  if (u_path.size() != 1 && u_path.size() != record.size()) {
    throw std::invalid_argument("u_path must hold one value or one value per step");
  }
  if (record_every == 0) throw std::invalid_argument("record_every must be positive");
  const std::size_t steps = record.size();
  const Operator l0 = model.measurement();
  const double sqrt_eta = std::sqrt(model.eta);

  ZakaiPath out;
  CMatrix x = rho0;
  auto push = [&](std::size_t n) {
    out.times.push_back(static_cast<double>(n) * dt);
    out.unnormalized.push_back(x);
    out.normalized.push_back(x / x.trace().real());
  };
  push(0);
  CMatrix a(x.rows(), x.cols());
  for (std::size_t n = 0; n < steps; ++n) {
    const double u = u_path.size() == 1 ? u_path[0] : u_path[n];
    a.noalias() = l0 * x;
    x += lindblad_rhs(model, x, u) * dt + (sqrt_eta * record[n]) * (a + a.adjoint());
    if (!(x.trace().real() > 0.0)) {
      throw NumericalAbort("simulate_zakai: unnormalized trace is no longer positive", n);
    }
    if (keep_row(n + 1, steps, record_every)) push(n + 1);
  }
  return out;
}

VectorPath simulate_vector(const ControlModel& model, const CVector& v0, double u,
                           const NoisePath& noise, Calculus form,
                           std::size_t record_every) {
  if (v0.size() != model.dim()) throw DimensionError("simulate_vector: dimension mismatch");
  if (record_every == 0) throw std::invalid_argument("record_every must be positive");
  require_step(noise.dt);
  const double dt = noise.dt;
  const std::size_t steps = noise.steps();
  const Operator l0 = model.measurement();
  const CMatrix a = form == Calculus::Ito ? ito_drift_matrix(model, u)
                                          : stratonovich_drift_matrix(model, u);
  VectorPath out;
  CVector v = v0;
  out.times.push_back(0.0);
  out.vectors.push_back(v);
  CVector av(v.size()), lv(v.size()), pred(v.size());
  for (std::size_t n = 0; n < steps; ++n) {
    const double dw = noise.increments[n];
    av.noalias() = a * v;
    lv.noalias() = l0 * v;
    if (form == Calculus::Ito) {
      v += av * dt + lv * dw;
    } else {
      pred = v + av * dt + lv * dw;
      v += 0.5 * dt * (av + a * pred) + 0.5 * dw * (lv + l0 * pred);
    }
    if (keep_row(n + 1, steps, record_every)) {
      out.times.push_back(static_cast<double>(n + 1) * dt);
      out.vectors.push_back(v);
    }
  }
  return out;
}

double PiecewiseControl::at(double t) const {
  if (value.empty()) return 0.0;
  if (start.size() != value.size()) {
    throw std::invalid_argument("piecewise control: start and value lengths differ");
  }
  const auto it = std::upper_bound(start.begin(), start.end(), t);
  if (it == start.begin()) return value.front();
  return value[static_cast<std::size_t>(it - start.begin()) - 1];
}

PiecewiseControl PiecewiseControl::constant(double v) { return {{0.0}, {v}}; }

VectorPath simulate_deterministic(const ControlModel& model, const CVector& v0,
                                  const PiecewiseControl& w, double horizon, double dt,
                                  double u, std::size_t record_every) {
  if (v0.size() != model.dim()) {
    throw DimensionError("simulate_deterministic: dimension mismatch");
  }
  if (record_every == 0) throw std::invalid_argument("record_every must be positive");
  const std::size_t steps = step_count(horizon, dt);
  const CMatrix a = stratonovich_drift_matrix(model, u);
  const Operator l0 = model.measurement();
  VectorPath out;
  CVector v = v0;
  out.times.push_back(0.0);
  out.vectors.push_back(v);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    const CMatrix m = a + w.at(t + 0.5 * dt) * l0;
    const CVector k1 = m * v;
    const CVector k2 = m * (v + 0.5 * dt * k1);
    const CVector k3 = m * (v + 0.5 * dt * k2);
    const CVector k4 = m * (v + dt * k3);
    v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (keep_row(n + 1, steps, record_every)) {
      out.times.push_back(t + dt);
      out.vectors.push_back(v);
    }
  }
  return out;
}

}  // namespace qstab
