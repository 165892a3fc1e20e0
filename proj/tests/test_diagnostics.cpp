#include "qstab/diagnostics.hpp"
#include "qstab/synthesis.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace qstab;
using namespace qstab::testing;

namespace {

const CMatrix Z2 = CMatrix::Zero(2, 2);
const Decomposition D11({1, 1});

}  // namespace

TEST_CASE("V1 examples") {
  CHECK(V1(CMatrix::Identity(2, 2) / 2.0, D11) == doctest::Approx(0.5));
  CHECK(V1(diag2(1, 0), D11) == 0.0);
  CHECK(V1(diag2(0, 1), D11) == 1.0);
  CHECK_THROWS_AS(V1(CMatrix::Identity(3, 3), D11), DimensionError);
}

TEST_CASE("V2 examples") {
  const CMatrix rd = diag2(1, 0);
  CHECK(V2(rd, rd) == 0.0);
  CHECK(V2(diag2(0, 1), rd) == 1.0);
  CHECK(V2(CMatrix::Identity(2, 2) / 2.0, rd) == doctest::Approx(0.75));
}

TEST_CASE("set_distance_proxy examples") {
  CHECK(set_distance_proxy(diag2(1, 0), D11) == 0.0);
  CHECK(set_distance_proxy(diag2(0, 1), D11) == doctest::Approx(1.0));
  CHECK(set_distance_proxy(CMatrix::Identity(2, 2) / 2.0, D11) == doctest::Approx(0.5));
}

TEST_CASE("Lyapunov functions on random states") {
  Rng rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = uniform_int(rng, 2, 5);
    const int s = uniform_int(rng, 1, n - 1);
    const Decomposition d({s, n - s}, random_unitary(rng, n));
    const CMatrix a = random_state(rng, n);
    const CMatrix b = random_state(rng, n);
    const double lam = uniform(rng, 0, 1);
    const double lhs = V1(lam * a + (1.0 - lam) * b, d);
    CHECK(std::abs(lhs - (lam * V1(a, d) + (1.0 - lam) * V1(b, d))) < 1e-14);
    CHECK(V1(a, d) >= -1e-14);
    CHECK(V1(a, d) <= 1.0 + 1e-14);
    const CMatrix rd = outer(random_unit_vector(rng, n));
    CHECK(V2(a, rd) >= -1e-14);
    CHECK(V2(a, rd) <= 1.0 + 1e-14);

    // States inside I_S: both characterizations vanish.
    const CMatrix p = projector(d, 0);
    const CMatrix inside = p * random_state(rng, n) * p;
    const CMatrix in_state = inside / inside.trace().real();
    CHECK(V1(in_state, d) < 1e-12);
    CHECK(set_distance_proxy(in_state, d) < 1e-12);
    CHECK((set_distance_proxy(a, d) > 1e-9) == (V1(a, d) > 1e-9));
  }
}

TEST_CASE("V1 does not increase along the master equation when H_S is invariant") {
  Rng rng(72);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = uniform_int(rng, 2, 4);
    const int s = uniform_int(rng, 1, n - 1);
    const ControlModel base = openloop_class_model(rng, n, s);
    const ControlModel m = base.with_extra_hamiltonian(enforce_invariance(base, base.decomp));
    const Trajectory tr = propagate_me(m, QuantumState(random_state(rng, n)), 0.0, 3.0, 1e-2);
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr.v1[i] <= tr.v1[i - 1] + 1e-6);
  }
}

TEST_CASE("LyapunovProbe matches the free functions") {
  Rng rng(73);
  const Decomposition d({1, 2});
  const CMatrix rd = outer(CVector(CVector::Unit(3, 0)));
  const LyapunovProbe probe(d, &rd);
  const LyapunovProbe blind(d, nullptr);
  const CMatrix rho = random_state(rng, 3);
  CHECK(probe.v1(rho) == doctest::Approx(V1(rho, d)));
  CHECK(probe.v2(rho) == doctest::Approx(V2(rho, rd)));
  CHECK(std::isnan(blind.fidelity(rho)));
  CHECK_FALSE(blind.has_target());
}

TEST_CASE("chi_estimate") {
  EnsembleStats st;
  st.v1_samples = Eigen::MatrixXd::Ones(10, 4);
  CHECK(chi_estimate(st).value == 1.0);
  CHECK(chi_estimate(st).standard_error == 0.0);

  Eigen::MatrixXd v(4, 3);
  v << 1.0, 0.5, 0.6,
       1.0, 0.1, 0.2,
       1.0, 0.3, 0.1,
       1.0, 0.3, 0.3;
  st.v1_samples = v;
  const ChiEstimate c = chi_estimate(st, 500, 3);
  CHECK(c.value == doctest::Approx(0.3));
  CHECK(c.standard_error > 0.0);
  CHECK(c.standard_error < 0.2);
  CHECK(chi_estimate(st, 500, 3).standard_error == c.standard_error);

  st.v1_samples.resize(0, 0);
  CHECK_THROWS_AS(chi_estimate(st), std::invalid_argument);
}

TEST_CASE("chi_estimate bootstrap error matches the sampling error of a mean") {
  // One grid point: the bootstrap error of the mean is about sd / sqrt(N).
  Rng rng(74);
  const int n = 400;
  EnsembleStats st;
  st.v1_samples.resize(n, 1);
  for (int i = 0; i < n; ++i) st.v1_samples(i, 0) = uniform(rng, 0, 1);
  const double expected = std::sqrt(1.0 / 12.0 / n);
  CHECK(chi_estimate(st, 200, 1).standard_error == doctest::Approx(expected).epsilon(0.2));
}

TEST_CASE("mixed_R_state") {
  const QuantumState s = mixed_R_state(Decomposition({1, 2}));
  CMatrix expected = CMatrix::Identity(3, 3) / 2.0;
  expected(0, 0) = 0.0;
  CHECK((s.rho() - expected).norm() < 1e-15);
  CHECK_THROWS_AS(mixed_R_state(Decomposition({1, 0})), InvalidStateError);
}

TEST_CASE("choose_synthesis") {
  const ControlModel decay = make_model(Z2, Z2, {sminus()}, 1.0, D11);
  const SynthesisChoice a = choose_synthesis(decay, {ControllerType::Constant, 0.5, 0.0});
  CHECK(a.classification == Stabilizability::Stabilizable);
  CHECK(a.applied);
  CHECK(a.hamiltonian.norm() == 0.0);
  CHECK(a.note == "already stabilizable, no correction needed");

  const ControlModel deph = make_model(Z2, sy(), {sz()}, 1.0, D11);
  const SynthesisChoice b = choose_synthesis(deph, {ControllerType::Constant, 0.5, 0.0});
  CHECK(b.classification == Stabilizability::NeedsFeedback);
  CHECK_FALSE(b.applied);

  const SynthesisChoice c = choose_synthesis(deph, {ControllerType::Switching, 0.5, 0.0});
  CHECK(c.applied);
  CHECK(c.hamiltonian.norm() == 0.0);
}

TEST_CASE("stabilization_report examples") {
  RunConfig run;
  run.trajectories = 100;
  run.horizon = 5.0;
  run.dt = 1e-3;
  run.ensemble.sample_every = 100;

  const ControlModel decay = make_model(Z2, Z2, {sminus()}, 1.0, D11);
  const StabilizationVerdict ok = stabilization_report(decay, {ControllerType::Constant, 0.5, 0.0}, run);
  CHECK(ok.pass);
  CHECK(ok.classification == Stabilizability::Stabilizable);
  CHECK(ok.terminal_v1 < 0.05);

  const ControlModel deph = make_model(Z2, sy(), {sz()}, 1.0, D11);
  const StabilizationVerdict stall = stabilization_report(deph, {ControllerType::Constant, 0.5, 0.0}, run);
  CHECK_FALSE(stall.pass);
  CHECK(stall.terminal_v1 == doctest::Approx(1.0));
  CHECK(stall.chi.value == doctest::Approx(1.0));

  run.horizon = 15.0;
  run.trajectories = 200;
  EnsembleStats stats;
  const StabilizationVerdict fb =
      stabilization_report(deph, {ControllerType::Switching, 0.5, 0.0}, run, &stats);
  CHECK(fb.feedback);
  CHECK(fb.synthesis_applied);
  CHECK(fb.pass);
  CHECK(fb.terminal_fidelity >= 0.95);
  CHECK(stats.sample_count == 200);

  // Same seeds, same verdict.
  const StabilizationVerdict again =
      stabilization_report(deph, {ControllerType::Switching, 0.5, 0.0}, run);
  CHECK(again.terminal_fidelity == fb.terminal_fidelity);
  CHECK(again.chi.value == fb.chi.value);
}
