#include "qstab/invariance.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace qstab;
using namespace qstab::testing;

namespace {

const CMatrix Z2 = CMatrix::Zero(2, 2);
const Decomposition D11({1, 1});

ControlModel qubit(CMatrix h_o, std::vector<Operator> ls) {
  return make_model(std::move(h_o), Z2, std::move(ls), 1.0, D11);
}

// exp(A t) by scaling and squaring of a Taylor polynomial.
CMatrix expm(const CMatrix& a) {
  const double nrm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (nrm / std::pow(2.0, squarings) > 0.25) ++squarings;
  const CMatrix b = a / std::pow(2.0, squarings);
  CMatrix term = CMatrix::Identity(a.rows(), a.cols());
  CMatrix out = term;
  for (int k = 1; k <= 18; ++k) {
    term = b * term / static_cast<double>(k);
    out += term;
  }
  for (int i = 0; i < squarings; ++i) out = out * out;
  return out;
}

// A with an A-invariant line inside H_R when `hidden` is set.
CMatrix random_drift(Rng& rng, bool hidden) {
  CMatrix a = random_complex(rng, 4, 4);
  if (!hidden) return a;
  CMatrix q = CMatrix::Identity(4, 4);
  q.bottomRightCorner(2, 2) = random_unitary(rng, 2);
  // In the basis (e0, e1, q e2, q e3) make q e3 an eigenvector.
  CMatrix b = q.adjoint() * a * q;
  b.block(0, 3, 3, 1).setZero();
  return q * b * q.adjoint();
}

}  // namespace

TEST_CASE("check_invariant examples") {
  const ControlModel blockdiag = qubit(sz(), {diag2(1, 2), sz()});
  CHECK(check_invariant(blockdiag, D11, 0.0).invariant);

  const ControlModel decay = qubit(Z2, {sminus()});
  const auto rep = check_invariant(decay, D11, 0.0);
  CHECK(rep.invariant);
  CHECK(rep.witnesses.size() == 2);
  CHECK(rep.violations().empty());

  const ControlModel drive = qubit(sx(), {Z2});
  const auto bad = check_invariant(drive, D11, 0.0);
  CHECK_FALSE(bad.invariant);
  const auto v = bad.violations();
  REQUIRE(v.size() == 1);
  CHECK(v[0].condition == kCondHP);
  CHECK(v[0].operator_index == -1);
  CHECK(v[0].residual == doctest::Approx(1.0));

  const ControlModel pump = qubit(Z2, {splus()});
  const auto lq = check_invariant(pump, D11, 0.0).violations();
  REQUIRE(lq.size() == 1);
  CHECK(lq[0].condition == kCondLQ);
  CHECK(lq[0].operator_index == 0);

  CHECK_THROWS_AS(check_invariant(decay, Decomposition({1, 2}), 0.0), DimensionError);
}

TEST_CASE("check_invariant uses H_o + u H_f") {
  const ControlModel m = make_model(Z2, sx(), {sz()}, 1.0, D11);
  CHECK(check_invariant(m, D11, 0.0).invariant);
  CHECK_FALSE(check_invariant(m, D11, 1.0).invariant);
}

TEST_CASE("check_R_not_invariant examples") {
  CHECK(check_R_not_invariant(qubit(Z2, {sminus()}), D11, 0.0));
  CHECK_FALSE(check_R_not_invariant(qubit(sz(), {diag2(1, 3)}), D11, 0.0));
  CHECK_FALSE(check_R_not_invariant(qubit(Z2, {sz()}), D11, 0.0));
}

TEST_CASE("openloop_stabilizable examples") {
  CHECK(openloop_stabilizable(qubit(Z2, {sminus()}), D11) == Stabilizability::Stabilizable);
  CHECK(openloop_stabilizable(qubit(Z2, {sz()}), D11) == Stabilizability::NeedsFeedback);
  CHECK(openloop_stabilizable(qubit(Z2, {splus()}), D11) ==
        Stabilizability::TargetNotInvariantable);
  CHECK(to_string(Stabilizability::NeedsFeedback) == "NeedsFeedback");
}

TEST_CASE("observability_escape examples") {
  CHECK_FALSE(observability_escape(diag2(1, 2), D11));
  CHECK(observability_escape(sx(), D11));
  CMatrix a = CMatrix::Zero(3, 3);
  a(0, 1) = 1.0;
  CHECK_FALSE(observability_escape(a, Decomposition({1, 2})));
}

TEST_CASE("observability_escape agrees with sampled exponential flows") {
  Rng rng(21);
  const Decomposition d({2, 2});
  int hidden_count = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const bool hidden = trial % 2 == 0;
    const CMatrix a = random_drift(rng, hidden);
    CMatrix stacked(6, 2);
    for (int i = 0; i < 3; ++i) {
      const double t = std::array<double, 3>{0.1, 0.5, 1.0}[i];
      stacked.block(2 * i, 0, 2, 2) = expm(a * t).block(0, 2, 2, 2);
    }
    Eigen::JacobiSVD<CMatrix> svd(stacked);
    const bool stays = svd.singularValues()(1) <= 1e-8;
    CHECK(observability_escape(a, d) == !stays);
    hidden_count += stays ? 1 : 0;
  }
  CHECK(hidden_count == 50);
}

TEST_CASE("deterministic_invariance examples") {
  CHECK(deterministic_invariance(qubit(Z2, {sminus()}), D11));
  CHECK_FALSE(deterministic_invariance(qubit(Z2, {splus()}), D11));
  CHECK(deterministic_invariance(qubit(Z2, {}), D11));
}

TEST_CASE("deterministic_invariance agrees with check_invariant on structured models") {
  Rng rng(22);
  int invariant_count = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = uniform_int(rng, 2, 4);
    const int s = uniform_int(rng, 1, n - 1);
    const int r = n - s;
    const Decomposition d({s, r});
    std::vector<Operator> ls;
    const int k = uniform_int(rng, 1, 3);
    for (int i = 0; i < k; ++i) {
      CMatrix l = random_complex(rng, n, n, 0.6);
      if (uniform_int(rng, 0, 3) != 0) l.bottomLeftCorner(r, s).setZero();
      if (uniform_int(rng, 0, 2) == 0) l.topRightCorner(s, r).setZero();
      ls.push_back(l);
    }
    CMatrix h = random_hermitian(rng, n);
    if (uniform_int(rng, 0, 1) == 0) {
      // Solve the P condition: i H_P = 1/2 sum L_S^dag L_P.
      CMatrix p = CMatrix::Zero(s, r);
      for (const auto& l : ls) p += 0.5 * l.topLeftCorner(s, s).adjoint() * l.topRightCorner(s, r);
      const CMatrix hp = -I1 * p;
      h.topRightCorner(s, r) = hp;
      h.bottomLeftCorner(r, s) = hp.adjoint();
    }
    const ControlModel m = make_model(h, CMatrix::Zero(n, n), ls, 1.0, d);
    const bool a = check_invariant(m, d, 0.0).invariant;
    CHECK(a == deterministic_invariance(m, d));
    invariant_count += a ? 1 : 0;
  }
  CHECK(invariant_count > 100);
  CHECK(invariant_count < 900);
}

TEST_CASE("lemma_aux_conditions examples") {
  const Decomposition d3({1, 1, 1});
  const std::vector<CMatrix> probes = {CMatrix::Identity(1, 1)};

  const ControlModel dead = make_model(CMatrix::Zero(3, 3), CMatrix::Zero(3, 3),
                                       {CMatrix::Identity(3, 3)}, 1.0, d3);
  const auto none = lemma_aux_conditions(dead, d3, probes);
  CHECK_FALSE(none.scond_universal);
  REQUIRE(none.probes.size() == 1);
  CHECK_FALSE(none.probes[0].satisfied);

  CMatrix lw = CMatrix::Zero(3, 3);
  lw(1, 2) = 1.0;
  const ControlModel noisy = make_model(CMatrix::Zero(3, 3), CMatrix::Zero(3, 3), {lw}, 1.0, d3);
  CHECK(lemma_aux_conditions(noisy, d3, probes).scond_universal);

  CMatrix l0 = CMatrix::Zero(3, 3);
  l0.diagonal() << 1, 2, 3;
  CMatrix h = CMatrix::Zero(3, 3);
  h(1, 2) = 0.7;
  h(2, 1) = 0.7;
  const ControlModel drift = make_model(h, CMatrix::Zero(3, 3), {l0}, 1.0, d3);
  const auto rep = lemma_aux_conditions(drift, d3, probes);
  CHECK_FALSE(rep.scond_universal);
  CHECK(rep.probes[0].scond_norm == 0.0);
  CHECK(rep.probes[0].pcond_norm == doctest::Approx(0.7));
  CHECK(rep.probes[0].satisfied);
  CHECK(std::abs(rep.pcond_operator(0, 0) - cplx(0.0, -0.7)) < 1e-15);

  CHECK_THROWS_AS(lemma_aux_conditions(drift, Decomposition({1, 2}), probes), DimensionError);
}

TEST_CASE("stationary_support examples") {
  const auto decay = stationary_support(qubit(Z2, {sminus()}), 0.0, D11);
  CHECK(decay.kernel_dimension == 1);
  CHECK_FALSE(decay.has_R_supported_stationary_state);
  CHECK_FALSE(decay.offending_state.has_value());

  const auto zero = stationary_support(qubit(Z2, {}), 0.0, D11);
  CHECK(zero.kernel_dimension == 4);
  CHECK(zero.has_R_supported_stationary_state);
  REQUIRE(zero.offending_state.has_value());
  CHECK((zero.offending_state->rho() - diag2(0, 1)).norm() < 1e-12);

  const auto deph = stationary_support(qubit(Z2, {sz()}), 0.0, D11);
  CHECK(deph.has_R_supported_stationary_state);
  REQUIRE(deph.offending_state.has_value());
  CHECK((deph.offending_state->rho() - diag2(0, 1)).norm() < 1e-12);
  CHECK(deph.conclusive);
}

TEST_CASE("stationary_support offending states are stationary and supported on R") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = uniform_int(rng, 3, 5);
    // Block-diagonal models leave H_R invariant, so an R-supported
    // stationary state must exist.
    std::vector<Operator> ls;
    CMatrix l = random_complex(rng, n, n);
    l.topRightCorner(1, n - 1).setZero();
    l.bottomLeftCorner(n - 1, 1).setZero();
    ls.push_back(l);
    CMatrix h = random_hermitian(rng, n);
    h.topRightCorner(1, n - 1).setZero();
    h.bottomLeftCorner(n - 1, 1).setZero();
    const ControlModel m = make_model(h, CMatrix::Zero(n, n), ls, 1.0, Decomposition({1, n - 1}));
    const auto rep = stationary_support(m, 0.0, m.decomp);
    REQUIRE(rep.has_R_supported_stationary_state);
    const CMatrix& st = rep.offending_state->rho();
    CHECK(validate_state(st, 1e-9).passed());
    CHECK(lindblad_rhs(m, st, 0.0).norm() < 1e-8);
    CHECK(std::abs(st(0, 0)) < 1e-9);
  }
}
