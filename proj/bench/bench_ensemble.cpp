#include "qstab/ensemble.hpp"
#include "qstab/sim.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace qstab;

ControlModel dephasing_qubit() {
  CMatrix sz = CMatrix::Zero(2, 2);
  sz(0, 0) = 1.0;
  sz(1, 1) = -1.0;
  CMatrix sy = CMatrix::Zero(2, 2);
  sy(0, 1) = cplx(0.0, -1.0);
  sy(1, 0) = cplx(0.0, 1.0);
  return make_model(CMatrix::Zero(2, 2), sy, {sz}, 1.0, Decomposition({1, 1}));
}

ControlModel ladder(int n) {
  CMatrix l0 = CMatrix::Zero(n, n);
  CMatrix hf = CMatrix::Zero(n, n);
  CMatrix ho = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) l0(i, i) = 1.0 + i;
  hf(0, 1) = hf(1, 0) = 1.0;
  for (int i = 1; i + 1 < n; ++i) ho(i, i + 1) = ho(i + 1, i) = 1.0;
  return make_model(ho, hf, {l0}, 1.0, Decomposition({1, n - 1}));
}

void BM_SmeStep(benchmark::State& state) {
  const ControlModel m = ladder(static_cast<int>(state.range(0)));
  SmeIntegrator integ(m, 1e-3);
  CMatrix rho = m.target();
  for (auto _ : state) {
    integ.step(rho, 0.5, 1e-3);
    benchmark::DoNotOptimize(rho.data());
  }
}
BENCHMARK(BM_SmeStep)->Arg(2)->Arg(3)->Arg(5);

void BM_EnsembleSerial(benchmark::State& state) {
  const ControlModel m = dephasing_qubit();
  const QuantumState rho0(m.target());
  for (auto _ : state) {
    auto st = run_ensemble_serial(m, rho0, constant_controller(1.0),
                                  static_cast<std::size_t>(state.range(0)), 1.0, 1e-3, 1);
    benchmark::DoNotOptimize(st.chi);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EnsembleSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_EnsembleParallel(benchmark::State& state) {
  const ControlModel m = dephasing_qubit();
  const QuantumState rho0(m.target());
  for (auto _ : state) {
    auto st = run_ensemble(m, rho0, constant_controller(1.0),
                           static_cast<std::size_t>(state.range(0)), 1.0, 1e-3, 1);
    benchmark::DoNotOptimize(st.chi);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EnsembleParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
