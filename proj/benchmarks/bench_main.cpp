#include <benchmark/benchmark.h>

#include "musculo/control/controller.hpp"
#include "musculo/control/estimator.hpp"
#include "musculo/plant/plant.hpp"
#include "musculo/rmae/model.hpp"

using namespace musculo;

namespace {

const RmaeModel& model() {
  static const RmaeModel m = RmaeModel::create(1, 3, 1);
  return m;
}

const Vector kF{{30.0, 60.0, 20.0}};
const Vector kL{{-4.0, 2.0, 6.0}};

void BM_ForwardBackwardBatch(benchmark::State& state) {
  const auto& m = model();
  const Matrix x = Matrix::Random(m.input_dim(), state.range(0));
  for (auto _ : state) {
    const auto enc = nn::forward(m.encoder(), x);
    const auto dec = nn::forward(m.decoder(), enc.output);
    const auto gd = nn::backward(dec.tape, m.decoder(), dec.output);
    benchmark::DoNotOptimize(nn::backward(enc.tape, m.encoder(), gd.input_grads));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackwardBatch)->Arg(1)->Arg(10)->Arg(100);

void BM_EstimateDirect(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(control::estimate_direct(model(), kF, kL));
}
BENCHMARK(BM_EstimateDirect);

// budget 10 ms (100 Hz)
void BM_EstimateA(benchmark::State& state) {
  const RuptureState r = RuptureState::all_healthy(3).with_ruptured(1);
  const Vector prev{{0.5}};
  for (auto _ : state) benchmark::DoNotOptimize(control::estimate_a(model(), prev, kF, kL, r));
}
BENCHMARK(BM_EstimateA);

// budget 100 ms (10 Hz)
void BM_EstimateAPrime(benchmark::State& state) {
  const RuptureState r = RuptureState::all_healthy(3).with_ruptured(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(control::estimate_a_prime(model(), kF, kL, r, control::a_prime_weights(),
                                                       control::a_prime_descent()));
  }
}
BENCHMARK(BM_EstimateAPrime)->Unit(benchmark::kMillisecond);

void BM_SolveControl(benchmark::State& state) {
  const RuptureState r = RuptureState::all_healthy(3);
  const auto w = control::smooth_control_weights();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        control::solve_control(model(), Vector{{0.8}}, Vector{{0.6}}, kF, r, w, {}));
  }
}
BENCHMARK(BM_SolveControl)->Unit(benchmark::kMillisecond);

void BM_PlantStep(benchmark::State& state) {
  const auto cfg = state.range(0) == 0 ? plant::default_elbow_config() : plant::planar_arm_config();
  plant::PlantState s = plant::initial_state(cfg, Vector::Constant(cfg.joints(), 0.4));
  const Vector cmd = s.l_ref;
  for (auto _ : state) plant::step(s, cfg, cmd);
}
BENCHMARK(BM_PlantStep)->Arg(0)->Arg(1);

}  // namespace
BENCHMARK_MAIN();
