#include <benchmark/benchmark.h>

#include "usblnav/augmented_ltv.hpp"
#include "usblnav/filters.hpp"
#include "usblnav/observability.hpp"

using namespace usblnav;

namespace {

const std::vector<SimEpoch>& epochs() {
  static const std::vector<SimEpoch> e = [] {
    Scenario sc = default_scenario();
    sc.survey.duration = 60.0;
    sc.noise.seed = 1;
    return simulate(sc);
  }();
  return e;
}

void filter_steps(benchmark::State& state, FilterKind kind) {
  const auto& ep = epochs();
  const ReceiverArray array = default_scenario().array;
  const FilterConfig cfg = FilterConfig::defaults();
  for (auto _ : state) {
    FilterEstimate e =
        initialize(kind, ep[0].truth, ep[0].frame, array, cfg, InitSpec{});
    for (std::size_t k = 1; k < ep.size(); ++k) {
      e = filter_step(e, ep[k].frame, array, cfg);
    }
    benchmark::DoNotOptimize(e.state.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(ep.size() - 1));
}

void BM_LtvStep(benchmark::State& s) { filter_steps(s, FilterKind::Ltv); }
void BM_EkfStep(benchmark::State& s) { filter_steps(s, FilterKind::Ekf); }
void BM_KfpwStep(benchmark::State& s) { filter_steps(s, FilterKind::Kfpw); }

void BM_Simulate60s(benchmark::State& state) {
  Scenario sc = default_scenario();
  sc.survey.duration = 60.0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(sc).size());
}

void BM_Gramian(benchmark::State& state) {
  const Scenario sc = default_scenario();
  const double delta = static_cast<double>(state.range(0));
  const SignalHistory h =
      sample_signals(truth_signal_source(sc), 100.0, 100.0 + delta, 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        gramian(h, sc.array, 100.0, 100.0 + delta, Frame::InertialTransformed)
            .min_eig);
  }
}

void BM_TransitionBlocks(benchmark::State& state) {
  const Scenario sc = default_scenario();
  const SignalHistory h = sample_signals(truth_signal_source(sc), 0.0, 10.0, 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(transition_blocks(h, sc.array, 0.0, 10.0).Phi.data());
  }
}

}  // namespace

BENCHMARK(BM_LtvStep)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EkfStep)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KfpwStep)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate60s)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gramian)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TransitionBlocks)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
