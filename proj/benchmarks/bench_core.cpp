#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "grasp/eval.hpp"
#include "grasp/features.hpp"
#include "grasp/forest.hpp"
#include "grasp/lstm.hpp"
#include "grasp/synth.hpp"

using namespace grasp;

static void BM_FftMagnitudes(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> x(kFftWindow);
  for (double& v : x) v = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(fft_magnitudes(x));
}
BENCHMARK(BM_FftMagnitudes);

static void BM_GenerateTrial(benchmark::State& state) {
  const auto p = sample_scenario_params(Scenario::SuccessfulPick, 3);
  for (auto _ : state) benchmark::DoNotOptimize(generate_trial(Scenario::SuccessfulPick, p));
}
BENCHMARK(BM_GenerateTrial)->Unit(benchmark::kMillisecond);

static void BM_AssembleRfWindows(benchmark::State& state) {
  const Trial t = generate_trial(Scenario::FailedGrasp, sample_scenario_params(Scenario::FailedGrasp, 4));
  FeatureConfig c;
  c.mask = SensorMask::all();
  for (auto _ : state) benchmark::DoNotOptimize(assemble_rf_windows(t, c));
}
BENCHMARK(BM_AssembleRfWindows)->Unit(benchmark::kMillisecond);

static void BM_RfPredict(benchmark::State& state) {
  const Trial t = generate_trial(Scenario::FailedGrasp, sample_scenario_params(Scenario::FailedGrasp, 5));
  FeatureConfig c;
  c.mask = SensorMask::all();
  const auto windows = assemble_rf_windows(t, c, nullptr, 5);
  RfHyperparams hp;
  hp.n_estimators = static_cast<std::size_t>(state.range(0));
  const RfModel model = rf_train(windows, hp);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(rf_predict(model, windows[i++ % windows.size()]));
}
BENCHMARK(BM_RfPredict)->Arg(10)->Arg(100);

static void BM_LstmForward(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const auto m = LstmModel::random(23, h, 1);
  std::vector<double> seq(15 * 23, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(lstm_forward(m, seq));
}
BENCHMARK(BM_LstmForward)->Arg(16)->Arg(64);

static void BM_MajorityFilter(benchmark::State& state) {
  std::mt19937_64 rng(2);
  ClassificationStream s;
  s.predictions.resize(static_cast<std::size_t>(state.range(0)));
  for (auto& p : s.predictions) p = kAllStates[rng() % 4];
  for (auto _ : state) benchmark::DoNotOptimize(majority_filter(s));
}
BENCHMARK(BM_MajorityFilter)->Arg(2000);

BENCHMARK_MAIN();
