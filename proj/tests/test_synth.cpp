#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "grasp/synth.hpp"

using namespace grasp;

namespace {

double mean_of(const Trial& t, std::size_t from, std::size_t to, int SensorFrame::*field) {
  double s = 0;
  for (std::size_t i = from; i < to; ++i) s += t.frames[i].*field;
  return s / static_cast<double>(to - from);
}

ScenarioParams fixed_params(std::uint64_t seed) {
  ScenarioParams p;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("generate_trial is deterministic") {
  const auto p = sample_scenario_params(Scenario::FailedGrasp, 7);
  const Trial a = generate_trial(Scenario::FailedGrasp, p);
  const Trial b = generate_trial(Scenario::FailedGrasp, p);
  CHECK(a == b);
  const Trial c = generate_trial(Scenario::FailedGrasp, sample_scenario_params(Scenario::FailedGrasp, 8));
  CHECK_FALSE(a == c);
}

TEST_CASE("successful pick keeps the fruit but drops tension") {
  const NoiseLevels noise;
  const SignatureModel model;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Trial t = generate_trial(Scenario::SuccessfulPick, fixed_params(seed));
    const std::size_t T = t.events.terminal_event;
    REQUIRE(T + 50 <= t.size());
    CHECK(mean_of(t, T, T + 50, &SensorFrame::tension) < mean_of(t, 0, T, &SensorFrame::tension));
    CHECK(mean_of(t, T, T + 50, &SensorFrame::tactile) > model.tactile.absent_baseline + 3 * noise.adc);
  }
}

TEST_CASE("failed grasp loses the fruit") {
  const NoiseLevels noise;
  const SignatureModel model;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Trial t = generate_trial(Scenario::FailedGrasp, sample_scenario_params(Scenario::FailedGrasp, seed));
    const std::size_t T = t.events.terminal_event;
    REQUIRE(T + 50 <= t.size());
    CHECK(std::abs(mean_of(t, T, T + 50, &SensorFrame::ir) - model.ir.absent_baseline) < 3 * noise.adc);
    CHECK(std::abs(mean_of(t, T, T + 50, &SensorFrame::tactile) - model.tactile.absent_baseline) < 3 * noise.adc);
  }
}

TEST_CASE("dataset bookkeeping") {
  const DatasetCounts counts{{5, 5}, {5, 5}, {5, 5}};
  DatasetCounts small = counts;
  small.train = {10, 10};
  const Dataset d = generate_dataset(small, 1);
  CHECK(d.train.size() == 20);
  CHECK(d.validation.size() == 10);
  CHECK(d.test.size() == 10);
  for (const auto* split : {&d.train, &d.validation, &d.test}) {
    const auto sp = std::count_if(split->begin(), split->end(),
                                  [](const Trial& t) { return t.scenario == Scenario::SuccessfulPick; });
    CHECK(static_cast<std::size_t>(sp) * 2 == split->size());
  }
  CHECK(d.train.front().id == "train-0000");
  CHECK(d.test.back().id == "test-0009");
  CHECK(generate_dataset(small, 1) == d);
  CHECK_FALSE(generate_dataset(small, 2) == d);
}

TEST_CASE("dataset of 250/50/50 trials") {
  const DatasetCounts c{{125, 125}, {25, 25}, {25, 25}};
  CHECK(c.train.total() + c.validation.total() + c.test.total() == 350);
  const Dataset d = generate_dataset(c, 3);
  CHECK(d.train.size() == 250);
  CHECK(d.validation.size() == 50);
  CHECK(d.test.size() == 50);
}

TEST_CASE("dataset count helpers and errors") {
  const auto c = DatasetCounts::from_totals(60, 21, 20);
  CHECK(c.train.n_success == 30);
  CHECK(c.validation.n_success == 11);
  CHECK(c.validation.n_fail == 10);
  CHECK_THROWS_AS(generate_dataset(DatasetCounts::from_totals(2, 1, 2), 1), std::invalid_argument);
  CHECK(trial_seed(5, Split::Train, 0) != trial_seed(5, Split::Test, 0));
  CHECK(trial_seed(5, Split::Train, 1) != trial_seed(5, Split::Train, 2));
}

TEST_CASE("slip severity profile") {
  ScenarioParams clean = fixed_params(11);
  const Trial a = generate_trial(Scenario::SuccessfulPick, clean);
  const auto& va = slip_severity_profile(a);
  CHECK(va.size() == a.size());
  for (std::size_t i = 0; i < a.events.terminal_event; ++i) CHECK(va[i] == 0.0);

  ScenarioParams slip = fixed_params(12);
  slip.slip_onset_fraction = 0.5;
  const Trial b = generate_trial(Scenario::SuccessfulPick, slip);
  const auto& vb = slip_severity_profile(b);
  // pull starts after 0.5 s of settle; onset sits half way into the pull
  const auto pull_start = static_cast<std::size_t>(std::llround(0.5 * kSensorRateHz));
  const auto pull = static_cast<std::size_t>(std::llround(slip.pull_duration_s() * kSensorRateHz));
  const std::size_t expect = pull_start + pull / 2;
  const auto first = static_cast<std::size_t>(
      std::find_if(vb.begin(), vb.end(), [](double v) { return v > 0; }) - vb.begin());
  CHECK(first + 1 >= expect);
  CHECK(first <= expect + 1);
  CHECK(b.events.slip_onset == first);

  Trial bare = b;
  bare.slip_velocity.reset();
  CHECK_THROWS_AS(slip_severity_profile(bare), std::invalid_argument);
}

TEST_CASE("generated trials are legal and follow the rate model") {
  const auto table = TransitionTable::standard();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scenario s = seed % 2 ? Scenario::FailedGrasp : Scenario::SuccessfulPick;
    const Trial t = generate_trial(s, sample_scenario_params(s, seed));
    CHECK_FALSE(validate_label_sequence(table, t.labels).has_value());
    CHECK_NOTHROW(check_trial(t));
    CHECK(t.labels.back() == outcome_of(s));
    const std::size_t expect = (t.size() + 4) / 5;
    CHECK(t.camera.size() + 1 >= expect);
    CHECK(t.camera.size() <= expect + 1);
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t c = 0; c < kImuChannels; ++c) {
        const double counts = t.frames[i].imu[c] / imu_lsb(c);
        CHECK(std::abs(counts - std::round(counts)) < 1e-6);
      }
    }
  }
}

TEST_CASE("tension separates attached from picked") {
  std::vector<double> attached;
  std::vector<double> picked;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Trial t = generate_trial(Scenario::SuccessfulPick, sample_scenario_params(Scenario::SuccessfulPick, seed));
    const std::size_t T = t.events.terminal_event;
    for (std::size_t i = 0; i < t.size(); ++i)
      (i < T ? attached : picked).push_back(t.frames[i].tension);
  }
  std::sort(attached.begin(), attached.end());
  std::sort(picked.begin(), picked.end());
  const double attached_q05 = attached[attached.size() / 20];
  const auto overlap = static_cast<double>(picked.end() - std::lower_bound(picked.begin(), picked.end(), attached_q05)) /
                       static_cast<double>(picked.size());
  CHECK(overlap < 0.05);
}

TEST_CASE("parameter validation") {
  ScenarioParams p;
  p.pull_speed_mm_s = 30;
  CHECK_THROWS_AS(generate_trial(Scenario::SuccessfulPick, p), std::invalid_argument);
  p = {};
  p.slip_onset_fraction = 0.8;
  CHECK_THROWS_AS(generate_trial(Scenario::SuccessfulPick, p), std::invalid_argument);
  p = {};
  p.pull_distance_mm = 1;
  p.settle_s = 0;
  CHECK_THROWS_AS(generate_trial(Scenario::SuccessfulPick, p), std::invalid_argument);
  SignatureModel m;
  m.ir.present_level = 70;
  CHECK_THROWS_AS(generate_trial(Scenario::SuccessfulPick, ScenarioParams{}, m), std::invalid_argument);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto fg = sample_scenario_params(Scenario::FailedGrasp, seed);
    CHECK(fg.slip_onset_fraction.has_value());
    CHECK(fg.pull_speed_mm_s >= 15.0);
    CHECK(fg.pull_speed_mm_s <= 25.0);
    CHECK_NOTHROW(fg.validate());
  }
}

TEST_CASE("check_trial rejects broken trials") {
  Trial t = generate_trial(Scenario::FailedGrasp, sample_scenario_params(Scenario::FailedGrasp, 3));
  CHECK_NOTHROW(check_trial(t));
  Trial bad = t;
  bad.frames[10].tension = 2000;
  CHECK_THROWS_AS(check_trial(bad), std::invalid_argument);
  bad = t;
  bad.labels.back() = GraspState::SuccessfulPick;
  CHECK_THROWS_AS(check_trial(bad), std::invalid_argument);
  bad = t;
  bad.labels.pop_back();
  CHECK_THROWS_AS(check_trial(bad), std::invalid_argument);
  bad = t;
  bad.camera.pop_back();
  CHECK_THROWS_AS(check_trial(bad), std::invalid_argument);
}

TEST_CASE("pull defaults") {
  const ScenarioParams p;
  CHECK(p.pull_distance_mm == 180.0);
  CHECK(p.settle_s == 0.5);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = sample_scenario_params(Scenario::SuccessfulPick, seed);
    CHECK(s.pull_speed_mm_s >= 15.0);
    CHECK(s.pull_speed_mm_s <= 25.0);
  }
}
