#include "grasp/types.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace grasp {

Mask::Mask(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("mask dimensions must be positive");
  cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

void Mask::fill(bool value) { std::fill(cells_.begin(), cells_.end(), value ? 1 : 0); }

std::size_t Mask::index(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) throw std::out_of_range("mask cell out of range");
  return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
}

std::string_view to_string(Scenario s) noexcept {
  return s == Scenario::SuccessfulPick ? "SuccessfulPick" : "FailedGrasp";
}

Scenario parse_scenario(std::string_view name) {
  if (name == "SuccessfulPick") return Scenario::SuccessfulPick;
  if (name == "FailedGrasp") return Scenario::FailedGrasp;
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

void check_trial(const Trial& trial) {
  const auto fail = [&](const std::string& what) {
    throw std::invalid_argument("trial " + trial.id + ": " + what);
  };
  if (trial.frames.empty()) fail("no frames");
  if (trial.labels.size() != trial.frames.size()) fail("label count differs from frame count");
  if (trial.camera.empty()) fail("no camera frames");
  if (trial.slip_velocity && trial.slip_velocity->size() != trial.frames.size())
    fail("kinematics length differs from frame count");

  for (std::size_t i = 0; i < trial.frames.size(); ++i) {
    const SensorFrame& f = trial.frames[i];
    for (int adc : {f.ir, f.tension, f.tactile})
      if (adc < 0 || adc > kAdcMax) fail("ADC value out of range at frame " + std::to_string(i));
    if (f.camera_index >= trial.camera.size()) fail("camera index out of range at frame " + std::to_string(i));
    if (i > 0 && !(f.t > trial.frames[i - 1].t)) fail("time not strictly increasing at frame " + std::to_string(i));
  }
  for (const CameraFrame& c : trial.camera)
    if (std::any_of(c.mask.cells().begin(), c.mask.cells().end(), [](auto v) { return v > 1; }))
      fail("mask cell outside {0,1}");

  if (auto bad = validate_label_sequence(TransitionTable::standard(), trial.labels))
    fail("illegal transition at label " + std::to_string(*bad));
  if (trial.labels.back() != outcome_of(trial.scenario)) fail("final label does not match scenario");
  const std::size_t term = trial.events.terminal_event;
  if (term >= trial.frames.size()) fail("terminal event out of range");
  for (std::size_t i = term; i < trial.labels.size(); ++i)
    if (trial.labels[i] != outcome_of(trial.scenario)) fail("non-terminal label after terminal event");
  if (trial.events.slip_onset && *trial.events.slip_onset >= term) fail("slip onset after terminal event");
}

}  // namespace grasp
