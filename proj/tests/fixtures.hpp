#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "grasp/types.hpp"

namespace grasp::testing {

inline void draw_disc(Mask& m, double cx, double cy, double r) {
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y);
}

/// Small hand-made trial: NoSlip for the first 40%, Slip until 70%, then the outcome.
inline Trial make_trial(std::size_t n, Scenario scenario = Scenario::SuccessfulPick, const std::string& id = "t") {
  Trial t;
  t.id = id;
  t.scenario = scenario;
  const std::size_t onset = n * 4 / 10;
  const std::size_t term = n * 7 / 10;
  t.events.slip_onset = onset;
  t.events.terminal_event = term;
  for (std::size_t i = 0; i < n; ++i) {
    SensorFrame f;
    f.t = static_cast<double>(i) / kSensorRateHz;
    for (std::size_t c = 0; c < kImuChannels; ++c)
      f.imu[c] = std::sin(0.3 * static_cast<double>(i) * static_cast<double>(c + 1)) + 0.1 * static_cast<double>(c);
    f.ir = static_cast<int>(500 + (i * 7) % 300);
    f.tension = static_cast<int>(200 + (i * 13) % 500);
    f.tactile = static_cast<int>(100 + (i * 3) % 400);
    f.camera_index = i / kFramesPerImage;
    t.frames.push_back(f);
    t.labels.push_back(i < onset  ? GraspState::NoSlip
                       : i < term ? GraspState::Slip
                                  : outcome_of(scenario));
  }
  const std::size_t images = (n + kFramesPerImage - 1) / kFramesPerImage;
  for (std::size_t k = 0; k < images; ++k) {
    CameraFrame c{static_cast<double>(k) / kCameraRateHz, Mask()};
    draw_disc(c.mask, 20.0 + static_cast<double>(k % 20), 24.0, 6.0);
    t.camera.push_back(std::move(c));
  }
  return t;
}

}  // namespace grasp::testing
