#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grasp/state.hpp"

namespace grasp {

inline constexpr double kSensorRateHz = 150.0;
inline constexpr double kCameraRateHz = 30.0;
/// Sensor frames per camera frame (150 / 30).
inline constexpr std::size_t kFramesPerImage = 5;

/// Three IMUs (body, left finger, right finger), each accel xyz then gyro xyz.
inline constexpr std::size_t kImuCount = 3;
inline constexpr std::size_t kImuChannels = 18;
inline constexpr int kAdcMax = 1023;

/// IMU quantization: +/-2 g and +/-250 deg/s full scale on a 16-bit converter.
inline constexpr double kAccelLsb = 9.80665 / 16384.0;
inline constexpr double kGyroLsb = (250.0 / 32768.0) * 3.14159265358979323846 / 180.0;

constexpr bool is_accel_channel(std::size_t channel) noexcept { return channel % 6 < 3; }
constexpr double imu_lsb(std::size_t channel) noexcept {
  return is_accel_channel(channel) ? kAccelLsb : kGyroLsb;
}

struct SensorFrame {
  double t = 0.0;
  std::array<double, kImuChannels> imu{};
  int ir = 0;
  int tension = 0;
  int tactile = 0;
  std::size_t camera_index = 0;

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

/// Binary fruit-segmentation mask, row-major, cell (x, y) at y * width + x.
class Mask {
 public:
  static constexpr int kDefaultWidth = 64;
  static constexpr int kDefaultHeight = 48;

  Mask() : Mask(kDefaultWidth, kDefaultHeight) {}
  Mask(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return cells_.size(); }

  bool at(int x, int y) const { return cells_[index(x, y)] != 0; }
  void set(int x, int y, bool value = true) { cells_[index(x, y)] = value ? 1 : 0; }
  void fill(bool value);

  const std::vector<std::uint8_t>& cells() const noexcept { return cells_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int x, int y) const;

  int width_;
  int height_;
  std::vector<std::uint8_t> cells_;
};

struct CameraFrame {
  double t = 0.0;
  Mask mask;

  friend bool operator==(const CameraFrame&, const CameraFrame&) = default;
};

enum class Scenario : std::uint8_t { SuccessfulPick, FailedGrasp };

std::string_view to_string(Scenario s) noexcept;
Scenario parse_scenario(std::string_view name);

constexpr GraspState outcome_of(Scenario s) noexcept {
  return s == Scenario::SuccessfulPick ? GraspState::SuccessfulPick : GraspState::FailedGrasp;
}

struct TrialEvents {
  std::optional<std::size_t> slip_onset;
  /// First frame carrying the terminal label (separation or grasp loss).
  std::size_t terminal_event = 0;

  friend bool operator==(const TrialEvents&, const TrialEvents&) = default;
};

struct Trial {
  std::string id;
  Scenario scenario = Scenario::SuccessfulPick;
  std::vector<SensorFrame> frames;
  std::vector<CameraFrame> camera;
  std::vector<GraspState> labels;
  TrialEvents events;
  /// Relative fruit-gripper slip speed per frame (mm/s). Present only on generated trials.
  std::optional<std::vector<double>> slip_velocity;

  std::size_t size() const noexcept { return frames.size(); }

  friend bool operator==(const Trial&, const Trial&) = default;
};

struct Dataset {
  std::vector<Trial> train;
  std::vector<Trial> validation;
  std::vector<Trial> test;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Checks the structural invariants of a trial (lengths, ADC ranges, camera
/// indices, label legality under the standard table). Throws std::invalid_argument.
void check_trial(const Trial& trial);

}  // namespace grasp
