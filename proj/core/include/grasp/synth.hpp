#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "grasp/types.hpp"

namespace grasp {

/// Additive Gaussian noise per channel family; defaults are 2% of channel range.
struct NoiseLevels {
  double accel = 0.02 * 4.0 * 9.80665;                     // m/s^2, range +/-2 g
  double gyro = 0.02 * 2.0 * 250.0 * 3.14159265358979 / 180.0;  // rad/s, range +/-250 deg/s
  double adc = 0.02 * kAdcMax;                             // counts
  double camera_px = 0.4;                                  // blob centre jitter, pixels
};

struct ScenarioParams {
  double pull_speed_mm_s = 20.0;
  double pull_distance_mm = 180.0;
  /// Quiet data before the pull starts and after it ends.
  double settle_s = 0.5;
  /// Fraction of the pull at which slip begins; absent for a clean pick.
  std::optional<double> slip_onset_fraction;
  /// Fraction of the pull at which separation (or grasp loss) happens.
  double terminal_fraction = 0.7;
  NoiseLevels noise;
  std::uint64_t seed = 0;

  double pull_duration_s() const { return pull_distance_mm / pull_speed_mm_s; }
  double trial_duration_s() const { return 2.0 * settle_s + pull_duration_s(); }

  /// Throws std::invalid_argument when a field is out of its documented range.
  void validate() const;
};

/// Draws a randomized scenario (speed, slip presence, event fractions) from `seed`.
/// Failed grasps always slip first; successful picks slip in roughly half the draws.
ScenarioParams sample_scenario_params(Scenario scenario, std::uint64_t seed);

struct TensionSignature {
  double pretension = 250.0;
  double pretension_spread = 25.0;
  double peak = 800.0;
  double peak_spread = 50.0;
  double rise_time_s = 1.5;
  double slip_dip_depth = 0.3;
  double stick_slip_hz = 3.0;
  /// Level left on the sensor by a picked fruit hanging in the gripper.
  double picked_residual = 120.0;
  double picked_residual_spread = 15.0;
  double empty_baseline = 15.0;
  double release_time_s = 0.02;
};

struct ImuSignature {
  double finger_tilt_rad = 0.2;
  double arm_vibration_hz = 12.0;
  double arm_vibration_accel = 0.6;
  double arm_vibration_gyro = 0.08;
  /// Finger accel x offset at peak tension (compliant finger deflection under load).
  double load_deflection_accel = 1.5;
  double slip_band_low_hz = 40.0;
  double slip_band_high_hz = 70.0;
  double slip_vibration_accel = 3.0;
  double slip_vibration_gyro = 0.6;
  double body_coupling = 0.3;
  double jerk_accel = 6.0;
  double jerk_hz = 30.0;
  double jerk_decay_s = 0.05;
  /// Finger accel x offset once the fruit has left and the fingers close.
  double finger_collapse_accel = 4.0;
  double collapse_time_s = 0.03;
};

/// Reflectance / contact channel (IR, tactile).
struct PresenceSignature {
  double present_level = 800.0;
  double present_spread = 60.0;
  double absent_baseline = 60.0;
  /// Fractional level loss accumulated over a full slip segment.
  double slip_drift = 0.25;
  double drop_time_s = 0.01;
  double reseat_time_s = 0.3;
};

struct CameraSignature {
  int width = Mask::kDefaultWidth;
  int height = Mask::kDefaultHeight;
  double blob_radius_px = 10.5;
  double blob_radius_spread = 1.0;
  double centre_spread_px = 1.5;
  double px_per_mm = 0.8;
  double exit_speed_px_s = 400.0;
  double reseat_time_s = 0.3;
};

struct SlipKinematics {
  double start_speed_mm_s = 2.0;
  double end_speed_mm_s = 10.0;
};

struct SignatureModel {
  TensionSignature tension;
  ImuSignature imu;
  PresenceSignature ir;
  PresenceSignature tactile{.present_level = 650.0,
                            .present_spread = 50.0,
                            .absent_baseline = 30.0,
                            .slip_drift = 0.3,
                            .drop_time_s = 0.01,
                            .reseat_time_s = 0.3};
  CameraSignature camera;
  SlipKinematics slip;

  /// Enforces the separability floor: every fruit-present level (minus its spread)
  /// sits at least 3 noise sigmas above the fruit-absent baseline.
  void validate(const NoiseLevels& noise) const;
};

/// Generates one labeled trial. Deterministic in (scenario, params, model).
/// Throws std::invalid_argument on invalid params or a trial shorter than two FFT windows.
Trial generate_trial(Scenario scenario, const ScenarioParams& params,
                     const SignatureModel& model = {});

struct SplitCounts {
  std::size_t n_success = 0;
  std::size_t n_fail = 0;
  std::size_t total() const noexcept { return n_success + n_fail; }
};

struct DatasetCounts {
  SplitCounts train{30, 30};
  SplitCounts validation{10, 10};
  SplitCounts test{10, 10};

  /// Splits each total as evenly as possible, the extra trial going to SuccessfulPick.
  static DatasetCounts from_totals(std::size_t train, std::size_t validation, std::size_t test);
};

enum class Split : std::uint8_t { Train = 0, Validation = 1, Test = 2 };

std::string_view to_string(Split s) noexcept;

/// Seed of trial `index` within `split`: base_seed XOR splitmix64(split << 32 | index).
std::uint64_t trial_seed(std::uint64_t base_seed, Split split, std::size_t index) noexcept;

/// Throws std::invalid_argument if any split has fewer than one trial per scenario.
Dataset generate_dataset(const DatasetCounts& counts, std::uint64_t base_seed,
                         const SignatureModel& model = {});

/// Relative fruit-gripper speed (mm/s) per frame. Throws if the trial carries no kinematics.
const std::vector<double>& slip_severity_profile(const Trial& trial);

}  // namespace grasp
