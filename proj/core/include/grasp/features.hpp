#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grasp/pca.hpp"
#include "grasp/types.hpp"

namespace grasp {

inline constexpr std::size_t kFftWindow = 25;
inline constexpr std::size_t kFftBins = kFftWindow / 2 + 1;  // 13

/// |X_k| for k = 0..12 of the unnormalized 25-point DFT of real input.
/// Throws std::invalid_argument unless exactly 25 samples are given.
std::array<double, kFftBins> fft_magnitudes(std::span<const double> samples);

// ---------------------------------------------------------------------------
// Camera reducers

struct Centroid {
  double x = 0.0;
  double y = 0.0;
};

/// Centroid of the set cells, in cell coordinates. std::nullopt for an empty mask.
std::optional<Centroid> camera_com(const Mask& mask);

std::size_t camera_pixels(const Mask& mask);

/// Axis-aligned square regions laid along the horizontal mid-line of the image.
struct RegionGeometry {
  std::vector<int> centres_x{4, 13, 22, 31, 40, 49, 58};
  int centre_y = 24;
  int size = 8;
  double occupancy = 0.25;

  /// Cells covered by region r: x in [cx - size/2, cx + size/2), same for y, clipped to the mask.
  std::size_t region_count() const noexcept { return centres_x.size(); }
};

std::vector<bool> camera_regions(const Mask& mask, const RegionGeometry& geometry = {});

// ---------------------------------------------------------------------------
// Sensor selection

enum class CameraMethod { Com, Pixel, Regions, Pca };

std::string_view to_string(CameraMethod m) noexcept;
CameraMethod parse_camera_method(std::string_view name);

struct SensorMask {
  bool imu = true;
  bool ir = false;
  bool tension = false;
  bool tactile = false;
  bool camera = false;
  CameraMethod camera_method = CameraMethod::Com;

  static SensorMask all(CameraMethod method = CameraMethod::Com) {
    return {true, true, true, true, true, method};
  }

  /// Throws std::invalid_argument if no channel is enabled.
  void validate() const;

  friend bool operator==(const SensorMask&, const SensorMask&) = default;
};

/// Comma-separated list such as "imu,tension,camera"; `camera` uses `method`.
SensorMask parse_sensor_mask(std::string_view list, CameraMethod method = CameraMethod::Com);
/// Inverse of parse_sensor_mask (camera method not included).
std::string sensor_list(const SensorMask& mask);
/// Human-readable label, e.g. "IMU/Tension/Camera(COM)".
std::string describe(const SensorMask& mask);

/// How non-periodic channels enter a forest window.
enum class ScalarMode { FinalSample, WindowMean, AllSamples };

std::string_view to_string(ScalarMode m) noexcept;
ScalarMode parse_scalar_mode(std::string_view name);

struct FeatureConfig {
  SensorMask mask;
  ScalarMode scalars = ScalarMode::FinalSample;
  RegionGeometry regions;
  /// Required when the camera is enabled with CameraMethod::Pca.
  std::shared_ptr<const PcaModel> pca;

  void validate() const;
};

std::size_t camera_feature_count(const FeatureConfig& config);
/// Width of one forest window: 13 bins per IMU channel, scalars, camera features.
std::size_t rf_feature_count(const FeatureConfig& config);
/// Width of one per-frame vector fed to the recurrent model.
std::size_t frame_feature_count(const FeatureConfig& config);

// ---------------------------------------------------------------------------
// Normalization

struct NormalizationParams {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t size() const noexcept { return min.size(); }
  /// (v - min) / (max - min) clamped to [0, 1]; constant features map to 0.
  double apply(std::size_t feature, double value) const;
  void apply_in_place(std::span<double> row) const;

  friend bool operator==(const NormalizationParams&, const NormalizationParams&) = default;
};

/// Per-feature min and max over row-major `data` of the given width.
NormalizationParams fit_normalization(std::span<const double> data, std::size_t width);

// ---------------------------------------------------------------------------
// Windows

struct FeatureWindow {
  std::vector<double> values;
  GraspState label = GraspState::NoSlip;
  std::string trial_id;
  std::size_t end_frame = 0;
};

NormalizationParams fit_normalization(std::span<const FeatureWindow> windows);
FeatureWindow apply_normalization(const NormalizationParams& params, FeatureWindow window);

/// Sliding 25-sample windows ending at frames 24..n-1 (every `stride`-th one).
/// Labels are taken at the window's final sample. Throws if the trial is shorter than 25 frames.
std::vector<FeatureWindow> assemble_rf_windows(const Trial& trial, const FeatureConfig& config,
                                               const NormalizationParams* norm = nullptr,
                                               std::size_t stride = 1);

/// Per-frame feature matrix (row-major, frames x frame_feature_count).
std::vector<double> frame_features(const Trial& trial, const FeatureConfig& config,
                                   const NormalizationParams* norm = nullptr);

/// Sliding sequences of raw per-frame vectors, stored contiguously.
struct SequenceSet {
  std::size_t seq_len = 0;
  std::size_t width = 0;
  std::vector<double> data;  // size() * seq_len * width
  std::vector<GraspState> labels;
  std::vector<std::string> trial_ids;
  std::vector<std::size_t> end_frames;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> sequence(std::size_t i) const {
    return {data.data() + i * seq_len * width, seq_len * width};
  }
  void append(const SequenceSet& other);
};

/// Sequences ending at frames seq_len-1..n-1 (every `stride`-th one), labeled at the final frame.
SequenceSet assemble_lstm_sequences(const Trial& trial, const FeatureConfig& config,
                                    std::size_t seq_len = 15,
                                    const NormalizationParams* norm = nullptr,
                                    std::size_t stride = 1);

}  // namespace grasp
