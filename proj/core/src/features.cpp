#include "grasp/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace grasp {

namespace {

struct DftTable {
  std::array<std::array<double, kFftWindow>, kFftBins> cos{};
  std::array<std::array<double, kFftWindow>, kFftBins> sin{};

  DftTable() {
    for (std::size_t k = 0; k < kFftBins; ++k)
      for (std::size_t n = 0; n < kFftWindow; ++n) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * n) % kFftWindow) /
                             static_cast<double>(kFftWindow);
        cos[k][n] = std::cos(angle);
        sin[k][n] = std::sin(angle);
      }
  }
};

const DftTable& dft_table() {
  static const DftTable table;
  return table;
}

constexpr double kAbsentCoordinate = -1.0;

std::vector<std::string_view> split_list(std::string_view list) {
  std::vector<std::string_view> out;
  while (!list.empty()) {
    const auto comma = list.find(',');
    std::string_view token = list.substr(0, comma);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty()) out.push_back(token);
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  return out;
}

/// Camera features for every image of a trial, flattened image-major.
std::vector<double> camera_features(const Trial& trial, const FeatureConfig& config) {
  const std::size_t width = camera_feature_count(config);
  std::vector<double> out;
  if (width == 0) return out;
  out.reserve(trial.camera.size() * width);
  for (const CameraFrame& frame : trial.camera) {
    switch (config.mask.camera_method) {
      case CameraMethod::Com: {
        const auto com = camera_com(frame.mask);
        out.push_back(com ? com->x : kAbsentCoordinate);
        out.push_back(com ? com->y : kAbsentCoordinate);
        break;
      }
      case CameraMethod::Pixel:
        out.push_back(static_cast<double>(camera_pixels(frame.mask)));
        break;
      case CameraMethod::Regions:
        for (bool present : camera_regions(frame.mask, config.regions)) out.push_back(present ? 1.0 : 0.0);
        break;
      case CameraMethod::Pca:
        for (double v : pca_project(*config.pca, frame.mask)) out.push_back(v);
        break;
    }
  }
  return out;
}

std::vector<int SensorFrame::*> enabled_scalars(const SensorMask& mask) {
  std::vector<int SensorFrame::*> out;
  if (mask.ir) out.push_back(&SensorFrame::ir);
  if (mask.tension) out.push_back(&SensorFrame::tension);
  if (mask.tactile) out.push_back(&SensorFrame::tactile);
  return out;
}

std::size_t scalar_count(const SensorMask& mask) {
  return static_cast<std::size_t>(mask.ir) + static_cast<std::size_t>(mask.tension) +
         static_cast<std::size_t>(mask.tactile);
}

}  // namespace

std::array<double, kFftBins> fft_magnitudes(std::span<const double> samples) {
  if (samples.size() != kFftWindow)
    throw std::invalid_argument("FFT window needs exactly 25 samples, got " + std::to_string(samples.size()));
  const DftTable& table = dft_table();
  std::array<double, kFftBins> out{};
  for (std::size_t k = 0; k < kFftBins; ++k) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t n = 0; n < kFftWindow; ++n) {
      re += samples[n] * table.cos[k][n];
      im -= samples[n] * table.sin[k][n];
    }
    out[k] = std::hypot(re, im);
  }
  return out;
}

std::optional<Centroid> camera_com(const Mask& mask) {
  double sx = 0.0;
  double sy = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y)) {
        sx += x;
        sy += y;
        ++count;
      }
  if (count == 0) return std::nullopt;
  return Centroid{sx / static_cast<double>(count), sy / static_cast<double>(count)};
}

std::size_t camera_pixels(const Mask& mask) {
  return static_cast<std::size_t>(std::count(mask.cells().begin(), mask.cells().end(), std::uint8_t{1}));
}

std::vector<bool> camera_regions(const Mask& mask, const RegionGeometry& geometry) {
  std::vector<bool> out;
  out.reserve(geometry.region_count());
  const int half = geometry.size / 2;
  for (int cx : geometry.centres_x) {
    const int x0 = std::max(0, cx - half);
    const int x1 = std::min(mask.width(), cx - half + geometry.size);
    const int y0 = std::max(0, geometry.centre_y - half);
    const int y1 = std::min(mask.height(), geometry.centre_y - half + geometry.size);
    std::size_t set = 0;
    std::size_t cells = 0;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        ++cells;
        set += mask.at(x, y) ? 1 : 0;
      }
    out.push_back(cells > 0 &&
                  static_cast<double>(set) >= geometry.occupancy * static_cast<double>(cells));
  }
  return out;
}

std::string_view to_string(CameraMethod m) noexcept {
  switch (m) {
    case CameraMethod::Com: return "com";
    case CameraMethod::Pixel: return "pixel";
    case CameraMethod::Regions: return "regions";
    case CameraMethod::Pca: return "pca";
  }
  return "?";
}

CameraMethod parse_camera_method(std::string_view name) {
  for (CameraMethod m : {CameraMethod::Com, CameraMethod::Pixel, CameraMethod::Regions, CameraMethod::Pca})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown camera method '" + std::string(name) + "'");
}

void SensorMask::validate() const {
  if (!(imu || ir || tension || tactile || camera))
    throw std::invalid_argument("sensor mask enables no channel");
}

SensorMask parse_sensor_mask(std::string_view list, CameraMethod method) {
  SensorMask mask{false, false, false, false, false, method};
  for (std::string_view token : split_list(list)) {
    if (token == "imu") mask.imu = true;
    else if (token == "ir") mask.ir = true;
    else if (token == "tension") mask.tension = true;
    else if (token == "tactile") mask.tactile = true;
    else if (token == "camera") mask.camera = true;
    else if (token.starts_with("camera:")) {
      mask.camera = true;
      mask.camera_method = parse_camera_method(token.substr(7));
    } else {
      throw std::invalid_argument("unknown sensor '" + std::string(token) + "'");
    }
  }
  mask.validate();
  return mask;
}

std::string sensor_list(const SensorMask& mask) {
  std::string out;
  const auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(mask.imu, "imu");
  add(mask.ir, "ir");
  add(mask.tension, "tension");
  add(mask.tactile, "tactile");
  add(mask.camera, "camera");
  return out;
}

std::string describe(const SensorMask& mask) {
  std::string out;
  const auto add = [&](bool on, std::string name) {
    if (!on) return;
    if (!out.empty()) out += '/';
    out += name;
  };
  std::string camera = "Camera(";
  for (char c : to_string(mask.camera_method)) camera += static_cast<char>(std::toupper(c));
  camera += ')';
  add(mask.imu, "IMU");
  add(mask.ir, "IR");
  add(mask.tension, "Tension");
  add(mask.tactile, "Tactile");
  add(mask.camera, camera);
  return out;
}

std::string_view to_string(ScalarMode m) noexcept {
  switch (m) {
    case ScalarMode::FinalSample: return "final";
    case ScalarMode::WindowMean: return "mean";
    case ScalarMode::AllSamples: return "all";
  }
  return "?";
}

ScalarMode parse_scalar_mode(std::string_view name) {
  for (ScalarMode m : {ScalarMode::FinalSample, ScalarMode::WindowMean, ScalarMode::AllSamples})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown scalar mode '" + std::string(name) + "'");
}

void FeatureConfig::validate() const {
  mask.validate();
  if (mask.camera && mask.camera_method == CameraMethod::Pca && (!pca || !pca->fitted))
    throw std::invalid_argument("camera method pca requires a fitted PCA model");
}

std::size_t camera_feature_count(const FeatureConfig& config) {
  if (!config.mask.camera) return 0;
  switch (config.mask.camera_method) {
    case CameraMethod::Com: return 2;
    case CameraMethod::Pixel: return 1;
    case CameraMethod::Regions: return config.regions.region_count();
    case CameraMethod::Pca: return kPcaComponents;
  }
  return 0;
}

std::size_t rf_feature_count(const FeatureConfig& config) {
  const std::size_t per_scalar = config.scalars == ScalarMode::AllSamples ? kFftWindow : 1;
  return (config.mask.imu ? kImuChannels * kFftBins : 0) + scalar_count(config.mask) * per_scalar +
         camera_feature_count(config);
}

std::size_t frame_feature_count(const FeatureConfig& config) {
  return (config.mask.imu ? kImuChannels : 0) + scalar_count(config.mask) + camera_feature_count(config);
}

double NormalizationParams::apply(std::size_t feature, double value) const {
  const double lo = min[feature];
  const double hi = max[feature];
  if (!(hi > lo)) return 0.0;
  return std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
}

void NormalizationParams::apply_in_place(std::span<double> row) const {
  if (row.size() != size())
    throw std::invalid_argument("normalization expects " + std::to_string(size()) + " features, got " +
                                std::to_string(row.size()));
  for (std::size_t i = 0; i < row.size(); ++i) row[i] = apply(i, row[i]);
}

NormalizationParams fit_normalization(std::span<const double> data, std::size_t width) {
  if (width == 0 || data.empty() || data.size() % width != 0)
    throw std::invalid_argument("normalization needs at least one complete row");
  NormalizationParams p;
  p.min.assign(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(width));
  p.max = p.min;
  for (std::size_t off = width; off < data.size(); off += width)
    for (std::size_t i = 0; i < width; ++i) {
      p.min[i] = std::min(p.min[i], data[off + i]);
      p.max[i] = std::max(p.max[i], data[off + i]);
    }
  return p;
}

NormalizationParams fit_normalization(std::span<const FeatureWindow> windows) {
  if (windows.empty()) throw std::invalid_argument("normalization needs at least one window");
  const std::size_t width = windows.front().values.size();
  NormalizationParams p;
  p.min = windows.front().values;
  p.max = p.min;
  for (const FeatureWindow& w : windows) {
    if (w.values.size() != width) throw std::invalid_argument("windows differ in feature count");
    for (std::size_t i = 0; i < width; ++i) {
      p.min[i] = std::min(p.min[i], w.values[i]);
      p.max[i] = std::max(p.max[i], w.values[i]);
    }
  }
  return p;
}

FeatureWindow apply_normalization(const NormalizationParams& params, FeatureWindow window) {
  params.apply_in_place(window.values);
  return window;
}

std::vector<FeatureWindow> assemble_rf_windows(const Trial& trial, const FeatureConfig& config,
                                               const NormalizationParams* norm, std::size_t stride) {
  config.validate();
  if (stride == 0) throw std::invalid_argument("window stride must be positive");
  const std::size_t n = trial.frames.size();
  if (n < kFftWindow)
    throw std::invalid_argument("trial " + trial.id + " has " + std::to_string(n) +
                                " frames, fewer than one 25-sample window");
  const std::size_t width = rf_feature_count(config);
  if (norm && norm->size() != width)
    throw std::invalid_argument("normalization width " + std::to_string(norm->size()) +
                                " does not match feature count " + std::to_string(width));
  const std::vector<double> camera = camera_features(trial, config);
  const std::size_t cam_width = camera_feature_count(config);
  const auto scalars = enabled_scalars(config.mask);

  // Channel-major IMU copy so each FFT reads a contiguous run.
  std::vector<double> imu;
  if (config.mask.imu) {
    imu.resize(kImuChannels * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < kImuChannels; ++c) imu[c * n + i] = trial.frames[i].imu[c];
  }

  std::vector<FeatureWindow> out;
  out.reserve((n - kFftWindow) / stride + 1);
  for (std::size_t end = kFftWindow - 1; end < n; end += stride) {
    const std::size_t begin = end + 1 - kFftWindow;
    FeatureWindow w;
    w.values.reserve(width);
    if (config.mask.imu) {
      for (std::size_t c = 0; c < kImuChannels; ++c) {
        const auto mags = fft_magnitudes(std::span<const double>(imu.data() + c * n + begin, kFftWindow));
        w.values.insert(w.values.end(), mags.begin(), mags.end());
      }
    }
    for (auto member : scalars) {
      switch (config.scalars) {
        case ScalarMode::FinalSample:
          w.values.push_back(trial.frames[end].*member);
          break;
        case ScalarMode::WindowMean: {
          double sum = 0.0;
          for (std::size_t i = begin; i <= end; ++i) sum += trial.frames[i].*member;
          w.values.push_back(sum / static_cast<double>(kFftWindow));
          break;
        }
        case ScalarMode::AllSamples:
          for (std::size_t i = begin; i <= end; ++i) w.values.push_back(trial.frames[i].*member);
          break;
      }
    }
    if (cam_width > 0) {
      const std::size_t image = trial.frames[end].camera_index;
      w.values.insert(w.values.end(), camera.begin() + static_cast<std::ptrdiff_t>(image * cam_width),
                      camera.begin() + static_cast<std::ptrdiff_t>((image + 1) * cam_width));
    }
    if (norm) norm->apply_in_place(w.values);
    w.label = trial.labels[end];
    w.trial_id = trial.id;
    w.end_frame = end;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<double> frame_features(const Trial& trial, const FeatureConfig& config,
                                   const NormalizationParams* norm) {
  config.validate();
  const std::size_t width = frame_feature_count(config);
  if (norm && norm->size() != width)
    throw std::invalid_argument("normalization width " + std::to_string(norm->size()) +
                                " does not match frame width " + std::to_string(width));
  const std::vector<double> camera = camera_features(trial, config);
  const std::size_t cam_width = camera_feature_count(config);
  const auto scalars = enabled_scalars(config.mask);

  std::vector<double> out;
  out.reserve(trial.frames.size() * width);
  for (const SensorFrame& f : trial.frames) {
    const std::size_t start = out.size();
    if (config.mask.imu) out.insert(out.end(), f.imu.begin(), f.imu.end());
    for (auto member : scalars) out.push_back(f.*member);
    if (cam_width > 0)
      out.insert(out.end(), camera.begin() + static_cast<std::ptrdiff_t>(f.camera_index * cam_width),
                 camera.begin() + static_cast<std::ptrdiff_t>((f.camera_index + 1) * cam_width));
    if (norm) norm->apply_in_place(std::span<double>(out.data() + start, width));
  }
  return out;
}

void SequenceSet::append(const SequenceSet& other) {
  if (other.size() == 0) return;
  if (size() == 0 && data.empty()) {
    seq_len = other.seq_len;
    width = other.width;
  } else if (seq_len != other.seq_len || width != other.width) {
    throw std::invalid_argument("sequence sets differ in shape");
  }
  data.insert(data.end(), other.data.begin(), other.data.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  trial_ids.insert(trial_ids.end(), other.trial_ids.begin(), other.trial_ids.end());
  end_frames.insert(end_frames.end(), other.end_frames.begin(), other.end_frames.end());
}

SequenceSet assemble_lstm_sequences(const Trial& trial, const FeatureConfig& config, std::size_t seq_len,
                                    const NormalizationParams* norm, std::size_t stride) {
  if (seq_len == 0) throw std::invalid_argument("sequence length must be positive");
  if (stride == 0) throw std::invalid_argument("sequence stride must be positive");
  const std::size_t n = trial.frames.size();
  if (n < seq_len)
    throw std::invalid_argument("trial " + trial.id + " has " + std::to_string(n) + " frames, fewer than " +
                                std::to_string(seq_len));
  const std::vector<double> rows = frame_features(trial, config, norm);
  SequenceSet set;
  set.seq_len = seq_len;
  set.width = frame_feature_count(config);
  const std::size_t block = seq_len * set.width;
  const std::size_t count = (n - seq_len) / stride + 1;
  set.data.reserve(count * block);
  for (std::size_t end = seq_len - 1; end < n; end += stride) {
    const std::size_t begin = end + 1 - seq_len;
    set.data.insert(set.data.end(), rows.begin() + static_cast<std::ptrdiff_t>(begin * set.width),
                    rows.begin() + static_cast<std::ptrdiff_t>((end + 1) * set.width));
    set.labels.push_back(trial.labels[end]);
    set.trial_ids.push_back(trial.id);
    set.end_frames.push_back(end);
  }
  return set;
}

}  // namespace grasp
