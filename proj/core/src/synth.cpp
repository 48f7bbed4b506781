#include "grasp/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "grasp/rng.hpp"

namespace grasp {

namespace {

constexpr double kGravity = 9.80665;
constexpr std::size_t kMinFrames = 50;  // two 25-sample FFT windows

int to_adc(double value) {
  return static_cast<int>(std::clamp(std::round(value), 0.0, static_cast<double>(kAdcMax)));
}

double quantize_imu(double value, std::size_t channel) {
  const double lsb = imu_lsb(channel);
  const double counts = std::clamp(std::round(value / lsb), -32768.0, 32767.0);
  return counts * lsb;
}

/// Relaxes from `from` to `to` with time constant `tau` after `dt` seconds.
double relax(double from, double to, double dt, double tau) {
  return to + (from - to) * std::exp(-dt / tau);
}

void rasterize_disc(Mask& mask, double cx, double cy, double r) {
  mask.fill(false);
  const double r2 = r * r;
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
  const int x1 = std::min(mask.width() - 1, static_cast<int>(std::ceil(cx + r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
  const int y1 = std::min(mask.height() - 1, static_cast<int>(std::ceil(cy + r)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      if (dx * dx + dy * dy <= r2) mask.set(x, y);
    }
}

struct Timeline {
  std::size_t n = 0;
  std::size_t pull_start = 0;
  std::size_t pull_end = 0;
  std::optional<std::size_t> slip_onset;
  std::size_t terminal = 0;
};

Timeline make_timeline(const ScenarioParams& p) {
  Timeline tl;
  const auto settle = static_cast<std::size_t>(std::llround(p.settle_s * kSensorRateHz));
  const auto pull = static_cast<std::size_t>(std::llround(p.pull_duration_s() * kSensorRateHz));
  tl.pull_start = settle;
  tl.pull_end = settle + pull;
  tl.n = settle + pull + settle;
  if (tl.n < kMinFrames) {
    throw std::invalid_argument("trial of " + std::to_string(tl.n) +
                                " frames is shorter than two FFT windows");
  }
  const auto at = [&](double fraction) {
    return tl.pull_start + static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pull)));
  };
  tl.terminal = std::min(at(p.terminal_fraction), tl.n - 1);
  if (p.slip_onset_fraction) {
    tl.slip_onset = at(*p.slip_onset_fraction);
    if (*tl.slip_onset >= tl.terminal) throw std::invalid_argument("slip onset does not precede terminal event");
  }
  return tl;
}

}  // namespace

void ScenarioParams::validate() const {
  if (!(pull_speed_mm_s >= 15.0 && pull_speed_mm_s <= 25.0))
    throw std::invalid_argument("pull speed must lie in [15, 25] mm/s");
  if (!(pull_distance_mm > 0.0)) throw std::invalid_argument("pull distance must be positive");
  if (!(settle_s >= 0.0)) throw std::invalid_argument("settle time must be non-negative");
  if (!(terminal_fraction > 0.0 && terminal_fraction <= 1.0))
    throw std::invalid_argument("terminal fraction must lie in (0, 1]");
  if (slip_onset_fraction &&
      !(*slip_onset_fraction > 0.0 && *slip_onset_fraction < terminal_fraction))
    throw std::invalid_argument("slip onset fraction must lie in (0, terminal fraction)");
  if (!(noise.accel >= 0.0 && noise.gyro >= 0.0 && noise.adc >= 0.0 && noise.camera_px >= 0.0))
    throw std::invalid_argument("noise levels must be non-negative");
}

ScenarioParams sample_scenario_params(Scenario scenario, std::uint64_t seed) {
  Rng rng = make_rng(seed ^ 0xa5a5a5a5a5a5a5a5ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  ScenarioParams p;
  p.seed = seed;
  p.pull_speed_mm_s = uniform(15.0, 25.0);
  const bool slips = scenario == Scenario::FailedGrasp || unit(rng) < 0.5;
  if (slips) {
    const double onset = uniform(0.30, 0.55);
    const double span = scenario == Scenario::FailedGrasp ? uniform(0.20, 0.35) : uniform(0.10, 0.30);
    p.slip_onset_fraction = onset;
    p.terminal_fraction = onset + span;
  } else {
    p.terminal_fraction = uniform(0.50, 0.85);
  }
  return p;
}

void SignatureModel::validate(const NoiseLevels& noise) const {
  const auto floor_check = [&](const PresenceSignature& s, const char* name) {
    if (s.present_level - s.present_spread <= s.absent_baseline + 3.0 * noise.adc)
      throw std::invalid_argument(std::string(name) + " present level is within 3 sigma of its baseline");
  };
  floor_check(ir, "IR");
  floor_check(tactile, "tactile");
  if (tension.pretension - tension.pretension_spread <= tension.empty_baseline + 3.0 * noise.adc)
    throw std::invalid_argument("tension pretension is within 3 sigma of the empty baseline");
  if (camera.width <= 0 || camera.height <= 0) throw std::invalid_argument("camera size must be positive");
  if (!(imu.slip_band_low_hz > 0.0 && imu.slip_band_high_hz < kSensorRateHz / 2.0 &&
        imu.slip_band_low_hz <= imu.slip_band_high_hz))
    throw std::invalid_argument("slip vibration band must lie below Nyquist");
}

Trial generate_trial(Scenario scenario, const ScenarioParams& params, const SignatureModel& model) {
  params.validate();
  model.validate(params.noise);
  const Timeline tl = make_timeline(params);
  const std::size_t n = tl.n;
  const double dt = 1.0 / kSensorRateHz;
  const bool failed = scenario == Scenario::FailedGrasp;
  const GraspState outcome = outcome_of(scenario);

  Rng rng = make_rng(params.seed ^ (failed ? 0x6661696cULL : 0x7069636bULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto spread = [&](double centre, double half_width) {
    return centre + half_width * (2.0 * unit(rng) - 1.0);
  };

  // Per-trial constants: fruit size and placement, rig pretension, vibration modes.
  const TensionSignature& ts = model.tension;
  const ImuSignature& is = model.imu;
  const double pretension = spread(ts.pretension, ts.pretension_spread);
  const double peak = spread(ts.peak, ts.peak_spread);
  const double residual = spread(ts.picked_residual, ts.picked_residual_spread);
  const double ir_present = spread(model.ir.present_level, model.ir.present_spread);
  const double tactile_present = spread(model.tactile.present_level, model.tactile.present_spread);
  const double radius = spread(model.camera.blob_radius_px, model.camera.blob_radius_spread);
  const double cx0 = (model.camera.width - 1) / 2.0 + spread(0.0, model.camera.centre_spread_px);
  const double cy0 = (model.camera.height - 1) / 2.0 + spread(0.0, model.camera.centre_spread_px);
  std::array<double, 3> slip_hz{};
  std::array<double, 3> slip_phase{};
  for (std::size_t k = 0; k < 3; ++k) {
    slip_hz[k] = spread((is.slip_band_low_hz + is.slip_band_high_hz) / 2.0,
                        (is.slip_band_high_hz - is.slip_band_low_hz) / 2.0);
    slip_phase[k] = 2.0 * std::numbers::pi * unit(rng);
  }
  std::array<double, kImuChannels> arm_phase{};
  for (double& ph : arm_phase) ph = 2.0 * std::numbers::pi * unit(rng);
  const double tilt = spread(is.finger_tilt_rad, 0.03);

  Trial trial;
  char id[32];
  std::snprintf(id, sizeof id, "trial-%016llx", static_cast<unsigned long long>(params.seed));
  trial.id = id;
  trial.scenario = scenario;
  trial.events.slip_onset = tl.slip_onset;
  trial.events.terminal_event = tl.terminal;

  // Labels and slip kinematics.
  trial.labels.resize(n);
  std::vector<double> velocity(n, 0.0);
  std::vector<double> displacement(n, 0.0);
  double travelled = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= tl.terminal) {
      trial.labels[i] = outcome;
    } else if (tl.slip_onset && i >= *tl.slip_onset) {
      trial.labels[i] = GraspState::Slip;
      const double progress = static_cast<double>(i - *tl.slip_onset) /
                              static_cast<double>(tl.terminal - *tl.slip_onset);
      velocity[i] = model.slip.start_speed_mm_s +
                    (model.slip.end_speed_mm_s - model.slip.start_speed_mm_s) * progress;
      travelled += velocity[i] * dt;
    } else {
      trial.labels[i] = GraspState::NoSlip;
    }
    displacement[i] = travelled;
  }

  const auto slip_progress = [&](std::size_t i) {
    if (!tl.slip_onset || i < *tl.slip_onset || i >= tl.terminal) return -1.0;
    return static_cast<double>(i - *tl.slip_onset) / static_cast<double>(tl.terminal - *tl.slip_onset);
  };
  const double t_pull = static_cast<double>(tl.pull_start) * dt;
  const double t_term = static_cast<double>(tl.terminal) * dt;

  // Noise-free attached-phase signals.
  const auto attached_tension = [&](std::size_t i) {
    const double t = static_cast<double>(i) * dt;
    double level = pretension;
    if (i >= tl.pull_start) level += (peak - pretension) * (1.0 - std::exp(-(t - t_pull) / ts.rise_time_s));
    const double progress = slip_progress(i);
    if (progress >= 0.0) {
      const double cycle = (t - static_cast<double>(*tl.slip_onset) * dt) * ts.stick_slip_hz;
      level *= 1.0 - ts.slip_dip_depth * (1.0 - (cycle - std::floor(cycle)));
    }
    return level;
  };
  const auto attached_presence = [&](std::size_t i, double present, const PresenceSignature& s) {
    const double progress = slip_progress(i);
    return progress >= 0.0 ? present * (1.0 - s.slip_drift * progress) : present;
  };
  const std::size_t last_attached = tl.terminal > 0 ? tl.terminal - 1 : 0;
  const double tension_at_term = attached_tension(last_attached);
  const double ir_at_term = attached_presence(last_attached, ir_present, model.ir);
  const double tactile_at_term = attached_presence(last_attached, tactile_present, model.tactile);

  trial.frames.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    SensorFrame& f = trial.frames[i];
    const double t = static_cast<double>(i) * dt;
    f.t = t;
    f.camera_index = i / kFramesPerImage;
    const bool after = i >= tl.terminal;
    const double since = t - t_term;

    double tension = 0.0;
    double ir = 0.0;
    double tactile = 0.0;
    if (!after) {
      tension = attached_tension(i);
      ir = attached_presence(i, ir_present, model.ir);
      tactile = attached_presence(i, tactile_present, model.tactile);
    } else if (failed) {
      tension = relax(tension_at_term, ts.empty_baseline, since, ts.release_time_s);
      ir = relax(ir_at_term, model.ir.absent_baseline, since, model.ir.drop_time_s);
      tactile = relax(tactile_at_term, model.tactile.absent_baseline, since, model.tactile.drop_time_s);
    } else {
      tension = relax(tension_at_term, residual, since, ts.release_time_s);
      ir = relax(ir_at_term, ir_present, since, model.ir.reseat_time_s);
      tactile = relax(tactile_at_term, tactile_present, since, model.tactile.reseat_time_s);
    }

    // IMU: gravity, finger deflection under load, arm vibration, slip band, terminal jerk.
    std::array<double, kImuChannels> imu{};
    imu[2] = kGravity;
    imu[6] = kGravity * std::sin(tilt);
    imu[8] = kGravity * std::cos(tilt);
    imu[12] = -kGravity * std::sin(tilt);
    imu[14] = kGravity * std::cos(tilt);

    const double load = std::clamp((tension - pretension) / (peak - pretension), 0.0, 1.0);
    imu[6] += is.load_deflection_accel * load;
    imu[12] -= is.load_deflection_accel * load;

    if (i >= tl.pull_start && i < tl.pull_end) {
      for (std::size_t c = 0; c < kImuChannels; ++c) {
        const double amp = is_accel_channel(c) ? is.arm_vibration_accel : is.arm_vibration_gyro;
        imu[c] += amp * std::sin(2.0 * std::numbers::pi * is.arm_vibration_hz * t + arm_phase[c]);
      }
    }

    const double progress = slip_progress(i);
    if (progress >= 0.0) {
      const double envelope = 0.6 + 0.8 * progress;
      for (std::size_t c = 0; c < kImuChannels; ++c) {
        double band = 0.0;
        for (std::size_t k = 0; k < 3; ++k)
          band += std::sin(2.0 * std::numbers::pi * slip_hz[k] * t + slip_phase[k] + 0.7 * static_cast<double>(c));
        band /= 3.0;
        double amp = is_accel_channel(c) ? is.slip_vibration_accel : is.slip_vibration_gyro;
        if (c < 6) amp *= is.body_coupling;
        imu[c] += envelope * amp * band;
      }
    }

    if (after) {
      const double jerk = is.jerk_accel * std::exp(-since / is.jerk_decay_s) *
                          std::sin(2.0 * std::numbers::pi * is.jerk_hz * since);
      for (std::size_t c = 0; c < kImuChannels; ++c)
        imu[c] += is_accel_channel(c) ? jerk : 0.1 * jerk;
      if (failed) {
        const double closed = is.finger_collapse_accel * (1.0 - std::exp(-since / is.collapse_time_s));
        imu[6] += closed;
        imu[12] -= closed;
      }
    }

    for (std::size_t c = 0; c < kImuChannels; ++c) {
      const double sigma = is_accel_channel(c) ? params.noise.accel : params.noise.gyro;
      f.imu[c] = quantize_imu(imu[c] + sigma * gauss(rng), c);
    }
    f.tension = to_adc(tension + params.noise.adc * gauss(rng));
    f.ir = to_adc(ir + params.noise.adc * gauss(rng));
    f.tactile = to_adc(tactile + params.noise.adc * gauss(rng));
  }

  // Camera: one mask per five sensor frames, captured at the first frame of each group.
  const std::size_t n_images = (n + kFramesPerImage - 1) / kFramesPerImage;
  trial.camera.reserve(n_images);
  const double x_at_term = cx0 + model.camera.px_per_mm * displacement[last_attached];
  for (std::size_t j = 0; j < n_images; ++j) {
    const std::size_t i = j * kFramesPerImage;
    const double t = static_cast<double>(i) * dt;
    double cx = cx0 + model.camera.px_per_mm * displacement[i];
    double cy = cy0;
    if (i >= tl.terminal) {
      const double since = t - t_term;
      if (failed) {
        cx = x_at_term;
        cy = cy0 + model.camera.exit_speed_px_s * since;
      } else {
        cx = relax(x_at_term, cx0, since, model.camera.reseat_time_s);
      }
    }
    cx += params.noise.camera_px * gauss(rng);
    cy += params.noise.camera_px * gauss(rng);
    CameraFrame frame{t, Mask(model.camera.width, model.camera.height)};
    rasterize_disc(frame.mask, cx, cy, radius);
    trial.camera.push_back(std::move(frame));
  }

  trial.slip_velocity = std::move(velocity);
  return trial;
}

DatasetCounts DatasetCounts::from_totals(std::size_t train, std::size_t validation, std::size_t test) {
  const auto halve = [](std::size_t total) { return SplitCounts{total - total / 2, total / 2}; };
  return {halve(train), halve(validation), halve(test)};
}

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "?";
}

std::uint64_t trial_seed(std::uint64_t base_seed, Split split, std::size_t index) noexcept {
  return base_seed ^ splitmix64((static_cast<std::uint64_t>(split) << 32) | index);
}

Dataset generate_dataset(const DatasetCounts& counts, std::uint64_t base_seed, const SignatureModel& model) {
  Dataset ds;
  const auto fill = [&](Split split, const SplitCounts& c, std::vector<Trial>& out) {
    if (c.n_success < 1 || c.n_fail < 1)
      throw std::invalid_argument(std::string(to_string(split)) +
                                  " split needs at least one trial per scenario");
    out.reserve(c.total());
    for (std::size_t i = 0; i < c.total(); ++i) {
      const Scenario scenario = i < c.n_success ? Scenario::SuccessfulPick : Scenario::FailedGrasp;
      const std::uint64_t seed = trial_seed(base_seed, split, i);
      Trial t = generate_trial(scenario, sample_scenario_params(scenario, seed), model);
      char id[32];
      std::snprintf(id, sizeof id, "%s-%04zu", std::string(to_string(split)).c_str(), i);
      t.id = id;
      out.push_back(std::move(t));
    }
  };
  fill(Split::Train, counts.train, ds.train);
  fill(Split::Validation, counts.validation, ds.validation);
  fill(Split::Test, counts.test, ds.test);
  return ds;
}

const std::vector<double>& slip_severity_profile(const Trial& trial) {
  if (!trial.slip_velocity) throw std::invalid_argument("trial " + trial.id + " carries no slip kinematics");
  return *trial.slip_velocity;
}

}  // namespace grasp
