#include "grasp/pipeline.hpp"

#include <memory>
#include <stdexcept>
#include <string>

namespace grasp {

std::string_view to_string(ModelFamily f) noexcept { return f == ModelFamily::Rf ? "rf" : "lstm"; }

ModelFamily parse_model_family(std::string_view name) {
  if (name == "rf") return ModelFamily::Rf;
  if (name == "lstm") return ModelFamily::Lstm;
  throw std::invalid_argument("unknown model family '" + std::string(name) + "' (expected rf or lstm)");
}

void TrainOptions::validate() const {
  mask.validate();
  lstm.validate();
  if (train_stride < 1) throw std::invalid_argument("train_stride must be at least 1");
  if (pca_max_frames < kPcaComponents)
    throw std::invalid_argument("pca_max_frames must be at least " + std::to_string(kPcaComponents));
}

std::size_t TrainedModel::first_frame() const {
  if (family == ModelFamily::Rf) return kFftWindow - 1;
  if (seq_len == 0) throw std::logic_error("recurrent model without a sequence length");
  return seq_len - 1;
}

std::size_t TrainedModel::input_width() const {
  if (family == ModelFamily::Rf) return std::get<RfModel>(model).n_features;
  return std::get<LstmModel>(model).input_size();
}

namespace {

PcaModel fit_camera_pca(std::span<const Trial> trials, std::size_t max_frames) {
  std::size_t total = 0;
  for (const Trial& t : trials) total += t.camera.size();
  const std::size_t step = total <= max_frames ? 1 : (total + max_frames - 1) / max_frames;
  std::vector<Mask> masks;
  std::size_t i = 0;
  for (const Trial& t : trials)
    for (const CameraFrame& c : t.camera)
      if (i++ % step == 0) masks.push_back(c.mask);
  return pca_fit(masks);
}

}  // namespace

TrainedModel train_model(std::span<const Trial> trials, const TrainOptions& options) {
  options.validate();
  if (trials.empty()) throw std::invalid_argument("training needs at least one trial");

  TrainedModel out;
  out.family = options.family;
  out.features.mask = options.mask;
  out.features.scalars = options.scalars;
  if (options.mask.camera && options.mask.camera_method == CameraMethod::Pca)
    out.features.pca = std::make_shared<const PcaModel>(fit_camera_pca(trials, options.pca_max_frames));
  out.features.validate();

  if (options.family == ModelFamily::Rf) {
    std::vector<FeatureWindow> windows;
    for (const Trial& t : trials) {
      auto w = assemble_rf_windows(t, out.features, nullptr, options.train_stride);
      windows.insert(windows.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    out.normalization = fit_normalization(windows);
    for (FeatureWindow& w : windows) out.normalization.apply_in_place(w.values);
    out.model = rf_train(windows, options.rf);
    return out;
  }

  const std::size_t width = frame_feature_count(out.features);
  std::vector<double> frames;
  for (const Trial& t : trials) {
    const auto f = frame_features(t, out.features);
    frames.insert(frames.end(), f.begin(), f.end());
  }
  out.normalization = fit_normalization(frames, width);

  SequenceSet sequences;
  sequences.seq_len = options.lstm.seq_len;
  sequences.width = width;
  for (const Trial& t : trials)
    sequences.append(assemble_lstm_sequences(t, out.features, options.lstm.seq_len, &out.normalization,
                                             options.train_stride));
  LstmTraining trained = lstm_train(sequences, options.lstm);
  out.model = std::move(trained.model);
  out.epoch_loss = std::move(trained.epoch_loss);
  out.seq_len = options.lstm.seq_len;
  return out;
}

ClassificationStream classify_trial(const TrainedModel& model, const Trial& trial) {
  ClassificationStream stream{model.first_frame(), {}};
  if (model.family == ModelFamily::Rf) {
    const RfModel& rf = std::get<RfModel>(model.model);
    const auto windows = assemble_rf_windows(trial, model.features, &model.normalization);
    stream.predictions.reserve(windows.size());
    for (const FeatureWindow& w : windows) stream.predictions.push_back(rf_predict(rf, w));
    return stream;
  }
  const LstmModel& lstm = std::get<LstmModel>(model.model);
  const SequenceSet sequences = assemble_lstm_sequences(trial, model.features, model.seq_len, &model.normalization);
  stream.predictions = lstm_predict(lstm, sequences);
  return stream;
}

void check_mask_compatible(const SensorMask& model_mask, const SensorMask& requested) {
  const auto differ = [](std::string_view channel, bool in_model, bool in_request) {
    if (in_model == in_request) return;
    throw std::invalid_argument("sensor mask mismatch on channel '" + std::string(channel) + "': " +
                                (in_model ? "the model uses it but it was not requested"
                                          : "requested but the model was trained without it"));
  };
  differ("imu", model_mask.imu, requested.imu);
  differ("ir", model_mask.ir, requested.ir);
  differ("tension", model_mask.tension, requested.tension);
  differ("tactile", model_mask.tactile, requested.tactile);
  differ("camera", model_mask.camera, requested.camera);
  if (model_mask.camera && model_mask.camera_method != requested.camera_method)
    throw std::invalid_argument("sensor mask mismatch on channel 'camera': model uses method '" +
                                std::string(to_string(model_mask.camera_method)) + "', requested '" +
                                std::string(to_string(requested.camera_method)) + "'");
}

EvalOptions EvalOptions::defaults_for(ModelFamily family) {
  EvalOptions o;
  o.filter = family == ModelFamily::Lstm;
  return o;
}

EvalReport evaluate(const TrainedModel& model, std::span<const Trial> trials, const EvalOptions& options) {
  if (trials.empty()) throw std::invalid_argument("evaluation needs at least one trial");
  EvalReport report;
  report.trials.reserve(trials.size());
  for (const Trial& trial : trials) {
    ClassificationStream stream = classify_trial(model, trial);
    if (options.filter) stream = majority_filter(stream, options.filter_window, options.filter_mode);
    report.confusion += stream_confusion(trial.labels, stream);
    TrialResult r{trial.id, std::move(stream), {}};
    r.taxonomy = failure_taxonomy(trial, r.stream, options.slack);
    report.taxonomy += r.taxonomy;
    (trial.scenario == Scenario::SuccessfulPick ? report.n_success : report.n_fail) += 1;
    report.trials.push_back(std::move(r));
  }
  report.metrics = prf1(report.confusion);
  return report;
}

std::vector<AblationRow> ablation_run(std::span<const Trial> train, std::span<const Trial> test,
                                      const TrainOptions& base, std::span<const SensorMask> masks,
                                      const EvalOptions& eval) {
  if (masks.empty()) throw std::invalid_argument("ablation needs at least one sensor subset");
  std::vector<AblationRow> rows;
  rows.reserve(masks.size());
  for (const SensorMask& mask : masks) {
    TrainOptions opts = base;
    opts.mask = mask;
    const TrainedModel model = train_model(train, opts);
    rows.push_back({mask, describe(mask), evaluate(model, test, eval)});
  }
  return rows;
}

std::vector<SensorMask> single_sensor_masks() {
  const auto only = [](bool imu, bool ir, bool tension, bool tactile, bool camera, CameraMethod m) {
    return SensorMask{imu, ir, tension, tactile, camera, m};
  };
  return {
      only(true, false, false, false, false, CameraMethod::Com),
      only(false, true, false, false, false, CameraMethod::Com),
      only(false, false, true, false, false, CameraMethod::Com),
      only(false, false, false, true, false, CameraMethod::Com),
      only(false, false, false, false, true, CameraMethod::Com),
      only(false, false, false, false, true, CameraMethod::Regions),
      only(false, false, false, false, true, CameraMethod::Pixel),
      only(false, false, false, false, true, CameraMethod::Pca),
  };
}

std::vector<SensorMask> combination_masks() {
  std::vector<SensorMask> out;
  for (std::string_view list : {"imu,ir", "imu,ir,tension", "imu,ir,tactile", "imu,ir,tension,tactile",
                                "imu,tension,tactile", "imu,tension", "imu,tactile", "imu,ir,camera",
                                "imu,camera", "imu,tension,camera", "imu,ir,tension,tactile,camera",
                                "imu,tension,tactile,camera"})
    out.push_back(parse_sensor_mask(list, CameraMethod::Com));
  return out;
}

}  // namespace grasp
