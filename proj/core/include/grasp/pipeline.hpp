#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "grasp/eval.hpp"
#include "grasp/features.hpp"
#include "grasp/forest.hpp"
#include "grasp/lstm.hpp"

namespace grasp {

enum class ModelFamily { Rf, Lstm };

std::string_view to_string(ModelFamily f) noexcept;
ModelFamily parse_model_family(std::string_view name);

struct TrainOptions {
  ModelFamily family = ModelFamily::Rf;
  SensorMask mask = SensorMask::all();
  ScalarMode scalars = ScalarMode::FinalSample;
  RfHyperparams rf;
  LstmHyperparams lstm;
  /// Only every n-th training window (or sequence) is used. Evaluation always uses every window.
  std::size_t train_stride = 1;
  /// Upper bound on the camera frames used to fit PCA; evenly subsampled beyond it.
  std::size_t pca_max_frames = 1000;

  void validate() const;
};

struct TrainedModel {
  ModelFamily family = ModelFamily::Rf;
  FeatureConfig features;
  NormalizationParams normalization;
  std::variant<RfModel, LstmModel> model;
  /// Sequence length of the recurrent model.
  std::size_t seq_len = 0;
  /// Mean training loss per epoch (LSTM only).
  std::vector<double> epoch_loss;

  /// First frame that carries a prediction (end of the first window).
  std::size_t first_frame() const;
  std::size_t input_width() const;
};

/// Fits PCA (when needed) and normalization on `trials`, then trains the selected family.
/// Throws std::invalid_argument on an empty trial list or invalid options.
TrainedModel train_model(std::span<const Trial> trials, const TrainOptions& options);

/// Raw (unfiltered) per-frame predictions, first_frame .. size()-1.
ClassificationStream classify_trial(const TrainedModel& model, const Trial& trial);

/// Throws std::invalid_argument naming the first channel on which the masks differ.
void check_mask_compatible(const SensorMask& model_mask, const SensorMask& requested);

struct EvalOptions {
  bool filter = false;
  std::size_t filter_window = kFilterWindow;
  FilterMode filter_mode = FilterMode::Tumbling;
  std::size_t slack = kDefaultSlack;

  /// Filter off for forests, on for the recurrent model.
  static EvalOptions defaults_for(ModelFamily family);
};

struct TrialResult {
  std::string trial_id;
  ClassificationStream stream;  // after the optional filter
  TaxonomyCounters taxonomy;
};

struct EvalReport {
  ConfusionMatrix confusion;
  std::array<ClassMetrics, kNumStates> metrics{};
  TaxonomyCounters taxonomy;
  std::size_t n_success = 0;
  std::size_t n_fail = 0;
  std::vector<TrialResult> trials;

  std::size_t windows() const noexcept { return confusion.total(); }
};

/// Classifies every trial, filters, and folds confusion and taxonomy in trial order.
/// Throws std::invalid_argument on an empty trial list.
EvalReport evaluate(const TrainedModel& model, std::span<const Trial> trials, const EvalOptions& options);

struct AblationRow {
  SensorMask mask;
  std::string name;
  EvalReport report;
};

/// Trains one model per mask on `train` and evaluates it on `test`.
std::vector<AblationRow> ablation_run(std::span<const Trial> train, std::span<const Trial> test,
                                      const TrainOptions& base, std::span<const SensorMask> masks,
                                      const EvalOptions& eval);

/// IMU, IR, Tension, Tactile, then the camera alone with each reducer.
std::vector<SensorMask> single_sensor_masks();
/// The twelve IMU-based combinations, camera reduced to its centroid.
std::vector<SensorMask> combination_masks();

}  // namespace grasp
