#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "grasp/state.hpp"
#include "grasp/types.hpp"

namespace grasp {

/// Predictions for consecutive frames first_frame, first_frame + 1, ... of one trial.
struct ClassificationStream {
  std::size_t first_frame = 0;
  std::vector<GraspState> predictions;

  std::size_t size() const noexcept { return predictions.size(); }
  bool empty() const noexcept { return predictions.empty(); }
  std::size_t end_frame() const noexcept { return first_frame + predictions.size(); }

  friend bool operator==(const ClassificationStream&, const ClassificationStream&) = default;
};

inline constexpr std::size_t kFilterWindow = 15;

enum class FilterMode { Tumbling, Sliding };

std::string_view to_string(FilterMode m) noexcept;
FilterMode parse_filter_mode(std::string_view name);

/// Majority vote over blocks of `window` predictions.
///
/// Tumbling: consecutive non-overlapping blocks (the last one may be short); every
/// sample takes its block's majority. Ties go to the previous block's class when it is
/// among the tied classes, otherwise to the earliest tied class in canonical order.
/// Sliding: each sample takes the majority of the centred window clipped to the stream;
/// ties keep the sample's own class when tied, otherwise canonical order.
/// Throws std::invalid_argument unless `window` is odd.
ClassificationStream majority_filter(const ClassificationStream& stream, std::size_t window = kFilterWindow,
                                     FilterMode mode = FilterMode::Tumbling);

/// counts[actual][predicted]
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumStates>, kNumStates> counts{};

  void add(GraspState actual, GraspState predicted) { ++counts[index_of(actual)][index_of(predicted)]; }
  std::size_t total() const noexcept;
  std::size_t actual(GraspState s) const noexcept;
  std::size_t predicted(GraspState s) const noexcept;
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

/// Per-class precision, recall and F1; an undefined ratio reports 0.
/// Throws std::invalid_argument on an empty matrix.
std::array<ClassMetrics, kNumStates> prf1(const ConfusionMatrix& confusion);

struct TaxonomyCounters {
  std::size_t missed_slip = 0;
  std::size_t false_slip = 0;
  std::size_t missed_successful_pick = 0;
  std::size_t false_successful_pick = 0;
  std::size_t missed_failed_grasp = 0;
  std::size_t false_failed_grasp = 0;
  std::size_t unsustained_successful_pick = 0;

  static constexpr std::size_t kCount = 7;
  static constexpr std::array<std::string_view, kCount> kNames = {
      "missed_slip",         "false_slip",         "missed_successful_pick",     "false_successful_pick",
      "missed_failed_grasp", "false_failed_grasp", "unsustained_successful_pick"};

  std::array<std::size_t, kCount> values() const noexcept;
  TaxonomyCounters& operator+=(const TaxonomyCounters& o) noexcept;

  friend bool operator==(const TaxonomyCounters&, const TaxonomyCounters&) = default;
};

inline constexpr std::size_t kDefaultSlack = 10;

/// Per-trial failure indicators (each 0 or 1) of a stream against the frame labels.
///
/// Frames outside the stream carry no prediction. With k = slack and T = terminal_event:
///  missed_slip: some labeled Slip run [a, b] has no predicted Slip in [a - k, b + k];
///  false_slip: some predicted Slip run [c, d] has no labeled Slip in [c - k, d + k];
///  missed_successful_pick: SuccessfulPick trial without predicted SuccessfulPick at f >= T;
///  false_successful_pick: some predicted SuccessfulPick run [c, d] with d + k < T;
///  missed_failed_grasp: FailedGrasp trial whose predictions at f >= T include
///    SuccessfulPick but not FailedGrasp;
///  false_failed_grasp: SuccessfulPick trial with any predicted FailedGrasp;
///  unsustained_successful_pick: SuccessfulPick trial with predicted SuccessfulPick at
///    f >= T whose last prediction is not SuccessfulPick.
/// Throws std::invalid_argument when the stream is empty or does not end at the last frame.
TaxonomyCounters failure_taxonomy(std::span<const GraspState> labels, Scenario scenario,
                                  std::size_t terminal_event, const ClassificationStream& stream,
                                  std::size_t slack = kDefaultSlack);
TaxonomyCounters failure_taxonomy(const Trial& trial, const ClassificationStream& stream,
                                  std::size_t slack = kDefaultSlack);

/// Confusion of a stream against the labels of the frames it covers.
/// Throws std::invalid_argument if the stream runs past the labels.
ConfusionMatrix stream_confusion(std::span<const GraspState> labels, const ClassificationStream& stream);

}  // namespace grasp
