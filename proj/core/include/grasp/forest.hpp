#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "grasp/features.hpp"
#include "grasp/state.hpp"

namespace grasp {

using ClassCounts = std::array<std::size_t, kNumStates>;

/// Most frequent class; ties go to the earliest class in canonical order.
GraspState majority_class(const ClassCounts& counts) noexcept;

/// 1 - sum_i (count_i / total)^2. Throws std::invalid_argument on all-zero counts.
double gini(const ClassCounts& counts);

/// Child-size-weighted Gini of a binary split.
double weighted_gini(const ClassCounts& left, const ClassCounts& right);

/// A split must lower impurity by more than this to be taken.
inline constexpr double kMinImpurityDecrease = 1e-12;

/// Candidate threshold between two consecutive distinct sorted values.
inline double split_midpoint(double lo, double hi) noexcept {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

/// Dense row-major sample matrix with one label per row.
struct SampleSet {
  std::size_t width = 0;
  std::vector<double> values;
  std::vector<GraspState> labels;

  std::size_t size() const noexcept { return labels.size(); }
  double at(std::size_t row, std::size_t feature) const { return values[row * width + feature]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * width, width}; }
  void push_back(std::span<const double> row, GraspState label);
};

struct SplitChoice {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted child Gini

  friend bool operator==(const SplitChoice&, const SplitChoice&) = default;
};

/// Exhaustive CART split search over `features` and every midpoint between consecutive
/// distinct values; rows go left when value <= threshold. Returns std::nullopt when no
/// split lowers the parent's Gini. Ties resolve to the lower feature, then the lower threshold.
std::optional<SplitChoice> best_split(const SampleSet& samples, std::span<const std::size_t> rows,
                                std::span<const std::size_t> features);
std::optional<SplitChoice> best_split(const SampleSet& samples, std::span<const std::size_t> features);

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  ClassCounts counts{};

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t leaf_index(std::span<const double> x) const;
  GraspState predict(std::span<const double> x) const;
  std::size_t depth() const;

  /// Throws std::invalid_argument when a child index is out of range, a leaf is empty,
  /// or an internal node lacks a child.
  void validate(std::size_t n_features) const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct RfHyperparams {
  std::size_t n_estimators = 100;
  /// 0 selects floor(sqrt(n_features)).
  std::size_t max_features = 0;
  std::size_t min_samples_split = 2;
  /// 0 means unlimited.
  std::size_t max_depth = 0;
  std::uint64_t seed = 0;

  std::size_t resolved_max_features(std::size_t n_features) const;
  void validate(std::size_t n_features) const;

  friend bool operator==(const RfHyperparams&, const RfHyperparams&) = default;
};

struct RfModel {
  std::vector<DecisionTree> trees;
  RfHyperparams hyperparams;
  std::size_t n_features = 0;
  /// Classes present in the training data.
  std::array<bool, kNumStates> classes{};

  friend bool operator==(const RfModel&, const RfModel&) = default;
};

/// Bootstrap draw (size n, with replacement) for tree `tree`, seeded by seed XOR tree.
std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, std::size_t tree, std::size_t n);

/// Permutation that orders windows by (trial_id, end_frame, label, values).
std::vector<std::size_t> canonical_order(std::span<const FeatureWindow> windows);

/// Trains on windows after canonical ordering, so storage order does not matter.
/// Throws std::invalid_argument on fewer than two windows, one class, or mixed widths.
RfModel rf_train(std::span<const FeatureWindow> windows, const RfHyperparams& hp);
/// Trains on samples in the given order.
RfModel rf_train(const SampleSet& samples, const RfHyperparams& hp);

ClassCounts rf_votes(const RfModel& model, std::span<const double> x);
/// Majority of per-tree votes; ties resolve in canonical class order.
/// Throws std::invalid_argument on a feature-count mismatch.
GraspState rf_predict(const RfModel& model, std::span<const double> x);
GraspState rf_predict(const RfModel& model, const FeatureWindow& window);

}  // namespace grasp
