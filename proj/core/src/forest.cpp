#include "grasp/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "grasp/rng.hpp"

namespace grasp {

namespace {

std::size_t total(const ClassCounts& c) { return std::accumulate(c.begin(), c.end(), std::size_t{0}); }

bool is_pure(const ClassCounts& c) {
  return std::count_if(c.begin(), c.end(), [](std::size_t v) { return v > 0; }) <= 1;
}

/// Per-feature dense ranks of the sample values, so that node-level sorting works on small
/// integer keys. values[f][rank] recovers the original value.
struct Columns {
  explicit Columns(const SampleSet& samples) : n(samples.size()), ranks(samples.width * samples.size()) {
    values.resize(samples.width);
    std::vector<std::pair<double, std::uint32_t>> tmp(n);
    for (std::size_t f = 0; f < samples.width; ++f) {
      for (std::size_t r = 0; r < n; ++r) tmp[r] = {samples.at(r, f), static_cast<std::uint32_t>(r)};
      std::sort(tmp.begin(), tmp.end());
      std::vector<double>& distinct = values[f];
      std::uint32_t* out = ranks.data() + f * n;
      for (const auto& [v, r] : tmp) {
        if (distinct.empty() || distinct.back() < v) distinct.push_back(v);
        out[r] = static_cast<std::uint32_t>(distinct.size() - 1);
      }
    }
  }
  const std::uint32_t* column(std::size_t f) const { return ranks.data() + f * n; }

  std::size_t n;
  std::vector<std::uint32_t> ranks;
  std::vector<std::vector<double>> values;
};

/// Split quality as the exact fraction (sum_l^2 * n_r + sum_r^2 * n_l) / (n_l * n_r).
/// Larger is better; it orders splits exactly as the weighted Gini does, without rounding.
struct Score {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  __extension__ typedef unsigned __int128 Wide;
  bool better_than(const Score& o) const { return Wide{num} * o.den > Wide{o.num} * den; }
  bool ties(const Score& o) const { return Wide{num} * o.den == Wide{o.num} * den; }
};

struct Candidate {
  SplitChoice split;
  std::uint32_t left_rank = 0;  // rows with rank <= left_rank go left
  Score score;
  ClassCounts left{};
  ClassCounts right{};
};

/// Scratch buffers reused across nodes of one tree.
struct SplitScratch {
  std::vector<std::uint32_t> keys;
  std::vector<std::uint32_t> buffer;
};

/// Sorts keys of the form rank * 4 + label with an LSD radix sort over the used bits.
void sort_keys(std::vector<std::uint32_t>& keys, std::vector<std::uint32_t>& buffer, std::uint32_t max_key) {
  if (keys.size() < 128) {
    std::sort(keys.begin(), keys.end());
    return;
  }
  buffer.resize(keys.size());
  constexpr int kBits = 8;
  constexpr std::uint32_t kMask = (1u << kBits) - 1;
  for (int shift = 0; shift < 32 && (max_key >> shift) != 0; shift += kBits) {
    std::array<std::size_t, (1u << kBits) + 1> offsets{};
    for (std::uint32_t k : keys) ++offsets[((k >> shift) & kMask) + 1];
    for (std::size_t i = 1; i < offsets.size(); ++i) offsets[i] += offsets[i - 1];
    for (std::uint32_t k : keys) buffer[offsets[(k >> shift) & kMask]++] = k;
    keys.swap(buffer);
  }
}

/// Best threshold on one feature; replaces `best` when strictly better.
void scan_feature(const Columns& columns, const SampleSet& samples, std::span<const std::size_t> rows,
                  std::size_t feature, const ClassCounts& parent, SplitScratch& scratch,
                  std::optional<Candidate>& best) {
  const std::uint32_t* ranks = columns.column(feature);
  const std::vector<double>& values = columns.values[feature];
  auto& keys = scratch.keys;
  keys.clear();
  for (std::size_t r : rows) keys.push_back(ranks[r] * 4u + static_cast<std::uint32_t>(samples.labels[r]));
  sort_keys(keys, scratch.buffer, static_cast<std::uint32_t>(values.size()) * 4u);

  ClassCounts left{};
  ClassCounts right = parent;
  std::uint64_t sq_left = 0;
  std::uint64_t sq_right = 0;
  for (std::size_t c : right) sq_right += static_cast<std::uint64_t>(c) * c;
  const std::uint64_t n = keys.size();
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    const std::size_t cls = keys[i] & 3u;
    sq_left += 2 * left[cls] + 1;
    sq_right -= 2 * right[cls] - 1;
    ++left[cls];
    --right[cls];
    const std::uint32_t rank = keys[i] >> 2;
    if (rank == (keys[i + 1] >> 2)) continue;
    const std::uint64_t nl = i + 1;
    const std::uint64_t nr = n - nl;
    const Score score{sq_left * nr + sq_right * nl, nl * nr};
    // Features arrive in ascending order and thresholds ascend within a feature, so only a
    // strictly better score may replace the incumbent.
    if (!best || score.better_than(best->score)) {
      const double threshold = split_midpoint(values[rank], values[keys[i + 1] >> 2]);
      best = Candidate{{feature, threshold, 0.0}, rank, score, left, right};
    }
  }
}

std::optional<Candidate> find_split(const Columns& columns, const SampleSet& samples,
                                    std::span<const std::size_t> rows, std::span<const std::size_t> features,
                                    SplitScratch& scratch) {
  if (rows.size() < 2 || features.empty()) return std::nullopt;
  ClassCounts parent{};
  for (std::size_t r : rows) ++parent[index_of(samples.labels[r])];
  const double parent_gini = gini(parent);
  std::optional<Candidate> best;
  for (std::size_t f : features) scan_feature(columns, samples, rows, f, parent, scratch, best);
  if (!best) return std::nullopt;
  best->split.impurity = weighted_gini(best->left, best->right);
  if (best->split.impurity < parent_gini - kMinImpurityDecrease) return best;
  return std::nullopt;
}

class TreeBuilder {
 public:
  TreeBuilder(const SampleSet& samples, const Columns& columns, const RfHyperparams& hp, Rng& rng)
      : samples_(samples), columns_(columns), hp_(hp), rng_(rng), max_features_(hp.resolved_max_features(samples.width)) {
    feature_pool_.resize(samples.width);
  }

  DecisionTree build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    nodes_.clear();
    struct Pending {
      std::size_t begin, end, depth;
      std::int32_t node;
    };
    std::vector<Pending> stack;
    stack.push_back({0, rows_.size(), 0, add_node()});
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      std::span<std::size_t> span(rows_.data() + p.begin, p.end - p.begin);
      ClassCounts counts{};
      for (std::size_t r : span) ++counts[index_of(samples_.labels[r])];
      nodes_[p.node].counts = counts;

      const bool depth_capped = hp_.max_depth != 0 && p.depth >= hp_.max_depth;
      if (span.size() < hp_.min_samples_split || is_pure(counts) || depth_capped) continue;

      const std::vector<std::size_t> features = draw_features(span);
      const auto split = find_split(columns_, samples_, span, features, scratch_);
      if (!split) continue;

      const std::uint32_t* column = columns_.column(split->split.feature);
      const auto mid = std::partition(span.begin(), span.end(),
                                      [&](std::size_t r) { return column[r] <= split->left_rank; });
      const std::size_t cut = p.begin + static_cast<std::size_t>(mid - span.begin());
      const std::int32_t left = add_node();
      const std::int32_t right = add_node();
      TreeNode& node = nodes_[p.node];
      node.feature = static_cast<std::int32_t>(split->split.feature);
      node.threshold = split->split.threshold;
      node.left = left;
      node.right = right;
      stack.push_back({cut, p.end, p.depth + 1, right});
      stack.push_back({p.begin, cut, p.depth + 1, left});
    }
    return DecisionTree(std::move(nodes_));
  }

 private:
  std::int32_t add_node() {
    nodes_.emplace_back();
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  /// Samples features without replacement until max_features non-constant ones are found
  /// (or the pool is exhausted). Returned in ascending order.
  std::vector<std::size_t> draw_features(std::span<const std::size_t> rows) {
    std::iota(feature_pool_.begin(), feature_pool_.end(), std::size_t{0});
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < feature_pool_.size() && chosen.size() < max_features_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, feature_pool_.size() - 1);
      std::swap(feature_pool_[i], feature_pool_[pick(rng_)]);
      const std::size_t f = feature_pool_[i];
      const std::uint32_t* column = columns_.column(f);
      const std::uint32_t first = column[rows.front()];
      const bool constant =
          std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return column[r] == first; });
      if (!constant) chosen.push_back(f);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  const SampleSet& samples_;
  const Columns& columns_;
  const RfHyperparams& hp_;
  Rng& rng_;
  std::size_t max_features_;
  std::vector<std::size_t> feature_pool_;
  std::vector<std::size_t> rows_;
  std::vector<TreeNode> nodes_;
  SplitScratch scratch_;
};

}  // namespace

GraspState majority_class(const ClassCounts& counts) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumStates; ++i)
    if (counts[i] > counts[best]) best = i;
  return static_cast<GraspState>(best);
}

double gini(const ClassCounts& counts) {
  const std::size_t n = total(counts);
  if (n == 0) throw std::invalid_argument("gini of an empty node");
  double sum_sq = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

double weighted_gini(const ClassCounts& left, const ClassCounts& right) {
  const double nl = static_cast<double>(total(left));
  const double nr = static_cast<double>(total(right));
  return (nl * gini(left) + nr * gini(right)) / (nl + nr);
}

void SampleSet::push_back(std::span<const double> row, GraspState label) {
  if (size() == 0 && values.empty()) width = row.size();
  if (row.size() != width) throw std::invalid_argument("sample width mismatch");
  values.insert(values.end(), row.begin(), row.end());
  labels.push_back(label);
}

std::optional<SplitChoice> best_split(const SampleSet& samples, std::span<const std::size_t> rows,
                                std::span<const std::size_t> features) {
  for (std::size_t f : features)
    if (f >= samples.width) throw std::invalid_argument("candidate feature out of range");
  std::vector<std::size_t> sorted(features.begin(), features.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  SplitScratch scratch;
  const auto best = find_split(Columns(samples), samples, rows, sorted, scratch);
  if (!best) return std::nullopt;
  return best->split;
}

std::optional<SplitChoice> best_split(const SampleSet& samples, std::span<const std::size_t> features) {
  std::vector<std::size_t> rows(samples.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return best_split(samples, rows, features);
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
  if (nodes_.empty()) throw std::logic_error("empty decision tree");
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

GraspState DecisionTree::predict(std::span<const double> x) const {
  return majority_class(nodes_[leaf_index(x)].counts);
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes_[i].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes_[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes_[i].right), d + 1);
    }
  }
  return deepest;
}

void DecisionTree::validate(std::size_t n_features) const {
  if (nodes_.empty()) throw std::invalid_argument("decision tree has no nodes");
  const auto n = static_cast<std::int32_t>(nodes_.size());
  for (const TreeNode& node : nodes_) {
    if (node.is_leaf()) {
      if (total(node.counts) < 1) throw std::invalid_argument("leaf with no samples");
    } else {
      if (static_cast<std::size_t>(node.feature) >= n_features)
        throw std::invalid_argument("split feature out of range");
      if (node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n)
        throw std::invalid_argument("internal node child out of range");
    }
  }
}

std::size_t RfHyperparams::resolved_max_features(std::size_t n_features) const {
  if (max_features != 0) return std::min(max_features, n_features);
  const auto root = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features))));
  return std::max<std::size_t>(1, root);
}

void RfHyperparams::validate(std::size_t n_features) const {
  if (n_estimators < 1) throw std::invalid_argument("n_estimators must be at least 1");
  if (n_features < 1) throw std::invalid_argument("forest needs at least one feature");
  if (max_features > n_features)
    throw std::invalid_argument("max_features " + std::to_string(max_features) + " exceeds feature count " +
                                std::to_string(n_features));
  if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be at least 2");
}

std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, std::size_t tree, std::size_t n) {
  Rng rng = make_rng(seed ^ static_cast<std::uint64_t>(tree));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> out(n);
  for (std::size_t& i : out) i = pick(rng);
  return out;
}

std::vector<std::size_t> canonical_order(std::span<const FeatureWindow> windows) {
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const FeatureWindow& x = windows[a];
    const FeatureWindow& y = windows[b];
    if (x.trial_id != y.trial_id) return x.trial_id < y.trial_id;
    if (x.end_frame != y.end_frame) return x.end_frame < y.end_frame;
    if (x.label != y.label) return x.label < y.label;
    return x.values < y.values;
  });
  return order;
}

RfModel rf_train(std::span<const FeatureWindow> windows, const RfHyperparams& hp) {
  if (windows.size() < 2) throw std::invalid_argument("forest needs at least two training windows");
  SampleSet samples;
  samples.width = windows.front().values.size();
  samples.values.reserve(windows.size() * samples.width);
  for (std::size_t i : canonical_order(windows)) samples.push_back(windows[i].values, windows[i].label);
  return rf_train(samples, hp);
}

RfModel rf_train(const SampleSet& samples, const RfHyperparams& hp) {
  if (samples.size() < 2) throw std::invalid_argument("forest needs at least two training samples");
  hp.validate(samples.width);
  RfModel model;
  model.hyperparams = hp;
  model.n_features = samples.width;
  for (GraspState s : samples.labels) model.classes[index_of(s)] = true;
  if (std::count(model.classes.begin(), model.classes.end(), true) < 2)
    throw std::invalid_argument("forest training data contains a single class");

  model.trees.reserve(hp.n_estimators);
  const Columns columns(samples);
  for (std::size_t t = 0; t < hp.n_estimators; ++t) {
    Rng rng = make_rng(splitmix64(hp.seed ^ static_cast<std::uint64_t>(t)) ^ 0x74726565ULL);
    TreeBuilder builder(samples, columns, hp, rng);
    model.trees.push_back(builder.build(bootstrap_indices(hp.seed, t, samples.size())));
  }
  return model;
}

ClassCounts rf_votes(const RfModel& model, std::span<const double> x) {
  if (x.size() != model.n_features)
    throw std::invalid_argument("forest expects " + std::to_string(model.n_features) + " features, got " +
                                std::to_string(x.size()));
  ClassCounts votes{};
  for (const DecisionTree& tree : model.trees) ++votes[index_of(tree.predict(x))];
  return votes;
}

GraspState rf_predict(const RfModel& model, std::span<const double> x) {
  return majority_class(rf_votes(model, x));
}

GraspState rf_predict(const RfModel& model, const FeatureWindow& window) {
  return rf_predict(model, std::span<const double>(window.values));
}

}  // namespace grasp
