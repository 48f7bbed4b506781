#include "grasp/eval.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>

namespace grasp {

namespace {

using Counts = std::array<std::size_t, kNumStates>;

/// Majority of `counts`; `preferred` wins a tie it is part of, otherwise canonical order.
GraspState vote(const Counts& counts, const GraspState* preferred) {
  const std::size_t top = *std::max_element(counts.begin(), counts.end());
  if (preferred != nullptr && counts[index_of(*preferred)] == top) return *preferred;
  for (std::size_t k = 0; k < kNumStates; ++k)
    if (counts[k] == top) return static_cast<GraspState>(k);
  return GraspState::NoSlip;
}

/// Prefix count of frames with a given property, so range queries are O(1).
class Prefix {
 public:
  template <typename Pred>
  Prefix(std::size_t n, Pred pred) : sums_(n + 1, 0) {
    for (std::size_t i = 0; i < n; ++i) sums_[i + 1] = sums_[i] + (pred(i) ? 1 : 0);
  }
  /// Count over the inclusive range [lo, hi] clipped to [0, n).
  std::size_t count(std::ptrdiff_t lo, std::ptrdiff_t hi) const {
    const auto n = static_cast<std::ptrdiff_t>(sums_.size()) - 1;
    lo = std::max<std::ptrdiff_t>(lo, 0);
    hi = std::min<std::ptrdiff_t>(hi, n - 1);
    if (lo > hi) return 0;
    return sums_[static_cast<std::size_t>(hi + 1)] - sums_[static_cast<std::size_t>(lo)];
  }

 private:
  std::vector<std::size_t> sums_;
};

struct Run {
  std::size_t first;
  std::size_t last;
};

template <typename Pred>
std::vector<Run> runs_where(std::size_t begin, std::size_t end, Pred pred) {
  std::vector<Run> runs;
  for (std::size_t i = begin; i < end; ++i) {
    if (!pred(i)) continue;
    if (!runs.empty() && runs.back().last + 1 == i)
      runs.back().last = i;
    else
      runs.push_back({i, i});
  }
  return runs;
}

}  // namespace

std::string_view to_string(FilterMode m) noexcept {
  return m == FilterMode::Tumbling ? "tumbling" : "sliding";
}

FilterMode parse_filter_mode(std::string_view name) {
  if (name == "tumbling") return FilterMode::Tumbling;
  if (name == "sliding") return FilterMode::Sliding;
  throw std::invalid_argument("unknown filter mode '" + std::string(name) + "'");
}

ClassificationStream majority_filter(const ClassificationStream& stream, std::size_t window, FilterMode mode) {
  if (window == 0 || window % 2 == 0)
    throw std::invalid_argument("filter window must be odd, got " + std::to_string(window));
  ClassificationStream out{stream.first_frame, {}};
  const std::size_t n = stream.size();
  out.predictions.resize(n);
  if (n == 0) return out;

  if (mode == FilterMode::Tumbling) {
    std::optional<GraspState> previous;
    for (std::size_t start = 0; start < n; start += window) {
      const std::size_t end = std::min(n, start + window);
      Counts counts{};
      for (std::size_t i = start; i < end; ++i) ++counts[index_of(stream.predictions[i])];
      const GraspState winner = vote(counts, previous ? &*previous : nullptr);
      std::fill(out.predictions.begin() + static_cast<std::ptrdiff_t>(start),
                out.predictions.begin() + static_cast<std::ptrdiff_t>(end), winner);
      previous = winner;
    }
    return out;
  }

  const std::size_t half = window / 2;
  Counts counts{};
  std::size_t lo = 0;
  std::size_t hi = 0;  // window is [lo, hi)
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t want_lo = i >= half ? i - half : 0;
    const std::size_t want_hi = std::min(n, i + half + 1);
    while (hi < want_hi) ++counts[index_of(stream.predictions[hi++])];
    while (lo < want_lo) --counts[index_of(stream.predictions[lo++])];
    out.predictions[i] = vote(counts, &stream.predictions[i]);
  }
  return out;
}

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t t = 0;
  for (const auto& row : counts)
    for (std::size_t c : row) t += c;
  return t;
}

std::size_t ConfusionMatrix::actual(GraspState s) const noexcept {
  std::size_t t = 0;
  for (std::size_t c : counts[index_of(s)]) t += c;
  return t;
}

std::size_t ConfusionMatrix::predicted(GraspState s) const noexcept {
  std::size_t t = 0;
  for (const auto& row : counts) t += row[index_of(s)];
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) noexcept {
  for (std::size_t a = 0; a < kNumStates; ++a)
    for (std::size_t p = 0; p < kNumStates; ++p) counts[a][p] += o.counts[a][p];
  return *this;
}

std::array<ClassMetrics, kNumStates> prf1(const ConfusionMatrix& confusion) {
  if (confusion.total() == 0) throw std::invalid_argument("metrics need a non-empty confusion matrix");
  std::array<ClassMetrics, kNumStates> out{};
  for (GraspState s : kAllStates) {
    ClassMetrics& m = out[index_of(s)];
    const auto tp = static_cast<double>(confusion.counts[index_of(s)][index_of(s)]);
    const std::size_t predicted = confusion.predicted(s);
    m.support = confusion.actual(s);
    m.precision = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
    m.recall = m.support > 0 ? tp / static_cast<double>(m.support) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  }
  return out;
}

std::array<std::size_t, TaxonomyCounters::kCount> TaxonomyCounters::values() const noexcept {
  return {missed_slip,         false_slip,         missed_successful_pick,     false_successful_pick,
          missed_failed_grasp, false_failed_grasp, unsustained_successful_pick};
}

TaxonomyCounters& TaxonomyCounters::operator+=(const TaxonomyCounters& o) noexcept {
  missed_slip += o.missed_slip;
  false_slip += o.false_slip;
  missed_successful_pick += o.missed_successful_pick;
  false_successful_pick += o.false_successful_pick;
  missed_failed_grasp += o.missed_failed_grasp;
  false_failed_grasp += o.false_failed_grasp;
  unsustained_successful_pick += o.unsustained_successful_pick;
  return *this;
}

TaxonomyCounters failure_taxonomy(std::span<const GraspState> labels, Scenario scenario,
                                  std::size_t terminal_event, const ClassificationStream& stream,
                                  std::size_t slack) {
  const std::size_t n = labels.size();
  if (stream.empty()) throw std::invalid_argument("taxonomy needs a non-empty stream");
  if (stream.end_frame() != n)
    throw std::invalid_argument("stream covers frames " + std::to_string(stream.first_frame) + ".." +
                                std::to_string(stream.end_frame() - 1) + " but the trial has " +
                                std::to_string(n) + " frames");

  const std::size_t first = stream.first_frame;
  const auto predicted = [&](std::size_t f, GraspState s) {
    return f >= first && stream.predictions[f - first] == s;
  };
  const auto k = static_cast<std::ptrdiff_t>(slack);
  const Prefix predicted_slip(n, [&](std::size_t f) { return predicted(f, GraspState::Slip); });
  const Prefix labeled_slip(n, [&](std::size_t f) { return labels[f] == GraspState::Slip; });

  TaxonomyCounters c;
  for (const Run& r : runs_where(0, n, [&](std::size_t f) { return labels[f] == GraspState::Slip; }))
    if (predicted_slip.count(static_cast<std::ptrdiff_t>(r.first) - k, static_cast<std::ptrdiff_t>(r.last) + k) == 0)
      c.missed_slip = 1;
  for (const Run& r : runs_where(first, n, [&](std::size_t f) { return predicted(f, GraspState::Slip); }))
    if (labeled_slip.count(static_cast<std::ptrdiff_t>(r.first) - k, static_cast<std::ptrdiff_t>(r.last) + k) == 0)
      c.false_slip = 1;
  for (const Run& r : runs_where(first, n, [&](std::size_t f) { return predicted(f, GraspState::SuccessfulPick); }))
    if (r.last + slack < terminal_event) c.false_successful_pick = 1;

  bool success_after = false;
  bool failed_after = false;
  bool failed_any = false;
  for (std::size_t f = first; f < n; ++f) {
    const GraspState p = stream.predictions[f - first];
    failed_any = failed_any || p == GraspState::FailedGrasp;
    if (f < terminal_event) continue;
    success_after = success_after || p == GraspState::SuccessfulPick;
    failed_after = failed_after || p == GraspState::FailedGrasp;
  }

  if (scenario == Scenario::SuccessfulPick) {
    c.missed_successful_pick = success_after ? 0 : 1;
    c.false_failed_grasp = failed_any ? 1 : 0;
    c.unsustained_successful_pick = success_after && stream.predictions.back() != GraspState::SuccessfulPick;
  } else {
    c.missed_failed_grasp = success_after && !failed_after ? 1 : 0;
  }
  return c;
}

TaxonomyCounters failure_taxonomy(const Trial& trial, const ClassificationStream& stream, std::size_t slack) {
  return failure_taxonomy(trial.labels, trial.scenario, trial.events.terminal_event, stream, slack);
}

ConfusionMatrix stream_confusion(std::span<const GraspState> labels, const ClassificationStream& stream) {
  if (stream.end_frame() > labels.size())
    throw std::invalid_argument("stream runs past the end of the labels");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < stream.size(); ++i) m.add(labels[stream.first_frame + i], stream.predictions[i]);
  return m;
}

}  // namespace grasp
