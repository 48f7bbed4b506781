#include "grasp/state.hpp"

#include <stdexcept>
#include <string>

namespace grasp {

std::string_view to_string(GraspState s) noexcept {
  switch (s) {
    case GraspState::NoSlip: return "NoSlip";
    case GraspState::Slip: return "Slip";
    case GraspState::FailedGrasp: return "FailedGrasp";
    case GraspState::SuccessfulPick: return "SuccessfulPick";
  }
  return "?";
}

GraspState parse_state(std::string_view name) {
  for (GraspState s : kAllStates) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown grasp state '" + std::string(name) + "'");
}

TransitionTable::TransitionTable() {
  for (std::size_t i = 0; i < kNumStates; ++i) allowed_[i][i] = true;
}

TransitionTable TransitionTable::standard() {
  using S = GraspState;
  TransitionTable t;
  t.allow(S::NoSlip, S::Slip)
      .allow(S::Slip, S::NoSlip)
      .allow(S::NoSlip, S::SuccessfulPick)
      .allow(S::Slip, S::SuccessfulPick)
      .allow(S::Slip, S::FailedGrasp)
      .allow(S::NoSlip, S::FailedGrasp);
  return t;
}

TransitionTable& TransitionTable::allow(GraspState from, GraspState to) {
  if (is_terminal(from) && from != to) {
    throw std::invalid_argument("terminal state " + std::string(to_string(from)) +
                                " cannot transition to " + std::string(to_string(to)));
  }
  allowed_[index_of(from)][index_of(to)] = true;
  return *this;
}

TransitionTable& TransitionTable::forbid(GraspState from, GraspState to) {
  if (from != to) allowed_[index_of(from)][index_of(to)] = false;
  return *this;
}

std::vector<std::pair<GraspState, GraspState>> TransitionTable::edges() const {
  std::vector<std::pair<GraspState, GraspState>> out;
  for (GraspState a : kAllStates)
    for (GraspState b : kAllStates)
      if (allows(a, b)) out.emplace_back(a, b);
  return out;
}

bool valid_transition(const TransitionTable& table, GraspState from, GraspState to) noexcept {
  return table.allows(from, to);
}

std::optional<std::size_t> validate_label_sequence(const TransitionTable& table,
                                                   std::span<const GraspState> labels) {
  if (labels.empty()) throw std::invalid_argument("label sequence is empty");
  for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
    if (!table.allows(labels[i], labels[i + 1])) return i;
  }
  return std::nullopt;
}

}  // namespace grasp
