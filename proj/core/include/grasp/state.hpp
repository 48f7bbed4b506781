#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace grasp {

/// Grasp state of the fruit-gripper interaction. The enumerator order is the
/// canonical class order and is used for every tie-break downstream.
enum class GraspState : std::uint8_t { NoSlip = 0, Slip = 1, FailedGrasp = 2, SuccessfulPick = 3 };

inline constexpr std::size_t kNumStates = 4;

inline constexpr std::array<GraspState, kNumStates> kAllStates = {
    GraspState::NoSlip, GraspState::Slip, GraspState::FailedGrasp, GraspState::SuccessfulPick};

constexpr std::size_t index_of(GraspState s) noexcept { return static_cast<std::size_t>(s); }

constexpr bool is_terminal(GraspState s) noexcept {
  return s == GraspState::FailedGrasp || s == GraspState::SuccessfulPick;
}

std::string_view to_string(GraspState s) noexcept;

/// Parses the canonical name ("NoSlip", "Slip", ...). Throws std::invalid_argument.
GraspState parse_state(std::string_view name);

/// Legal state-to-state transitions. Self-loops are always present and terminal
/// states can never be left; both are enforced on every mutation.
class TransitionTable {
 public:
  /// Self-loops only.
  TransitionTable();

  /// Self-loops, NoSlip<->Slip, {NoSlip,Slip}->SuccessfulPick, {NoSlip,Slip}->FailedGrasp.
  static TransitionTable standard();

  /// Adds an edge. Throws std::invalid_argument if `from` is terminal and `to != from`.
  TransitionTable& allow(GraspState from, GraspState to);
  /// Removes an edge. Self-loops cannot be removed.
  TransitionTable& forbid(GraspState from, GraspState to);

  bool allows(GraspState from, GraspState to) const noexcept {
    return allowed_[index_of(from)][index_of(to)];
  }

  std::vector<std::pair<GraspState, GraspState>> edges() const;

 private:
  std::array<std::array<bool, kNumStates>, kNumStates> allowed_{};
};

bool valid_transition(const TransitionTable& table, GraspState from, GraspState to) noexcept;

/// Returns std::nullopt when every adjacent pair is legal, otherwise the index i
/// of the first illegal pair (labels[i], labels[i + 1]). Throws on an empty sequence.
std::optional<std::size_t> validate_label_sequence(const TransitionTable& table,
                                                   std::span<const GraspState> labels);

}  // namespace grasp
