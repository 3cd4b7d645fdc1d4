#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tecorridor/corridor.hpp"

namespace tecorridor::qlearn {

/// The ego agent's own context: seat, turn, objective and its recent columns
/// (oldest first, current column last).
struct EgoHistoryKey {
  env::Seat seat = env::Seat::P1;
  int turn = 0;
  env::Objective own_objective = env::Objective::Meet;
  std::vector<int> ego_cols;

  bool operator==(const EgoHistoryKey&) const = default;
};

/// EgoHistoryKey plus the opponent's columns over the same window.
struct JointHistoryKey {
  env::Seat seat = env::Seat::P1;
  int turn = 0;
  env::Objective own_objective = env::Objective::Meet;
  std::vector<int> ego_cols;
  std::vector<int> opp_cols;

  EgoHistoryKey ego() const { return {seat, turn, own_objective, ego_cols}; }

  bool operator==(const JointHistoryKey&) const = default;
};

/// Number of columns a key keeps at `turn`: the current one plus up to
/// `history_len` previous ones.
constexpr int history_window(int turn, int history_len) {
  return (turn < history_len ? turn : history_len) + 1;
}

/// Slices the last history_window(turn, history_len) entries out of full
/// trajectories whose index 0 is the start column and index `turn` the current.
JointHistoryKey make_key(env::Seat seat, int turn, env::Objective own_objective,
                         std::span<const int> ego_trajectory, std::span<const int> opp_trajectory,
                         int history_len);

/// True when every entry is in [0, cols) and consecutive entries differ by at most 1.
bool is_feasible_history(std::span<const int> cols_seq, int cols);

/// Every opponent column sequence that could accompany `ego` (same window
/// length, feasible moves), in lexicographic order.
std::vector<std::vector<int>> enumerate_opponent_histories(const EgoHistoryKey& ego,
                                                           const env::GridConfig& grid);

/// Count of feasible sequences of the given length, by dynamic programming.
std::uint64_t opponent_history_count(int length, int cols);

}  // namespace tecorridor::qlearn
