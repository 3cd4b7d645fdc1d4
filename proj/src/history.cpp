#include "tecorridor/history.hpp"

#include <cstdlib>

#include "tecorridor/errors.hpp"

namespace tecorridor::qlearn {

JointHistoryKey make_key(env::Seat seat, int turn, env::Objective own_objective,
                         std::span<const int> ego_trajectory, std::span<const int> opp_trajectory,
                         int history_len) {
  if (turn < 0 || history_len < 0) throw InvalidInput("make_key: negative turn or history length");
  const auto needed = static_cast<std::size_t>(turn) + 1;
  if (ego_trajectory.size() < needed || opp_trajectory.size() < needed) {
    throw InvalidInput("make_key: trajectory shorter than turn + 1");
  }
  const auto window = static_cast<std::size_t>(history_window(turn, history_len));
  const std::size_t first = needed - window;
  JointHistoryKey key;
  key.seat = seat;
  key.turn = turn;
  key.own_objective = own_objective;
  key.ego_cols.assign(ego_trajectory.begin() + first, ego_trajectory.begin() + needed);
  key.opp_cols.assign(opp_trajectory.begin() + first, opp_trajectory.begin() + needed);
  return key;
}

bool is_feasible_history(std::span<const int> cols_seq, int cols) {
  for (std::size_t i = 0; i < cols_seq.size(); ++i) {
    if (cols_seq[i] < 0 || cols_seq[i] >= cols) return false;
    if (i > 0 && std::abs(cols_seq[i] - cols_seq[i - 1]) > 1) return false;
  }
  return true;
}

std::vector<std::vector<int>> enumerate_opponent_histories(const EgoHistoryKey& ego,
                                                           const env::GridConfig& grid) {
  const std::size_t length = ego.ego_cols.size();
  if (length == 0) throw InvalidInput("enumerate_opponent_histories: empty ego history");
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  current.reserve(length);
  // Depth-first over feasible continuations keeps the output lexicographic.
  auto extend = [&](auto&& self) -> void {
    if (current.size() == length) {
      out.push_back(current);
      return;
    }
    const int lo = current.empty() ? 0 : current.back() - 1;
    const int hi = current.empty() ? grid.cols - 1 : current.back() + 1;
    for (int c = lo; c <= hi; ++c) {
      if (c < 0 || c >= grid.cols) continue;
      current.push_back(c);
      self(self);
      current.pop_back();
    }
  };
  extend(extend);
  return out;
}

std::uint64_t opponent_history_count(int length, int cols) {
  if (length < 1 || cols < 1) return 0;
  std::vector<std::uint64_t> ending_at(static_cast<std::size_t>(cols), 1);
  for (int step = 1; step < length; ++step) {
    std::vector<std::uint64_t> next(ending_at.size(), 0);
    for (int c = 0; c < cols; ++c) {
      for (int d = -1; d <= 1; ++d) {
        const int p = c + d;
        if (p >= 0 && p < cols) next[static_cast<std::size_t>(c)] += ending_at[static_cast<std::size_t>(p)];
      }
    }
    ending_at = std::move(next);
  }
  std::uint64_t total = 0;
  for (auto v : ending_at) total += v;
  return total;
}

}  // namespace tecorridor::qlearn
