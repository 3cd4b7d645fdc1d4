#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "tecorridor/rng.hpp"

/// The corridor dilemma: two players enter from opposite ends of a
/// rows x cols grid, advance one row per turn, and choose a lateral move.
/// The episode ends when both reach the middle row; they have met iff they
/// share a column there.
namespace tecorridor::env {

struct GridConfig {
  int rows = 11;
  int cols = 5;
  int turns = 5;

  /// Throws InvalidInput unless rows == 2 * turns + 1 and cols >= 2.
  void validate() const;

  bool operator==(const GridConfig&) const = default;
};

enum class Seat : std::uint8_t { P1 = 0, P2 = 1 };
enum class Action : std::uint8_t { Left = 0, Straight = 1, Right = 2 };
enum class Objective : std::uint8_t { Meet = 0, Pass = 1 };
enum class Outcome : std::uint8_t { Meet = 0, Pass = 1 };

inline constexpr int kActionCount = 3;
inline constexpr std::array<Action, kActionCount> kActions = {Action::Left, Action::Straight,
                                                              Action::Right};
inline constexpr double kObjectiveReward = 10.0;

constexpr int index_of(Seat s) { return static_cast<int>(s); }
constexpr int index_of(Action a) { return static_cast<int>(a); }
constexpr Seat other(Seat s) { return s == Seat::P1 ? Seat::P2 : Seat::P1; }
constexpr int lateral_delta(Action a) { return static_cast<int>(a) - 1; }

/// Column after applying `a` from `col`; moves off the grid are clamped.
constexpr int next_column(int col, Action a, int cols) {
  const int c = col + lateral_delta(a);
  return c < 0 ? 0 : (c >= cols ? cols - 1 : c);
}

std::string_view to_string(Seat s);
std::string_view to_string(Action a);
std::string_view to_string(Objective o);
std::string_view to_string(Outcome o);
std::optional<Seat> parse_seat(std::string_view s);
/// Accepts "left"/"straight"/"right" and the one-letter forms L/S/R.
std::optional<Action> parse_action(std::string_view s);
/// Accepts "meet"/"pass" and M/P.
std::optional<Objective> parse_objective(std::string_view s);
std::optional<Outcome> parse_outcome(std::string_view s);

struct EnvState {
  GridConfig grid;
  int turn = 0;
  int p1_col = 0;
  int p2_col = 0;
  Objective p1_objective = Objective::Meet;
  Objective p2_objective = Objective::Meet;

  int p1_row() const { return turn; }
  int p2_row() const { return grid.rows - 1 - turn; }
  bool terminal() const { return turn >= grid.turns; }
  int col(Seat s) const { return s == Seat::P1 ? p1_col : p2_col; }
  Objective objective(Seat s) const { return s == Seat::P1 ? p1_objective : p2_objective; }
  bool collaborative() const { return p1_objective == p2_objective; }

  bool operator==(const EnvState&) const = default;
};

/// Uniform start columns and objectives, drawn in the order p1_col, p2_col,
/// p1_objective, p2_objective.
EnvState reset(const GridConfig& grid, Rng& rng);
EnvState reset(const GridConfig& grid, std::uint64_t seed);

/// Simultaneous move; throws ContractViolation on a terminal state.
EnvState step(const EnvState& state, Action a1, Action a2);

/// Throws ContractViolation unless terminal.
Outcome outcome(const EnvState& state);

/// Meet iff the terminal columns coincide.
Outcome outcome_of_columns(int p1_col, int p2_col);

bool achieved(Objective objective, Outcome result);

/// 0 before the middle row; +10 / -10 at the terminal state.
double objective_reward(const EnvState& state, Seat seat);

}  // namespace tecorridor::env
