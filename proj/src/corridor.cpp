#include "tecorridor/corridor.hpp"

#include "tecorridor/errors.hpp"

namespace tecorridor::env {

void GridConfig::validate() const {
  if (turns < 1) throw InvalidInput("grid: turns must be >= 1");
  if (rows != 2 * turns + 1) throw InvalidInput("grid: rows must equal 2 * turns + 1");
  if (cols < 2) throw InvalidInput("grid: cols must be >= 2");
}

std::string_view to_string(Seat s) { return s == Seat::P1 ? "P1" : "P2"; }

std::string_view to_string(Action a) {
  switch (a) {
    case Action::Left: return "left";
    case Action::Straight: return "straight";
    case Action::Right: return "right";
  }
  return "?";
}

std::string_view to_string(Objective o) { return o == Objective::Meet ? "meet" : "pass"; }
std::string_view to_string(Outcome o) { return o == Outcome::Meet ? "meet" : "pass"; }

std::optional<Seat> parse_seat(std::string_view s) {
  if (s == "P1" || s == "p1") return Seat::P1;
  if (s == "P2" || s == "p2") return Seat::P2;
  return std::nullopt;
}

std::optional<Action> parse_action(std::string_view s) {
  if (s == "left" || s == "L") return Action::Left;
  if (s == "straight" || s == "S") return Action::Straight;
  if (s == "right" || s == "R") return Action::Right;
  return std::nullopt;
}

std::optional<Objective> parse_objective(std::string_view s) {
  if (s == "meet" || s == "M") return Objective::Meet;
  if (s == "pass" || s == "P") return Objective::Pass;
  return std::nullopt;
}

std::optional<Outcome> parse_outcome(std::string_view s) {
  if (s == "meet") return Outcome::Meet;
  if (s == "pass") return Outcome::Pass;
  return std::nullopt;
}

EnvState reset(const GridConfig& grid, Rng& rng) {
  grid.validate();
  EnvState s;
  s.grid = grid;
  s.turn = 0;
  s.p1_col = rng.index(grid.cols);
  s.p2_col = rng.index(grid.cols);
  s.p1_objective = rng.index(2) == 0 ? Objective::Meet : Objective::Pass;
  s.p2_objective = rng.index(2) == 0 ? Objective::Meet : Objective::Pass;
  return s;
}

EnvState reset(const GridConfig& grid, std::uint64_t seed) {
  Rng rng(seed);
  return reset(grid, rng);
}

EnvState step(const EnvState& state, Action a1, Action a2) {
  if (state.terminal()) throw ContractViolation("step called on a terminal state");
  EnvState next = state;
  next.p1_col = next_column(state.p1_col, a1, state.grid.cols);
  next.p2_col = next_column(state.p2_col, a2, state.grid.cols);
  ++next.turn;
  return next;
}

Outcome outcome_of_columns(int p1_col, int p2_col) {
  return p1_col == p2_col ? Outcome::Meet : Outcome::Pass;
}

Outcome outcome(const EnvState& state) {
  if (!state.terminal()) throw ContractViolation("outcome requested before the middle row");
  return outcome_of_columns(state.p1_col, state.p2_col);
}

bool achieved(Objective objective, Outcome result) {
  return (objective == Objective::Meet) == (result == Outcome::Meet);
}

double objective_reward(const EnvState& state, Seat seat) {
  if (!state.terminal()) return 0.0;
  return achieved(state.objective(seat), outcome(state)) ? kObjectiveReward : -kObjectiveReward;
}

}  // namespace tecorridor::env
