#include "doctest.h"

#include <array>

#include "tecorridor/corridor.hpp"
#include "tecorridor/errors.hpp"
#include "tecorridor/rng.hpp"

using namespace tecorridor;
using namespace tecorridor::env;

namespace {

EnvState at(int turn, int c1, int c2, Objective o1 = Objective::Meet, Objective o2 = Objective::Meet) {
  EnvState s;
  s.turn = turn;
  s.p1_col = c1;
  s.p2_col = c2;
  s.p1_objective = o1;
  s.p2_objective = o2;
  return s;
}

}  // namespace

TEST_CASE("grid config validation") {
  CHECK_NOTHROW(GridConfig{}.validate());
  CHECK_THROWS_AS((GridConfig{10, 5, 5}.validate()), InvalidInput);
  CHECK_THROWS_AS((GridConfig{11, 1, 5}.validate()), InvalidInput);
  CHECK_NOTHROW((GridConfig{7, 3, 3}.validate()));
}

TEST_CASE("reset") {
  const GridConfig grid;
  SUBCASE("deterministic under a fixed seed") { CHECK(reset(grid, 42) == reset(grid, 42)); }
  SUBCASE("rows at turn 0") {
    const auto s = reset(grid, 1);
    CHECK(s.turn == 0);
    CHECK(s.p1_row() == 0);
    CHECK(s.p2_row() == 10);
  }
  SUBCASE("start columns and objectives are uniform") {
    Rng rng(7);
    std::array<long, 5> c1{}, c2{};
    long meet1 = 0, meet2 = 0;
    const long n = 100000;
    for (long i = 0; i < n; ++i) {
      const auto s = reset(grid, rng);
      ++c1[static_cast<std::size_t>(s.p1_col)];
      ++c2[static_cast<std::size_t>(s.p2_col)];
      meet1 += s.p1_objective == Objective::Meet;
      meet2 += s.p2_objective == Objective::Meet;
    }
    for (int c = 0; c < 5; ++c) {
      CHECK(std::abs(static_cast<double>(c1[static_cast<std::size_t>(c)]) / n - 0.2) < 0.01);
      CHECK(std::abs(static_cast<double>(c2[static_cast<std::size_t>(c)]) / n - 0.2) < 0.01);
    }
    CHECK(std::abs(static_cast<double>(meet1) / n - 0.5) < 0.01);
    CHECK(std::abs(static_cast<double>(meet2) / n - 0.5) < 0.01);
  }
}

TEST_CASE("step") {
  SUBCASE("straight keeps the column") { CHECK(step(at(0, 2, 2), Action::Straight, Action::Straight).p1_col == 2); }
  SUBCASE("walls clamp") {
    const auto s = step(at(0, 0, 4), Action::Left, Action::Right);
    CHECK(s.p1_col == 0);
    CHECK(s.p2_col == 4);
  }
  SUBCASE("moves are simultaneous and lateral") {
    const auto s = step(at(1, 2, 2), Action::Right, Action::Left);
    CHECK(s.p1_col == 3);
    CHECK(s.p2_col == 1);
    CHECK(s.turn == 2);
    CHECK(s.p1_row() == 2);
    CHECK(s.p2_row() == 8);
  }
  SUBCASE("turn 4 -> 5 is terminal with both agents on row 5") {
    const auto s = step(at(4, 1, 3), Action::Straight, Action::Straight);
    CHECK(s.terminal());
    CHECK(s.p1_row() == 5);
    CHECK(s.p2_row() == 5);
  }
  SUBCASE("stepping a terminal state is a contract violation") {
    CHECK_THROWS_AS(step(at(5, 1, 1), Action::Left, Action::Left), ContractViolation);
  }
}

TEST_CASE("outcome and rewards") {
  CHECK(outcome(at(5, 3, 3)) == Outcome::Meet);
  CHECK(outcome(at(5, 0, 4)) == Outcome::Pass);
  CHECK_THROWS_AS(outcome(at(4, 3, 3)), ContractViolation);

  CHECK(objective_reward(at(2, 3, 3), Seat::P1) == 0.0);
  CHECK(objective_reward(at(2, 3, 3), Seat::P2) == 0.0);
  const auto meet = at(5, 3, 3, Objective::Meet, Objective::Pass);
  CHECK(objective_reward(meet, Seat::P1) == 10.0);
  CHECK(objective_reward(meet, Seat::P2) == -10.0);
}

TEST_CASE("episode invariants under random play") {
  const GridConfig grid;
  Rng rng(2024);
  long meets = 0;
  const long n = 100000;
  for (long i = 0; i < n; ++i) {
    auto s = reset(grid, rng);
    int steps = 0;
    while (!s.terminal()) {
      s = step(s, static_cast<Action>(rng.index(3)), static_cast<Action>(rng.index(3)));
      REQUIRE(s.p1_col >= 0);
      REQUIRE(s.p1_col < 5);
      REQUIRE(s.p2_col >= 0);
      REQUIRE(s.p2_col < 5);
      ++steps;
    }
    REQUIRE(steps == 5);
    const double r1 = objective_reward(s, Seat::P1);
    const double r2 = objective_reward(s, Seat::P2);
    if (s.collaborative()) {
      REQUIRE(r1 == r2);
    } else {
      REQUIRE(r1 == -r2);
    }
    meets += outcome(s) == Outcome::Meet;
  }
  CHECK(std::abs(static_cast<double>(meets) / n - 0.2) < 0.015);
}

TEST_CASE("text conversions round-trip") {
  for (auto a : kActions) CHECK(parse_action(to_string(a)) == a);
  CHECK(parse_seat("P2") == Seat::P2);
  CHECK(parse_objective("pass") == Objective::Pass);
  CHECK_FALSE(parse_action("up").has_value());
}
