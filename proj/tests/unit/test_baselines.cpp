#include "doctest.h"

#include <array>
#include <map>
#include <set>

#include "tecorridor/baselines.hpp"
#include "tecorridor/rng.hpp"

using namespace tecorridor;
using namespace tecorridor::baselines;
using env::Action;
using env::Objective;

constexpr int kCols = 5;

TEST_CASE("pure social force") {
  Rng rng(1);
  CHECK(pure_sf_action(1, 3, Objective::Meet, kCols, rng) == Action::Right);
  CHECK(pure_sf_action(1, 3, Objective::Pass, kCols, rng) == Action::Left);
  CHECK(pure_sf_action(3, 3, Objective::Meet, kCols, rng) == Action::Straight);

  SUBCASE("ties are split uniformly") {
    std::map<Action, int> seen;
    for (int i = 0; i < 30000; ++i) ++seen[pure_sf_action(2, 2, Objective::Pass, kCols, rng)];
    CHECK(seen.count(Action::Straight) == 0);
    CHECK(std::abs(seen[Action::Left] / 30000.0 - 0.5) < 0.02);
  }

  SUBCASE("meeting never widens the gap when it can be narrowed") {
    for (int own = 0; own < kCols; ++own) {
      for (int opp = 0; opp < kCols; ++opp) {
        const int gap = std::abs(own - opp);
        bool can_reduce = false;
        for (auto a : env::kActions) can_reduce |= std::abs(env::next_column(own, a, kCols) - opp) < gap;
        for (int i = 0; i < 20; ++i) {
          const auto a = pure_sf_action(own, opp, Objective::Meet, kCols, rng);
          const int next_gap = std::abs(env::next_column(own, a, kCols) - opp);
          if (can_reduce) REQUIRE(next_gap < gap);
          REQUIRE(next_gap <= gap);
        }
      }
    }
  }
}

TEST_CASE("forecast of a pure social force opponent") {
  const auto f = forecast_pure_sf(2, 2, Objective::Pass, kCols);
  CHECK(f.cols == std::vector<int>{1, 3});
  CHECK(f.weights == std::vector<double>{0.5, 0.5});
  const auto g = forecast_pure_sf(2, 1, Objective::Meet, kCols);
  CHECK(g.cols == std::vector<int>{1});
}

TEST_CASE("perfect-knowledge social force tracks the predicted column") {
  Rng rng(2);
  SUBCASE("opponent sidesteps: forecast is the two sidesteps, not the current column") {
    const auto d = predictive_sf_decide(2, 2, Objective::Meet, Objective::Pass, kCols, rng);
    CHECK(d.forecast.cols == std::vector<int>{1, 3});
    std::map<Action, int> seen;
    for (int i = 0; i < 30000; ++i) ++seen[predictive_sf_action(2, 2, Objective::Meet, Objective::Pass, kCols, rng)];
    // every action has expected distance 1, so all three are used
    for (auto a : env::kActions) CHECK(std::abs(seen[a] / 30000.0 - 1.0 / 3.0) < 0.02);
  }
  SUBCASE("opponent approaches: PK-SF waits where Pure-SF would step over") {
    CHECK(pure_sf_action(1, 2, Objective::Meet, kCols, rng) == Action::Right);
    CHECK(predictive_sf_action(1, 2, Objective::Meet, Objective::Meet, kCols, rng) == Action::Straight);
  }
}

TEST_CASE("imperfect knowledge with p_know = 1 equals perfect knowledge") {
  const BaselineSpec ipk{BaselineKind::IPKSF, 1.0};
  const BaselineSpec pk{BaselineKind::PKSF, 0.8};
  Rng setup(3);
  for (int trial = 0; trial < 10000; ++trial) {
    const int own = setup.index(kCols);
    const int opp = setup.index(kCols);
    const auto o1 = setup.bernoulli(0.5) ? Objective::Meet : Objective::Pass;
    const auto o2 = setup.bernoulli(0.5) ? Objective::Meet : Objective::Pass;
    Rng a(static_cast<std::uint64_t>(trial)), b(static_cast<std::uint64_t>(trial));
    REQUIRE(baseline_action(ipk, own, opp, o1, o2, kCols, a) == baseline_action(pk, own, opp, o1, o2, kCols, b));
  }
}

TEST_CASE("uninformed forecast is uniform over reachable columns") {
  Rng rng(4);
  for (int opp : {0, 2, 4}) {
    std::map<int, long> freq;
    const long n = 100000;
    for (long i = 0; i < n; ++i) {
      const auto d = predictive_sf_decide(1, opp, Objective::Meet, std::nullopt, kCols, rng);
      REQUIRE(d.forecast.cols.size() == 1);
      ++freq[d.forecast.cols[0]];
    }
    std::set<int> reachable;
    for (auto a : env::kActions) reachable.insert(env::next_column(opp, a, kCols));
    CHECK(freq.size() == reachable.size());
    // clamped moves collapse onto the wall column, which is still one reachable column
    for (auto [col, count] : freq) {
      CHECK(reachable.count(col) == 1);
      CHECK(std::abs(static_cast<double>(count) / n - 1.0 / static_cast<double>(reachable.size())) < 0.02);
    }
  }
}

TEST_CASE("random agent") {
  Rng rng(5);
  std::array<long, 3> counts{};
  for (int i = 0; i < 100000; ++i) ++counts[static_cast<std::size_t>(random_action(rng))];
  for (long c : counts) CHECK(std::abs(c / 1e5 - 1.0 / 3.0) < 0.01);

  SUBCASE("ignores its inputs") {
    const BaselineSpec spec{BaselineKind::Random, 0.8};
    Rng a(9), b(9);
    for (int i = 0; i < 1000; ++i) {
      REQUIRE(baseline_action(spec, 0, 4, Objective::Meet, Objective::Pass, kCols, a) ==
              baseline_action(spec, 3, 3, Objective::Pass, Objective::Pass, kCols, b));
    }
  }
  SUBCASE("reproducible") {
    Rng a(10), b(10);
    for (int i = 0; i < 1000; ++i) REQUIRE(random_action(a) == random_action(b));
  }
}

TEST_CASE("kind names") {
  for (auto k : {BaselineKind::Random, BaselineKind::PureSF, BaselineKind::IPKSF, BaselineKind::PKSF}) {
    CHECK(parse_baseline_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_baseline_kind("sf").has_value());
}
