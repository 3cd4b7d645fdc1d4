#include "doctest.h"

#include <cmath>
#include <sstream>

#include "tecorridor/errors.hpp"
#include "tecorridor/metrics.hpp"
#include "tecorridor/rng.hpp"

using namespace tecorridor;
using namespace tecorridor::metrics;
using env::Objective;
using env::Outcome;
using env::Seat;

namespace {

// An episode with straight-line trajectories ending at the given columns.
EpisodeRecord episode(Objective o1, Objective o2, int end1, int end2, std::vector<double> te1 = {},
                      std::vector<double> hp1 = {}) {
  EpisodeRecord r;
  r.seats[0].objective = o1;
  r.seats[1].objective = o2;
  r.seats[0].cols.assign(6, end1);
  r.seats[1].cols.assign(6, end2);
  r.seats[0].actions.assign(5, env::Action::Straight);
  r.seats[1].actions.assign(5, env::Action::Straight);
  r.outcome = env::outcome_of_columns(end1, end2);
  r.seats[0].success = env::achieved(o1, r.outcome);
  r.seats[1].success = env::achieved(o2, r.outcome);
  if (!te1.empty()) {
    r.seats[0].te = te1;
    r.seats[0].h_plus = hp1.empty() ? std::vector<double>(te1.size(), 0.0) : hp1;
    r.seats[0].h_minus.assign(te1.size(), 0.0);
    r.seats[0].rewards.assign(te1.size(), 0.0);
  }
  return r;
}

std::vector<EpisodeRecord> random_log(Rng& rng, int n) {
  std::vector<EpisodeRecord> log;
  for (int i = 0; i < n; ++i) {
    log.push_back(episode(rng.bernoulli(0.5) ? Objective::Meet : Objective::Pass,
                          rng.bernoulli(0.5) ? Objective::Meet : Objective::Pass, rng.index(5), rng.index(5)));
  }
  return log;
}

}  // namespace

TEST_SUITE("success rates") {
  TEST_CASE("4 collaborative episodes with 3 successes") {
    std::vector<EpisodeRecord> log = {
        episode(Objective::Meet, Objective::Meet, 2, 2), episode(Objective::Meet, Objective::Meet, 1, 1),
        episode(Objective::Pass, Objective::Pass, 0, 4), episode(Objective::Pass, Objective::Pass, 3, 3)};
    const auto r = success_rates(log, Seat::P1);
    CHECK(*r.srcl == doctest::Approx(0.75));
    CHECK_FALSE(r.srcp.has_value());
    CHECK(*r.srm == doctest::Approx(1.0));
    CHECK(*r.srp == doctest::Approx(0.5));
  }

  TEST_CASE("competitive-only log leaves SRCL absent") {
    std::vector<EpisodeRecord> log = {episode(Objective::Meet, Objective::Pass, 2, 2)};
    const auto r = success_rates(log, Seat::P2);
    CHECK_FALSE(r.srcl.has_value());
    CHECK(*r.srcp == 0.0);
  }

  TEST_CASE("empty log is rejected") {
    CHECK_THROWS_AS(success_rates(std::vector<EpisodeRecord>{}, Seat::P1), InvalidInput);
  }

  TEST_CASE("competitive SRCPs sum to one") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const auto log = random_log(rng, 40);
      const auto a = success_rates(log, Seat::P1);
      const auto b = success_rates(log, Seat::P2);
      if (a.srcp) REQUIRE(*a.srcp + *b.srcp == doctest::Approx(1.0).epsilon(1e-15));
    }
  }

  TEST_CASE("independent uniform terminal columns: SRP 0.8, SRM 0.2") {
    Rng rng(4);
    const auto log = random_log(rng, 100000);
    for (auto seat : {Seat::P1, Seat::P2}) {
      const auto r = success_rates(log, seat);
      CHECK(std::abs(*r.srp - 0.8) < 0.015);
      CHECK(std::abs(*r.srm - 0.2) < 0.015);
    }
  }
}

TEST_SUITE("cps") {
  TEST_CASE("reference values") {
    CHECK(cps(0.8, 0.2, 0.8, 0.2) == doctest::Approx(0.32));
    CHECK(cps(1, 1, 1, 1) == doctest::Approx(1.0));
    CHECK(std::abs(cps(0.9443, 0.4913, 0.9115, 0.4673) - 0.57) <= 0.005);
  }

  TEST_CASE("symmetric in the agents and linear in each rate") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
      const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform(), d = rng.uniform();
      REQUIRE(cps(a, b, c, d) == doctest::Approx(cps(c, d, a, b)).epsilon(1e-14));
      const double h = 0.125;
      const double slope1 = cps(a + h, b, c, d) - cps(a, b, c, d);
      const double slope2 = cps(a + 2 * h, b, c, d) - cps(a + h, b, c, d);
      REQUIRE(slope1 == doctest::Approx(slope2).epsilon(1e-12));
    }
  }

  TEST_CASE("absent when a rate is missing") {
    SuccessRates full{0.5, 0.5, 0.5, 0.5};
    SuccessRates partial{0.5, 0.5, std::nullopt, 0.5};
    CHECK(cps(full, full).has_value());
    CHECK_FALSE(cps(full, partial).has_value());
  }
}

TEST_SUITE("information averages") {
  TEST_CASE("per-step means") {
    std::vector<EpisodeRecord> zero = {episode(Objective::Meet, Objective::Meet, 1, 1, {0, 0, 0, 0, 0})};
    CHECK(*averaged_te(zero, Seat::P1) == 0.0);
    CHECK_FALSE(averaged_te(zero, Seat::P2).has_value());

    std::vector<EpisodeRecord> two = {episode(Objective::Meet, Objective::Meet, 1, 1, {1.0, 0.5})};
    CHECK(*averaged_te(two, Seat::P1) == doctest::Approx(0.75));
  }

  TEST_CASE("equals the step-weighted mean of per-episode means") {
    Rng rng(6);
    std::vector<EpisodeRecord> log;
    double weighted = 0;
    long steps = 0;
    for (int i = 0; i < 200; ++i) {
      std::vector<double> te(static_cast<std::size_t>(1 + rng.index(5)));
      double sum = 0;
      for (auto& v : te) sum += (v = rng.uniform() * 1.5);
      weighted += sum;
      steps += static_cast<long>(te.size());
      log.push_back(episode(Objective::Meet, Objective::Pass, 0, 0, te));
    }
    CHECK(*averaged_te(log, Seat::P1) == doctest::Approx(weighted / static_cast<double>(steps)).epsilon(1e-12));
  }
}

TEST_SUITE("heatmap") {
  TEST_CASE("uniform policy gives log2 3 in every visited cell") {
    const double u = std::log2(3.0);
    std::vector<EpisodeRecord> log;
    for (int c = 0; c < 3; ++c) {
      log.push_back(episode(Objective::Meet, Objective::Meet, c, c, {0, 0, 0, 0, 0}, {u, u, u, u, u}));
    }
    const auto map = entropy_heatmap(log, Seat::P1, env::GridConfig{});
    CHECK(map.h_plus.size() <= 25);
    CHECK(map.visited_cells() == 15);
    for (int t = 0; t < 5; ++t) {
      for (int c = 0; c < 5; ++c) {
        if (c < 3) {
          CHECK(*map.h_plus_at(t, c) == doctest::Approx(u));
        } else {
          CHECK_FALSE(map.h_plus_at(t, c).has_value());
        }
      }
    }
    const auto j = to_json(map);
    CHECK(j["h_plus"].size() == 5);
    CHECK(j["h_plus"][0][4].is_null());
  }
}

TEST_SUITE("reports") {
  TEST_CASE("aggregate and CSV") {
    Rng rng(8);
    std::vector<SeedMetrics> seeds;
    for (std::uint64_t s = 1; s <= 3; ++s) seeds.push_back(seed_metrics(random_log(rng, 500), s, {"non", "pos"}));
    const auto report = aggregate("demo", seeds);
    CHECK(report.seeds.size() == 3);
    CHECK(report.agent(Seat::P2).label == "pos");
    CHECK(report.agents[0].srcp.stddev.has_value());

    std::ostringstream csv;
    write_csv_header(csv);
    write_csv_rows(csv, report);
    const auto text = csv.str();
    CHECK(text.rfind("experiment,seed,agent,SRCP,SRCL,SRP,SRM,CPS,avg_TE_bits,avg_H_plus,avg_H_minus\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 6 + 4);
    // rule-free log: TE columns are empty cells, not zeros
    CHECK(text.find("demo,1,P1:non,") != std::string::npos);
    CHECK(text.find(",,,\n") != std::string::npos);
  }

  TEST_CASE("sample standard deviation") {
    const std::vector<std::optional<double>> v = {1.0, std::nullopt, 3.0};
    const auto s = summarize(v);
    CHECK(*s.mean == doctest::Approx(2.0));
    CHECK(*s.stddev == doctest::Approx(std::sqrt(2.0)));
  }
}
