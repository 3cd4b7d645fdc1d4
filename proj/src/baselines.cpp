#include "tecorridor/baselines.hpp"

#include <array>
#include <cmath>
#include <cstdlib>

#include "tecorridor/errors.hpp"

namespace tecorridor::baselines {

using env::Action;
using env::Objective;

namespace {

constexpr double kTieTolerance = 1e-12;

void check_columns(int own_col, int opp_col, int cols) {
  if (own_col < 0 || own_col >= cols || opp_col < 0 || opp_col >= cols) {
    throw InvalidInput("baseline: column out of range");
  }
}

// Picks the action with the best score (lowest for Meet, highest for Pass),
// breaking ties uniformly.
template <class Score>
Action choose(Objective objective, Score&& score, Rng& rng) {
  std::array<double, env::kActionCount> values{};
  for (Action a : env::kActions) values[static_cast<std::size_t>(env::index_of(a))] = score(a);
  const bool minimise = objective == Objective::Meet;
  double best = values[0];
  for (double v : values) best = minimise ? std::min(best, v) : std::max(best, v);
  std::array<Action, env::kActionCount> tied{};
  int n = 0;
  for (Action a : env::kActions) {
    if (std::abs(values[static_cast<std::size_t>(env::index_of(a))] - best) <= kTieTolerance) {
      tied[static_cast<std::size_t>(n++)] = a;
    }
  }
  return n == 1 ? tied[0] : tied[static_cast<std::size_t>(rng.index(n))];
}

}  // namespace

std::string_view to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::Random: return "random";
    case BaselineKind::PureSF: return "pure-sf";
    case BaselineKind::IPKSF: return "ipk-sf";
    case BaselineKind::PKSF: return "pk-sf";
  }
  return "?";
}

std::optional<BaselineKind> parse_baseline_kind(std::string_view s) {
  if (s == "random") return BaselineKind::Random;
  if (s == "pure-sf") return BaselineKind::PureSF;
  if (s == "ipk-sf") return BaselineKind::IPKSF;
  if (s == "pk-sf") return BaselineKind::PKSF;
  return std::nullopt;
}

Action random_action(Rng& rng) { return static_cast<Action>(rng.index(env::kActionCount)); }

Action pure_sf_action(int own_col, int opp_col, Objective objective, int cols, Rng& rng) {
  check_columns(own_col, opp_col, cols);
  return choose(
      objective,
      [&](Action a) { return std::abs(env::next_column(own_col, a, cols) - opp_col); }, rng);
}

ColumnForecast forecast_pure_sf(int opp_col, int own_col, Objective opp_objective, int cols) {
  check_columns(own_col, opp_col, cols);
  const bool minimise = opp_objective == Objective::Meet;
  std::array<int, env::kActionCount> dist{};
  for (Action a : env::kActions) {
    dist[static_cast<std::size_t>(env::index_of(a))] =
        std::abs(env::next_column(opp_col, a, cols) - own_col);
  }
  int best = dist[0];
  for (int d : dist) best = minimise ? std::min(best, d) : std::max(best, d);
  ColumnForecast f;
  int tied = 0;
  for (int d : dist) tied += d == best;
  for (Action a : env::kActions) {
    if (dist[static_cast<std::size_t>(env::index_of(a))] != best) continue;
    const int c = env::next_column(opp_col, a, cols);
    const double w = 1.0 / tied;
    bool merged = false;
    for (std::size_t i = 0; i < f.cols.size(); ++i) {
      if (f.cols[i] == c) {
        f.weights[i] += w;
        merged = true;
      }
    }
    if (!merged) {
      f.cols.push_back(c);
      f.weights.push_back(w);
    }
  }
  return f;
}

SfDecision predictive_sf_decide(int own_col, int opp_col, Objective own_objective,
                                std::optional<Objective> opp_objective, int cols, Rng& rng) {
  check_columns(own_col, opp_col, cols);
  ColumnForecast forecast;
  if (opp_objective) {
    forecast = forecast_pure_sf(opp_col, own_col, *opp_objective, cols);
  } else {
    std::vector<int> reachable;
    for (int c = opp_col - 1; c <= opp_col + 1; ++c) {
      if (c >= 0 && c < cols) reachable.push_back(c);
    }
    forecast.cols = {reachable[static_cast<std::size_t>(rng.index(static_cast<int>(reachable.size())))]};
    forecast.weights = {1.0};
  }
  const Action action = choose(
      own_objective,
      [&](Action a) {
        const int own_next = env::next_column(own_col, a, cols);
        double expected = 0.0;
        for (std::size_t i = 0; i < forecast.cols.size(); ++i) {
          expected += forecast.weights[i] * std::abs(own_next - forecast.cols[i]);
        }
        return expected;
      },
      rng);
  return {action, std::move(forecast)};
}

Action predictive_sf_action(int own_col, int opp_col, Objective own_objective,
                            std::optional<Objective> opp_objective, int cols, Rng& rng) {
  return predictive_sf_decide(own_col, opp_col, own_objective, opp_objective, cols, rng).action;
}

Action baseline_action(const BaselineSpec& spec, int own_col, int opp_col, Objective own_objective,
                       Objective opp_objective, int cols, Rng& rng) {
  switch (spec.kind) {
    case BaselineKind::Random:
      return random_action(rng);
    case BaselineKind::PureSF:
      return pure_sf_action(own_col, opp_col, own_objective, cols, rng);
    case BaselineKind::PKSF:
      return predictive_sf_action(own_col, opp_col, own_objective, opp_objective, cols, rng);
    case BaselineKind::IPKSF: {
      if (!(spec.p_know >= 0.0 && spec.p_know <= 1.0)) throw InvalidInput("p_know must be in [0, 1]");
      bool informed = spec.p_know >= 1.0;
      if (spec.p_know > 0.0 && spec.p_know < 1.0) informed = rng.bernoulli(spec.p_know);
      return predictive_sf_action(own_col, opp_col, own_objective,
                                  informed ? std::optional<Objective>(opp_objective) : std::nullopt,
                                  cols, rng);
    }
  }
  throw ContractViolation("baseline_action: unknown baseline kind");
}

}  // namespace tecorridor::baselines
