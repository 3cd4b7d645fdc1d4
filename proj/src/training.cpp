#include "tecorridor/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <mutex>
#include <sstream>
#include <thread>

#include "tecorridor/errors.hpp"
#include "text_util.hpp"

namespace tecorridor::training {

using env::Seat;
using qlearn::RewardMode;

namespace {

constexpr std::uint64_t kTrainStream = 0x7261696eULL;
constexpr std::uint64_t kEvalStream = 0x6576616cULL;

constexpr std::array<Seat, 2> kSeats = {Seat::P1, Seat::P2};

std::string phi_text(double v) { return detail::format_double(v); }

std::string learner_label(double phi, RewardMode mode, bool mixed) {
  std::string base;
  if (mixed) {
    base = "mixed";
  } else if (phi > 0) {
    base = "pos";
  } else if (phi < 0) {
    base = "neg";
  } else {
    base = "non";
  }
  if (mode == RewardMode::EntropyOnly) base += "-h";
  return base;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pair specs

SideSpec parse_side_spec(std::string_view text) {
  text = detail::trim(text);
  std::string_view name = text;
  std::string_view options;
  if (const auto open = text.find('('); open != std::string_view::npos) {
    if (text.back() != ')') throw InvalidInput("side spec '" + std::string(text) + "': missing ')'");
    name = detail::trim(text.substr(0, open));
    options = text.substr(open + 1, text.size() - open - 2);
  }

  SideSpec side;
  if (name == "non" || name == "pos" || name == "neg" || name == "mixed") {
    side.kind = SideSpec::Kind::QLearner;
    side.phi = name == "pos" ? kInfluencePhi : (name == "neg" ? -kInfluencePhi : 0.0);
    if (name == "mixed") side.phi_choices = {0.0, kInfluencePhi, -kInfluencePhi};
  } else if (auto kind = baselines::parse_baseline_kind(name)) {
    side.kind = SideSpec::Kind::Baseline;
    side.baseline.kind = *kind;
    side.mode = RewardMode::None;
  } else {
    throw InvalidInput("unknown side '" + std::string(name) + "'");
  }

  if (!detail::trim(options).empty()) {
    for (auto opt : detail::split(options, ',')) {
      opt = detail::trim(opt);
      const auto eq = opt.find('=');
      if (eq == std::string_view::npos) throw InvalidInput("side option without '=': " + std::string(opt));
      const auto key = detail::trim(opt.substr(0, eq));
      const auto value = detail::trim(opt.substr(eq + 1));
      if (key == "phi" && side.learner()) {
        auto v = detail::parse_double(value);
        if (!v || !std::isfinite(*v)) throw InvalidInput("bad phi '" + std::string(value) + "'");
        side.phi = *v;
      } else if (key == "mode" && side.learner()) {
        auto m = qlearn::parse_reward_mode(value);
        if (!m) throw InvalidInput("bad mode '" + std::string(value) + "'");
        side.mode = *m;
      } else if (key == "choices" && side.learner()) {
        side.phi_choices.clear();
        for (auto part : detail::split(value, '|')) {
          auto v = detail::parse_double(detail::trim(part));
          if (!v) throw InvalidInput("bad phi choice '" + std::string(part) + "'");
          side.phi_choices.push_back(*v);
        }
      } else if (key == "p_know" && side.baseline.kind == baselines::BaselineKind::IPKSF &&
                 !side.learner()) {
        auto v = detail::parse_double(value);
        if (!v || *v < 0.0 || *v > 1.0) throw InvalidInput("p_know must be in [0, 1]");
        side.baseline.p_know = *v;
      } else {
        throw InvalidInput("option '" + std::string(key) + "' not valid for side '" +
                           std::string(name) + "'");
      }
    }
  }
  side.label = side.learner() ? learner_label(side.phi, side.mode, !side.phi_choices.empty())
                              : std::string(baselines::to_string(side.baseline.kind));
  return side;
}

PairSpec parse_pair_spec(std::string_view text) {
  // Split on the top-level ':' (option lists never contain one).
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || text.find(':', colon + 1) != std::string_view::npos) {
    throw InvalidInput("pair spec must be '<side>:<side>', got '" + std::string(text) + "'");
  }
  PairSpec pair;
  pair.sides[0] = parse_side_spec(text.substr(0, colon));
  pair.sides[1] = parse_side_spec(text.substr(colon + 1));
  return pair;
}

std::string to_string(const SideSpec& side) {
  if (!side.learner()) {
    std::string out(baselines::to_string(side.baseline.kind));
    if (side.baseline.kind == baselines::BaselineKind::IPKSF &&
        side.baseline.p_know != baselines::kDefaultKnowledgeProbability) {
      out += "(p_know=" + phi_text(side.baseline.p_know) + ")";
    }
    return out;
  }
  std::string out;
  std::vector<std::string> opts;
  if (side.phi_choices.empty()) {
    out = side.phi > 0 ? "pos" : (side.phi < 0 ? "neg" : "non");
    if (side.phi != 0.0 && std::abs(side.phi) != kInfluencePhi) opts.push_back("phi=" + phi_text(side.phi));
  } else {
    out = "mixed";
    const std::vector<double> standard = {0.0, kInfluencePhi, -kInfluencePhi};
    if (side.phi_choices != standard) opts.push_back("choices=" + detail::join(side.phi_choices, "|", phi_text));
  }
  if (side.mode != RewardMode::TE) opts.push_back("mode=" + std::string(qlearn::to_string(side.mode)));
  if (!opts.empty()) out += "(" + detail::join(opts, ",", [](const std::string& s) { return s; }) + ")";
  return out;
}

std::string to_string(const PairSpec& pair) {
  return to_string(pair.sides[0]) + ":" + to_string(pair.sides[1]);
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  grid.validate();
  if (episodes <= 0) throw InvalidInput("episodes must be > 0");
  if (eval_episodes < 0) throw InvalidInput("eval_episodes must be >= 0");
  if (seeds.empty()) throw InvalidInput("at least one seed is required");
  if (history_len < 0 || history_len > grid.turns) throw InvalidInput("history length must be in [0, turns]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must be in (0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("gamma must be in [0, 1]");
  if (jobs < 1) throw InvalidInput("jobs must be >= 1");
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const auto key = detail::trim(text.substr(0, eq));
    if (key.empty()) throw ParseError(line_no, "empty key");
    out[std::string(key)] = std::string(detail::trim(text.substr(eq + 1)));
  }
  return out;
}

namespace {

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "experiment", "pair", "episodes", "seeds", "alpha", "gamma", "history",
      "eval_episodes", "rows", "cols", "turns", "divisor", "jobs"};
  return keys;
}

template <class Int>
Int int_value(const std::string& key, const std::string& value) {
  auto v = detail::parse_int<Int>(value);
  if (!v) throw InvalidInput("config '" + key + "': expected an integer, got '" + value + "'");
  return *v;
}

double real_value(const std::string& key, const std::string& value) {
  auto v = detail::parse_double(value);
  if (!v) throw InvalidInput("config '" + key + "': expected a number, got '" + value + "'");
  return *v;
}

}  // namespace

KeyValues environment_overrides(std::string_view prefix) {
  KeyValues out;
  for (const auto& key : known_keys()) {
    std::string name(prefix);
    for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(name.c_str())) out[key] = v;
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& value) {
  std::vector<std::uint64_t> seeds;
  for (auto part : detail::split(value, ',')) {
    part = detail::trim(part);
    if (part.empty()) continue;
    auto v = detail::parse_int<std::uint64_t>(part);
    if (!v) throw InvalidInput("bad seed '" + std::string(part) + "'");
    seeds.push_back(*v);
  }
  if (seeds.empty()) throw InvalidInput("seed list is empty");
  return seeds;
}

void apply(ExperimentConfig& config, const KeyValues& values) {
  for (const auto& [key, value] : values) {
    if (key == "experiment") {
      config.experiment = value;
    } else if (key == "pair") {
      config.pair = parse_pair_spec(value);
    } else if (key == "episodes") {
      config.episodes = int_value<long>(key, value);
    } else if (key == "seeds") {
      config.seeds = parse_seed_list(value);
    } else if (key == "alpha") {
      config.alpha = real_value(key, value);
    } else if (key == "gamma") {
      config.gamma = real_value(key, value);
    } else if (key == "history") {
      config.history_len = int_value<int>(key, value);
    } else if (key == "eval_episodes") {
      config.eval_episodes = int_value<long>(key, value);
    } else if (key == "rows") {
      config.grid.rows = int_value<int>(key, value);
    } else if (key == "cols") {
      config.grid.cols = int_value<int>(key, value);
    } else if (key == "turns") {
      config.grid.turns = int_value<int>(key, value);
    } else if (key == "divisor") {
      auto d = qlearn::parse_marginal_divisor(value);
      if (!d) throw InvalidInput("config 'divisor': expected all|visited|window");
      config.divisor = *d;
    } else if (key == "jobs") {
      config.jobs = int_value<int>(key, value);
    } else {
      throw InvalidInput("unknown config key '" + key + "'");
    }
  }
}

std::string to_key_values(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "experiment = " << c.experiment << '\n'
      << "pair = " << to_string(c.pair) << '\n'
      << "episodes = " << c.episodes << '\n'
      << "seeds = " << detail::join(c.seeds, ",", [](std::uint64_t s) { return std::to_string(s); })
      << '\n'
      << "alpha = " << detail::format_double(c.alpha) << '\n'
      << "gamma = " << detail::format_double(c.gamma) << '\n'
      << "history = " << c.history_len << '\n'
      << "eval_episodes = " << c.eval_episodes << '\n'
      << "rows = " << c.grid.rows << '\n'
      << "cols = " << c.grid.cols << '\n'
      << "turns = " << c.grid.turns << '\n'
      << "divisor = " << qlearn::to_string(c.divisor) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Episodes

double epsilon(long iteration, long max_iteration) {
  if (max_iteration <= 0) throw InvalidInput("epsilon: max_iteration must be > 0");
  return std::max(1.0 - static_cast<double>(iteration) / static_cast<double>(max_iteration), 0.0);
}

Pair make_pair(const PairSpec& spec, const ExperimentConfig& config) {
  Pair pair;
  for (Seat s : kSeats) {
    Participant& p = pair[static_cast<std::size_t>(env::index_of(s))];
    p.spec = spec.side(s);
    if (!p.spec.learner()) continue;
    qlearn::TableSettings settings;
    settings.seat = s;
    settings.grid = config.grid;
    settings.history_len = config.history_len;
    settings.phi = p.spec.phi;
    settings.mode = p.spec.mode;
    settings.divisor = config.divisor;
    settings.phi_choices = p.spec.phi_choices;
    p.table = std::make_shared<qlearn::SparseQTable>(std::move(settings));
  }
  return pair;
}

std::array<std::string, 2> labels(const Pair& pair) { return {pair[0].spec.label, pair[1].spec.label}; }

EpisodeRecord run_episode(Pair& pair, const EpisodeSettings& settings, Rng& rng, long round) {
  const env::GridConfig& grid = settings.grid;
  const bool train = settings.mode == RunMode::Train;
  const double eps = train ? settings.epsilon : 0.0;

  env::EnvState state = env::reset(grid, rng);
  EpisodeRecord rec;
  rec.round = round;
  std::array<std::vector<int>, 2> traj;
  for (Seat s : kSeats) {
    const auto i = static_cast<std::size_t>(env::index_of(s));
    Participant& p = pair[i];
    if (train && p.table && !p.spec.phi_choices.empty()) {
      const auto& choices = p.spec.phi_choices;
      p.table->set_phi(choices[static_cast<std::size_t>(rng.index(static_cast<int>(choices.size())))]);
    }
    SeatTrace& t = rec.seats[i];
    t.objective = state.objective(s);
    t.phi = p.table ? p.table->phi() : 0.0;
    traj[i].push_back(state.col(s));
  }

  for (int turn = 0; turn < grid.turns; ++turn) {
    std::array<std::optional<qlearn::JointHistoryKey>, 2> keys;
    std::array<qlearn::InfluenceMeasures, 2> measures{};
    std::array<env::Action, 2> actions{};
    for (Seat s : kSeats) {
      const auto i = static_cast<std::size_t>(env::index_of(s));
      const auto o = 1 - i;
      const Participant& p = pair[i];
      if (p.table) {
        keys[i] = qlearn::make_key(s, turn, state.objective(s), traj[i], traj[o],
                                   p.table->history_len());
        measures[i] = qlearn::influence_measures(*p.table, *keys[i]);
        actions[i] = qlearn::select_action(*p.table, *keys[i], eps, rng);
      } else {
        actions[i] = baselines::baseline_action(p.spec.baseline, state.col(s),
                                                state.col(env::other(s)), state.objective(s),
                                                state.objective(env::other(s)), grid.cols, rng);
      }
    }

    const env::EnvState next = env::step(state, actions[0], actions[1]);
    for (Seat s : kSeats) {
      const auto i = static_cast<std::size_t>(env::index_of(s));
      traj[i].push_back(next.col(s));
    }

    for (Seat s : kSeats) {
      const auto i = static_cast<std::size_t>(env::index_of(s));
      const auto o = 1 - i;
      SeatTrace& t = rec.seats[i];
      t.actions.push_back(actions[i]);
      Participant& p = pair[i];
      if (!p.table) continue;
      const double reward = qlearn::shaped_reward(*p.table, measures[i], env::objective_reward(next, s));
      t.te.push_back(measures[i].te.value);
      t.h_plus.push_back(measures[i].h_plus.value);
      t.h_minus.push_back(measures[i].h_minus.value);
      t.rewards.push_back(reward);
      if (train) {
        std::optional<qlearn::JointHistoryKey> next_key;
        if (!next.terminal()) {
          next_key = qlearn::make_key(s, turn + 1, next.objective(s), traj[i], traj[o],
                                      p.table->history_len());
        }
        qlearn::td_update(*p.table, *keys[i], actions[i], reward, next_key, settings.alpha,
                          settings.gamma);
      }
    }
    state = next;
  }

  rec.outcome = env::outcome(state);
  for (Seat s : kSeats) {
    SeatTrace& t = rec.seat(s);
    t.cols = traj[static_cast<std::size_t>(env::index_of(s))];
    t.success = env::achieved(t.objective, rec.outcome);
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Training and evaluation

SeedRun train_seed(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  SeedRun run;
  run.seed = seed;
  run.pair = make_pair(config.pair, config);
  Rng rng({seed, kTrainStream});
  EpisodeSettings settings{config.grid, 1.0, RunMode::Train, config.alpha, config.gamma};
  long coll = 0, coll_win = 0, comp = 0, comp_win = 0;
  for (long ep = 0; ep < config.episodes; ++ep) {
    settings.epsilon = epsilon(ep, config.episodes);
    const EpisodeRecord rec = run_episode(run.pair, settings, rng, ep);
    if (rec.collaborative()) {
      ++coll;
      coll_win += rec.seats[0].success;
    } else {
      ++comp;
      comp_win += rec.seats[0].success;
    }
    if ((ep + 1) % kTrainingLogWindow == 0 || ep + 1 == config.episodes) {
      TrainingWindow w;
      w.end_episode = ep + 1;
      if (coll) w.srcl = static_cast<double>(coll_win) / static_cast<double>(coll);
      if (comp) w.srcp_p1 = static_cast<double>(comp_win) / static_cast<double>(comp);
      run.log.push_back(w);
      coll = coll_win = comp = comp_win = 0;
    }
  }
  return run;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(jobs, static_cast<int>(n))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

TrainedPair train_pair(const ExperimentConfig& config) {
  config.validate();
  TrainedPair trained;
  trained.config = config;
  trained.runs.resize(config.seeds.size());
  parallel_for(config.seeds.size(), config.jobs,
               [&](std::size_t i) { trained.runs[i] = train_seed(config, config.seeds[i]); });
  return trained;
}

std::vector<EpisodeRecord> evaluate_seed(const Pair& pair, const env::GridConfig& grid,
                                         std::uint64_t seed, long episodes) {
  Pair frozen = pair;  // shares the tables; Eval mode never writes them
  Rng rng({seed, kEvalStream});
  EpisodeSettings settings{grid, 0.0, RunMode::Eval, qlearn::kDefaultAlpha, qlearn::kDefaultGamma};
  std::vector<EpisodeRecord> out;
  out.reserve(static_cast<std::size_t>(episodes));
  for (long ep = 0; ep < episodes; ++ep) out.push_back(run_episode(frozen, settings, rng, ep));
  return out;
}

metrics::MetricsReport evaluate(const TrainedPair& trained, long eval_episodes,
                                std::vector<std::vector<EpisodeRecord>>* records) {
  if (eval_episodes <= 0) throw InvalidInput("evaluate: eval_episodes must be > 0");
  const auto n = trained.runs.size();
  std::vector<metrics::SeedMetrics> seeds(n);
  std::vector<std::vector<EpisodeRecord>> logs(records ? n : 0);
  parallel_for(n, trained.config.jobs, [&](std::size_t i) {
    const SeedRun& run = trained.runs[i];
    auto recs = evaluate_seed(run.pair, trained.config.grid, run.seed, eval_episodes);
    seeds[i] = metrics::seed_metrics(recs, run.seed, labels(run.pair));
    if (records) logs[i] = std::move(recs);
  });
  if (records) *records = std::move(logs);
  return metrics::aggregate(trained.config.experiment, std::move(seeds));
}

metrics::MetricsReport evaluate_against_baseline(
    std::shared_ptr<const qlearn::SparseQTable> agent, const SideSpec& agent_side,
    const SideSpec& baseline_side, std::span<const std::uint64_t> seeds, long episodes,
    std::string experiment) {
  if (!agent) throw InvalidInput("evaluate_against_baseline: no agent table");
  if (baseline_side.learner()) throw InvalidInput("evaluate_against_baseline: opponent must be rule-based");
  Pair pair;
  const auto agent_index = static_cast<std::size_t>(env::index_of(agent->seat()));
  pair[agent_index].spec = agent_side;
  // Evaluation only reads the table.
  pair[agent_index].table = std::const_pointer_cast<qlearn::SparseQTable>(agent);
  pair[1 - agent_index].spec = baseline_side;
  std::vector<metrics::SeedMetrics> out;
  for (auto seed : seeds) {
    const auto recs = evaluate_seed(pair, agent->grid(), seed, episodes);
    out.push_back(metrics::seed_metrics(recs, seed, labels(pair)));
  }
  return metrics::aggregate(std::move(experiment), std::move(out));
}

std::string snapshot_name(std::uint64_t seed, Seat seat) {
  return "seed" + std::to_string(seed) + "_" + std::string(env::to_string(seat)) + ".qtable";
}

void save_trained(const TrainedPair& trained, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream cfg(dir / kConfigFileName, std::ios::binary);
    if (!cfg) throw std::runtime_error("cannot write " + (dir / kConfigFileName).string());
    cfg << to_key_values(trained.config);
  }
  for (const auto& run : trained.runs) {
    for (Seat s : kSeats) {
      const auto& p = run.pair[static_cast<std::size_t>(env::index_of(s))];
      if (p.table) qlearn::save_table(*p.table, dir / snapshot_name(run.seed, s));
    }
  }
}

TrainedPair load_trained(const std::filesystem::path& dir) {
  std::ifstream cfg(dir / kConfigFileName);
  if (!cfg) throw std::runtime_error("cannot read " + (dir / kConfigFileName).string());
  TrainedPair trained;
  training::apply(trained.config, parse_key_values(cfg));
  trained.config.validate();
  for (auto seed : trained.config.seeds) {
    SeedRun run;
    run.seed = seed;
    run.pair = make_pair(trained.config.pair, trained.config);
    for (Seat s : kSeats) {
      auto& p = run.pair[static_cast<std::size_t>(env::index_of(s))];
      if (!p.table) continue;
      const auto path = dir / snapshot_name(seed, s);
      if (!std::filesystem::exists(path)) throw std::runtime_error("missing snapshot " + path.string());
      p.table = std::make_shared<qlearn::SparseQTable>(qlearn::load_table(path));
    }
    trained.runs.push_back(std::move(run));
  }
  return trained;
}

void write_training_log(std::ostream& out, const TrainedPair& trained, bool header) {
  auto cell = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string(); };
  if (header) out << "experiment,seed,end_episode,srcl,srcp_p1\n";
  for (const auto& run : trained.runs) {
    for (const auto& w : run.log) {
      out << trained.config.experiment << ',' << run.seed << ',' << w.end_episode << ',' << cell(w.srcl)
          << ',' << cell(w.srcp_p1) << '\n';
    }
  }
}

std::vector<SweepPoint> sweep(const ExperimentConfig& base, SweepParam param,
                              std::span<const double> values) {
  if (values.empty()) throw InvalidInput("sweep: no values");
  std::vector<SweepPoint> out;
  for (double v : values) {
    ExperimentConfig config = base;
    if (param == SweepParam::Phi) {
      bool touched = false;
      for (auto& side : config.pair.sides) {
        if (side.learner() && side.phi != 0.0) {
          side.phi = std::copysign(v, side.phi);
          touched = true;
        }
      }
      if (!touched && config.pair.sides[1].learner()) config.pair.sides[1].phi = v;
      for (auto& side : config.pair.sides) {
        if (side.learner()) side.label = learner_label(side.phi, side.mode, !side.phi_choices.empty());
      }
      config.experiment = base.experiment + "_phi=" + detail::format_double(v);
    } else {
      if (v != std::floor(v)) throw InvalidInput("sweep: history length must be an integer");
      config.history_len = static_cast<int>(v);
      config.experiment = base.experiment + "_hist=" + detail::format_double(v);
    }
    const TrainedPair trained = train_pair(config);
    out.push_back({v, evaluate(trained, config.eval_episodes)});
  }
  return out;
}

}  // namespace tecorridor::training
