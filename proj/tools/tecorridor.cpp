// tecorridor: train, evaluate, sweep, export, replay, and serve corridor-dilemma agents.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tecorridor/errors.hpp"
#include "tecorridor/game_service.hpp"
#include "tecorridor/training.hpp"
#include "text_util.hpp"
#ifdef TECORRIDOR_HAVE_SERVER
#include "tecorridor/server.hpp"
#endif

namespace fs = std::filesystem;
using namespace tecorridor;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMismatch = 3;

/// Thrown for file-system and data-file failures (exit code 1).
struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Experiment flags shared by train and sweep. Every flag is kept as text and
/// funnelled through training::apply so flags, env, and config files share
/// one parser.
struct ExperimentFlags {
  std::string config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "Key-value config file (flags override it)");
    add(cmd, "--pair", "pair", "Pair spec, e.g. non:pos or pos(mode=entropy):neg");
    add(cmd, "--episodes", "episodes", "Training episodes per seed");
    add(cmd, "--seeds", "seeds", "Comma-separated seeds, e.g. \"1,2,3\"");
    add(cmd, "--alpha", "alpha", "Learning rate");
    add(cmd, "--gamma", "gamma", "Discount factor");
    add(cmd, "--history", "history", "History length n");
    add(cmd, "--eval-episodes", "eval_episodes", "Frozen-evaluation episodes per seed");
    add(cmd, "--divisor", "divisor", "Marginalisation divisor: all|visited|window");
    add(cmd, "--jobs", "jobs", "Seeds trained in parallel");
    add(cmd, "--experiment", "experiment", "Experiment name for reports");
  }

  training::ExperimentConfig resolve(CLI::App& cmd) const {
    training::ExperimentConfig config;
    training::apply(config, training::environment_overrides());
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw IoFailure("cannot read config file " + config_path);
      try {
        training::apply(config, training::parse_key_values(in));
      } catch (const ParseError& e) {
        throw IoFailure(config_path + ":" + std::to_string(e.line()) + ": " + e.what());
      }
    }
    training::KeyValues given;
    for (const auto& [flag, key] : keys_) {
      if (cmd.count(flag) > 0) given[key] = values.at(key);
    }
    training::apply(config, given);
    config.validate();
    return config;
  }

 private:
  void add(CLI::App& cmd, const std::string& flag, const std::string& key, const std::string& help) {
    keys_.emplace_back(flag, key);
    cmd.add_option(flag, values[key], help);
  }
  std::vector<std::pair<std::string, std::string>> keys_;
};

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::out | std::ios::binary | mode);
  if (!out) throw IoFailure("cannot write " + path.string());
  return out;
}

std::vector<EpisodeRecord> read_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot read log " + path.string());
  try {
    return read_episode_log(in);
  } catch (const ParseError& e) {
    throw IoFailure(path.string() + ":" + std::to_string(e.line()) + ": " + e.what());
  }
}

/// Appends report rows to `path`, writing the header when the file is new or empty.
void append_csv(const fs::path& path, const metrics::MetricsReport& report) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  auto out = open_out(path, std::ios::app);
  if (fresh) metrics::write_csv_header(out);
  metrics::write_csv_rows(out, report);
}

void write_eval_logs(const fs::path& dir, const training::TrainedPair& trained,
                     const std::vector<std::vector<EpisodeRecord>>& logs) {
  for (std::size_t i = 0; i < logs.size(); ++i) {
    auto out = open_out(dir / ("eval_seed" + std::to_string(trained.runs[i].seed) + ".jsonl"));
    write_episode_log(out, logs[i]);
  }
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  for (auto part : detail::split(text, ',')) {
    auto v = detail::parse_double(detail::trim(part));
    if (!v) throw InvalidInput("bad value '" + std::string(part) + "' in --values");
    out.push_back(*v);
  }
  if (out.empty()) throw InvalidInput("--values is empty");
  return out;
}

// ---------------------------------------------------------------------------

struct TrainCmd {
  ExperimentFlags flags;
  std::string out_dir;
  bool skip_eval = false;
  bool write_logs = false;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "Train a pair for every seed, then evaluate frozen policies");
    flags.attach(*cmd);
    cmd->add_option("--out", out_dir, "Output directory")->required();
    cmd->add_flag("--no-eval", skip_eval, "Skip the frozen evaluation");
    cmd->add_flag("--eval-logs", write_logs, "Also write eval_seed<k>.jsonl episode logs");
    cmd->callback([this, cmd] { run(*cmd); });
  }

  void run(CLI::App& cmd) {
    const auto config = flags.resolve(cmd);
    const fs::path dir(out_dir);
    const auto trained = training::train_pair(config);
    try {
      training::save_trained(trained, dir);
    } catch (const std::runtime_error& e) {
      throw IoFailure(e.what());
    }
    {
      auto log = open_out(dir / "training_log.csv");
      training::write_training_log(log, trained);
    }
    std::cout << "trained " << training::to_string(config.pair) << " for " << config.seeds.size()
              << " seed(s) x " << config.episodes << " episodes -> " << dir.string() << '\n';
    if (skip_eval) return;
    std::vector<std::vector<EpisodeRecord>> logs;
    const auto report = training::evaluate(trained, config.eval_episodes, write_logs ? &logs : nullptr);
    {
      auto csv = open_out(dir / "results.csv");
      metrics::write_csv_header(csv);
      metrics::write_csv_rows(csv, report);
    }
    if (write_logs) write_eval_logs(dir, trained, logs);
    metrics::print_report(std::cout, report);
  }
};

struct EvalCmd {
  std::string pair_dir;
  long episodes = 10000;
  std::string seeds;
  std::string csv;
  std::string log_dir;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "Evaluate the frozen snapshots written by train");
    cmd->add_option("--pair-dir", pair_dir, "Directory written by train")->required();
    cmd->add_option("--episodes", episodes, "Evaluation episodes per seed")->check(CLI::PositiveNumber);
    cmd->add_option("--seeds", seeds, "Subset of the trained seeds");
    cmd->add_option("--csv", csv, "Append CSV rows to this file");
    cmd->add_option("--log-dir", log_dir, "Write eval_seed<k>.jsonl episode logs here");
    cmd->callback([this] { run(); });
  }

  void run() {
    training::TrainedPair trained;
    try {
      trained = training::load_trained(pair_dir);
    } catch (const ParseError& e) {
      throw IoFailure(std::string("malformed snapshot or config: line ") + std::to_string(e.line()) + ": " + e.what());
    } catch (const InvalidInput&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw IoFailure(e.what());
    }
    if (!seeds.empty()) {
      const auto wanted = training::parse_seed_list(seeds);
      std::vector<training::SeedRun> kept;
      for (auto s : wanted) {
        auto it = std::find_if(trained.runs.begin(), trained.runs.end(), [&](const auto& r) { return r.seed == s; });
        if (it == trained.runs.end()) throw InvalidInput("seed " + std::to_string(s) + " was not trained");
        kept.push_back(*it);
      }
      trained.runs = std::move(kept);
    }
    std::vector<std::vector<EpisodeRecord>> logs;
    const auto report = training::evaluate(trained, episodes, log_dir.empty() ? nullptr : &logs);
    if (!log_dir.empty()) write_eval_logs(log_dir, trained, logs);
    if (!csv.empty()) append_csv(csv, report);
    metrics::print_report(std::cout, report);
  }
};

struct BaselineEvalCmd {
  std::string agent;
  std::string baseline;
  double p_know = baselines::kDefaultKnowledgeProbability;
  long episodes = 10000;
  std::string seeds = "1,2,3,4,5,6";
  std::string csv;
  std::string experiment;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("baseline-eval", "Evaluate one frozen snapshot against a rule-based opponent");
    cmd->add_option("--agent", agent, "Snapshot file (.qtable)")->required();
    cmd->add_option("--baseline", baseline, "random|pure-sf|ipk-sf|pk-sf")->required();
    cmd->add_option("--p-know", p_know, "IPK-SF knowledge probability")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--episodes", episodes, "Evaluation episodes per seed")->check(CLI::PositiveNumber);
    cmd->add_option("--seeds", seeds, "Evaluation seeds");
    cmd->add_option("--csv", csv, "Append CSV rows to this file");
    cmd->add_option("--experiment", experiment, "Experiment name for reports");
    cmd->callback([this] { run(); });
  }

  void run() {
    std::shared_ptr<const qlearn::SparseQTable> table;
    try {
      table = std::make_shared<const qlearn::SparseQTable>(qlearn::load_table(fs::path(agent)));
    } catch (const ParseError& e) {
      throw IoFailure(agent + ":" + std::to_string(e.line()) + ": " + e.what());
    } catch (const InvalidInput&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw IoFailure(e.what());
    }
    auto kind = baselines::parse_baseline_kind(baseline);
    if (!kind) throw InvalidInput("unknown baseline '" + baseline + "'");
    training::SideSpec opp;
    opp.kind = training::SideSpec::Kind::Baseline;
    opp.baseline = {*kind, p_know};
    opp.mode = qlearn::RewardMode::None;
    opp.label = std::string(baselines::to_string(*kind));

    std::string side_text = table->phi() > 0 ? "pos" : (table->phi() < 0 ? "neg" : "non");
    if (table->mode() == qlearn::RewardMode::EntropyOnly) side_text += "(mode=entropy)";
    training::SideSpec me = training::parse_side_spec(side_text);
    me.phi = table->phi();
    const auto seed_list = training::parse_seed_list(seeds);
    if (experiment.empty()) experiment = me.label + "_vs_" + opp.label;
    const auto report = training::evaluate_against_baseline(table, me, opp, seed_list, episodes, experiment);
    if (!csv.empty()) append_csv(csv, report);
    metrics::print_report(std::cout, report);
  }
};

struct SweepCmd {
  ExperimentFlags flags;
  std::string param;
  std::string values;
  std::string csv;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("sweep", "Train and evaluate once per parameter value");
    flags.attach(*cmd);
    cmd->add_option("--param", param, "phi|hist")->required()->check(CLI::IsMember({"phi", "hist"}));
    cmd->add_option("--values", values, "Comma-separated values, e.g. \"2,10,20\"")->required();
    cmd->add_option("--csv", csv, "Append CSV rows to this file");
    cmd->callback([this, cmd] { run(*cmd); });
  }

  void run(CLI::App& cmd) {
    const auto config = flags.resolve(cmd);
    const auto vals = parse_values(values);
    const auto which = param == "phi" ? training::SweepParam::Phi : training::SweepParam::HistoryLen;
    const auto points = training::sweep(config, which, vals);
    std::printf("%-8s %-10s %-10s %-10s %-8s\n", param.c_str(), "SRCL", "SRCP_P1", "SRCP_P2", "CPS");
    for (const auto& p : points) {
      auto pct = [](const std::optional<double>& v) { return v ? 100.0 * *v : 0.0; };
      std::printf("%-8s %-10.2f %-10.2f %-10.2f %-8.3f\n", detail::format_double(p.value).c_str(),
                  pct(p.report.agents[0].srcl.mean), pct(p.report.agents[0].srcp.mean),
                  pct(p.report.agents[1].srcp.mean), p.report.cps.mean.value_or(0.0));
      if (!csv.empty()) append_csv(csv, p.report);
    }
  }
};

struct HeatmapCmd {
  std::string log;
  std::string seat = "P2";
  std::string out;
  env::GridConfig grid;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("export-heatmap", "Mean H+/H- by (turn, column) from an episode log");
    cmd->add_option("--log", log, "JSON-lines episode log")->required();
    cmd->add_option("--seat", seat, "P1|P2")->check(CLI::IsMember({"P1", "P2"}));
    cmd->add_option("--out", out, "Write JSON here instead of stdout");
    cmd->add_option("--cols", grid.cols, "Grid columns");
    cmd->add_option("--turns", grid.turns, "Turns per episode");
    cmd->callback([this] { run(); });
  }

  void run() {
    grid.rows = 2 * grid.turns + 1;
    grid.validate();
    const auto records = read_log(log);
    const auto s = *env::parse_seat(seat);
    auto j = metrics::to_json(metrics::entropy_heatmap(records, s, grid));
    j["seat"] = seat;
    j["episodes"] = records.size();
    if (out.empty()) {
      std::cout << j.dump(2) << '\n';
    } else {
      auto f = open_out(out);
      f << j.dump(2) << '\n';
    }
  }
};

struct ReplayCmd {
  std::string log;
  env::GridConfig grid;
  int exit_code = kExitOk;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("replay", "Re-derive every outcome in an episode log and verify it");
    cmd->add_option("--log", log, "JSON-lines episode log")->required();
    cmd->add_option("--cols", grid.cols, "Grid columns");
    cmd->add_option("--turns", grid.turns, "Turns per episode");
    cmd->callback([this] { run(); });
  }

  void run() {
    grid.rows = 2 * grid.turns + 1;
    const auto records = read_log(log);
    const auto report = replay(records, grid);
    for (const auto& m : report.mismatches) std::cerr << "mismatch: " << m << '\n';
    std::cout << report.episodes << " episode(s), " << report.mismatches.size() << " mismatch(es)\n";
    if (!report.ok()) exit_code = kExitMismatch;
  }
};

struct ServeCmd {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  std::string snapshots;
  std::string static_dir;
  std::string log_dir = "sessions";
  int rounds = 100;
  int turn_ms = 5000;
  bool with_baselines = false;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("serve", "Run the human-vs-agent game server");
    cmd->add_option("--address", address, "Listen address");
    cmd->add_option("--port", port, "Listen port");
    cmd->add_option("--snapshots", snapshots, "Directory of .qtable files; one opponent slot per file")->required();
    cmd->add_option("--static", static_dir, "Directory of static client files");
    cmd->add_option("--log-dir", log_dir, "Per-session JSON-lines logs");
    cmd->add_option("--rounds", rounds, "Default rounds per session")->check(CLI::PositiveNumber);
    cmd->add_option("--turn-ms", turn_ms, "Turn deadline in milliseconds")->check(CLI::PositiveNumber);
    cmd->add_flag("--baselines", with_baselines, "Also offer pure-sf, ipk-sf, pk-sf, random slots");
    cmd->callback([this] { run(); });
  }

  void run() {
    service::OpponentRegistry reg;
    try {
      reg = service::OpponentRegistry::from_directory(snapshots);
    } catch (const ParseError& e) {
      throw IoFailure("malformed snapshot: line " + std::to_string(e.line()) + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw IoFailure(e.what());
    }
    if (with_baselines) {
      for (auto k : {baselines::BaselineKind::Random, baselines::BaselineKind::PureSF,
                     baselines::BaselineKind::IPKSF, baselines::BaselineKind::PKSF}) {
        reg.add_baseline(std::string(baselines::to_string(k)), {k, baselines::kDefaultKnowledgeProbability});
      }
    }
    if (reg.empty()) throw IoFailure("no opponents: " + snapshots + " has no .qtable files");
    service::ServiceOptions opts;
    opts.default_rounds = rounds;
    opts.turn_ms = turn_ms;
    if (!log_dir.empty()) opts.log_dir = fs::path(log_dir);
    service::SystemClock clock;
    service::GameService svc(std::move(reg), clock, opts);
#ifdef TECORRIDOR_HAVE_SERVER
    service::ServerOptions sopts;
    sopts.address = address;
    sopts.port = port;
    if (!static_dir.empty()) sopts.static_dir = fs::path(static_dir);
    sopts.handle_signals = true;
    service::Server server(svc, sopts);
    std::cout << "serving on http://" << address << ':' << server.port() << " (slots:";
    for (const auto& s : svc.opponent_slots()) std::cout << ' ' << s;
    std::cout << ")" << std::endl;
    server.run();
#else
    throw IoFailure("this build has no network server");
#endif
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transfer-entropy shaped self-play in the corridor dilemma"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  TrainCmd train;
  EvalCmd eval;
  BaselineEvalCmd baseline_eval;
  SweepCmd sweep;
  HeatmapCmd heatmap;
  ReplayCmd replay_cmd;
  ServeCmd serve;
  train.attach(app);
  eval.attach(app);
  baseline_eval.attach(app);
  sweep.attach(app);
  heatmap.attach(app);
  replay_cmd.attach(app);
  serve.attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return replay_cmd.exit_code;
}
