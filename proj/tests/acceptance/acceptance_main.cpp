// Acceptance run: one PASS/FAIL line per criterion at full scale
// (30000 training episodes x 6 seeds, 10000 frozen evaluation episodes per seed).
//
//   acceptance [--strict] [--episodes N] [--eval-episodes N] [--divisor all|visited|window]
//
// Exits 0 after printing every line; with --strict any FAIL makes the exit code 1.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "tecorridor/metrics.hpp"
#include "tecorridor/training.hpp"

using namespace tecorridor;
namespace fs = std::filesystem;
using env::Seat;

namespace {

struct Settings {
  long episodes = 30000;
  long eval_episodes = 10000;
  qlearn::MarginalDivisor divisor = qlearn::MarginalDivisor::AllPossible;
  bool strict = false;
};

int failures = 0;

void verdict(const std::string& id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << "criterion " << std::left << std::setw(3) << id << (pass ? "PASS" : "FAIL") << "  " << detail
            << std::endl;
}

void info(const std::string& detail) { std::cout << "info          " << detail << std::endl; }

std::string pct(std::optional<double> v) {
  if (!v) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << 100.0 * *v << "%";
  return s.str();
}

std::string num(std::optional<double> v, int digits = 3) {
  if (!v) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << *v;
  return s.str();
}

bool within(std::optional<double> v, double centre, double tol) { return v && std::abs(*v - centre) <= tol; }

struct Result {
  training::TrainedPair trained;
  metrics::MetricsReport report;
};

class Runs {
 public:
  Runs(Settings s) : settings_(s) {}

  const Result& get(const std::string& spec) { return get(spec, settings_.divisor); }

  const Result& get(const std::string& spec, qlearn::MarginalDivisor divisor) {
    const auto key = spec + "/" + std::string(qlearn::to_string(divisor));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    training::ExperimentConfig c;
    c.experiment = spec;
    c.pair = training::parse_pair_spec(spec);
    c.episodes = settings_.episodes;
    c.eval_episodes = settings_.eval_episodes;
    c.divisor = divisor;
    const auto start = std::chrono::steady_clock::now();
    Result r{training::train_pair(c), {}};
    r.report = training::evaluate(r.trained, c.eval_episodes);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    std::cerr << "  trained " << key << " in " << std::fixed << std::setprecision(1) << dt.count() << " s\n";
    return cache_.emplace(key, std::move(r)).first->second;
  }

  // Frozen P2 agent of `spec` against a rule-based P1, seed by seed.
  metrics::MetricsReport vs_baseline(const std::string& spec, const std::string& baseline) {
    const auto& trained = get(spec).trained;
    const auto bl = training::parse_side_spec(baseline);
    std::vector<metrics::SeedMetrics> seeds;
    for (const auto& run : trained.runs) {
      const auto& agent = run.pair[1];
      const std::vector<std::uint64_t> one{run.seed};
      seeds.push_back(training::evaluate_against_baseline(agent.table, agent.spec, bl, one,
                                                          settings_.eval_episodes, spec + " vs " + baseline)
                          .seeds.at(0));
    }
    return metrics::aggregate(spec + " vs " + baseline, std::move(seeds));
  }

  const Settings& settings() const { return settings_; }

 private:
  Settings settings_;
  std::map<std::string, Result> cache_;
};

// The agent of the report that is not the baseline.
const metrics::AgentSummary& learner(const metrics::MetricsReport& r) {
  return r.agents[0].label.find("sf") != std::string::npos ? r.agents[1] : r.agents[0];
}

void criterion1(const Settings&) {
  auto pair = training::make_pair(training::parse_pair_spec("random:random"), training::ExperimentConfig{});
  const auto log = training::evaluate_seed(pair, env::GridConfig{}, 1, 100000);
  const auto p1 = metrics::success_rates(log, Seat::P1);
  const auto p2 = metrics::success_rates(log, Seat::P2);
  const auto cps = metrics::cps(p1, p2);
  const bool pass = within(p1.srm, 0.2, 0.015) && within(p1.srp, 0.8, 0.015) && within(p2.srm, 0.2, 0.015) &&
                    within(p2.srp, 0.8, 0.015) && within(p1.srcp, 0.5, 0.02) && within(cps, 0.32, 0.01);
  verdict("1", pass,
          "random vs random, 1e5 episodes: SRM " + pct(p1.srm) + "/" + pct(p2.srm) + ", SRP " + pct(p1.srp) + "/" +
              pct(p2.srp) + ", SRCP " + pct(p1.srcp) + ", CPS " + num(cps));
}

void criterion2(Runs& runs) {
  const auto& r = runs.get("non:non").report;
  const auto srcl = r.agents[0].srcl.mean;
  verdict("2", within(srcl, 0.6350, 0.215) && srcl && *srcl > 0.55,
          "non vs non SRCL " + pct(srcl) + " (target 63.50% +/- 21.5, > 55%)");
}

void criterion3(Runs& runs) {
  const auto& r = runs.get("non:pos").report;
  int wins = 0;
  for (const auto& s : r.seeds) {
    if (s.agents[0].rates.srcp && s.agents[1].rates.srcp && *s.agents[0].rates.srcp > *s.agents[1].rates.srcp) ++wins;
  }
  const auto srcp = r.agents[0].srcp.mean;
  const auto srcl = r.agents[0].srcl.mean;
  verdict("3", within(srcp, 0.6338, 0.152) && wins >= 5 && srcl && *srcl >= 0.70,
          "non vs pos: non SRCP " + pct(srcp) + " (63.38% +/- 15.2), non > pos in " + std::to_string(wins) +
              "/6 seeds, SRCL " + pct(srcl) + " (>= 70%)");
}

void criterion4(Runs& runs) {
  const auto& r = runs.get("pos:pos").report;
  const auto srcl = r.agents[0].srcl.mean;
  const auto a = r.agents[0].srcp.mean, b = r.agents[1].srcp.mean;
  const auto cps = r.cps.mean;
  const bool pass = srcl && *srcl >= 0.83 && a && b && std::abs(*a - *b) <= 0.15 && cps && *cps >= 0.50;
  verdict("4", pass,
          "pos vs pos SRCL " + pct(srcl) + " (>= 83%), SRCP " + pct(a) + "/" + pct(b) + " (gap <= 15), CPS " +
              num(cps) + " (>= 0.50)");
}

void criterion5(Runs& runs) {
  const auto neg = runs.get("neg:neg").report.agents[0].srcl.mean;
  const auto non = runs.get("non:non").report.agents[0].srcl.mean;
  const auto pos = runs.get("pos:pos").report.agents[0].srcl.mean;
  const bool ordered = neg && non && pos && *pos > *non && *non > *neg;
  verdict("5", within(neg, 0.4970, 0.163) && ordered,
          "neg vs neg SRCL " + pct(neg) + " (49.70% +/- 16.3); pos " + pct(pos) + " > non " + pct(non) + " > neg");
}

void criterion6(Runs& runs) {
  const auto non_pure = learner(runs.vs_baseline("non:non", "pure-sf")).srcp.mean;
  const auto pos_ipk = learner(runs.vs_baseline("non:pos", "ipk-sf")).srcl.mean;
  bool neg_ok = true;
  std::string neg_text;
  for (const char* b : {"pure-sf", "ipk-sf", "pk-sf"}) {
    const auto v = learner(runs.vs_baseline("non:neg", b)).srcp.mean;
    neg_ok = neg_ok && v && *v <= 0.45;
    neg_text += std::string(neg_text.empty() ? "" : "/") + pct(v);
  }
  verdict("6", within(non_pure, 0.7329, 0.102) && within(pos_ipk, 0.7642, 0.076) && neg_ok,
          "non vs pure-sf SRCP " + pct(non_pure) + " (73.29% +/- 10.2); pos vs ipk-sf SRCL " + pct(pos_ipk) +
              " (76.42% +/- 7.6); neg vs pure/ipk/pk SRCP " + neg_text + " (<= 45%)");
}

std::string te_line(const metrics::MetricsReport& r) {
  return num(r.agents[0].avg_te.mean) + "/" + num(r.agents[1].avg_te.mean);
}

bool te_directional(const metrics::MetricsReport& non_pos, const metrics::MetricsReport& pos_pos) {
  const auto n = non_pos.agents[0].avg_te.mean, p = non_pos.agents[1].avg_te.mean;
  const auto a = pos_pos.agents[0].avg_te.mean, b = pos_pos.agents[1].avg_te.mean;
  return n && p && *p > *n && a && b && *a > 1.0 && *b > 1.0;
}

void criterion7(Runs& runs) {
  const auto& non_pos = runs.get("non:pos").report;
  const auto& pos_pos = runs.get("pos:pos").report;
  verdict("7", te_directional(non_pos, pos_pos),
          "avg TE bits non vs pos " + te_line(non_pos) + " (pos > non); pos vs pos " + te_line(pos_pos) +
              " (both > 1.0)");
}

void criterion8(Runs& runs) {
  const char* pairs[] = {"non(mode=entropy):non(mode=entropy)", "non(mode=entropy):pos(mode=entropy)",
                         "non(mode=entropy):neg(mode=entropy)", "pos(mode=entropy):pos(mode=entropy)",
                         "pos(mode=entropy):neg(mode=entropy)", "neg(mode=entropy):neg(mode=entropy)"};
  const auto te_best = runs.get("pos:pos").report.agents[0].srcl.mean.value_or(0.0);
  double lo = 1.0, hi = 0.0;
  bool all_present = true;
  std::string values;
  for (const char* p : pairs) {
    const auto v = runs.get(p).report.agents[0].srcl.mean;
    all_present = all_present && v.has_value();
    if (!v) continue;
    lo = std::min(lo, *v);
    hi = std::max(hi, *v);
    values += std::string(values.empty() ? "" : "/") + pct(v);
  }
  const auto h_pos = runs.get("non:pos").report.agents[1].avg_h_plus.mean;
  const auto h_non = runs.get("non:non").report.agents[1].avg_h_plus.mean;
  const bool pass = all_present && (hi - lo) < 0.20 && hi <= te_best && h_pos && h_non && *h_pos < *h_non;
  verdict("8", pass,
          "entropy-only SRCL " + values + " (spread " + num(100 * (hi - lo), 2) + " < 20 points, max <= " +
              pct(te_best) + "); mean H+ of trained P2: pos " + num(h_pos) + " < non " + num(h_non));
}

void criterion9(Runs& runs) {
  const auto mixed_pos = runs.get("mixed:pos").report.cps.mean;
  bool dominated = true;
  std::string text;
  for (const char* other : {"non", "pos", "neg"}) {
    const auto m = runs.get(std::string("mixed:") + other).report.cps.mean;
    const auto f = runs.get(std::string("non:") + other).report.cps.mean;
    dominated = dominated && m && f && *m <= *f;
    text += std::string(text.empty() ? "" : ", ") + "mixed:" + other + " " + num(m) + " <= non:" + other + " " +
            num(f);
  }
  verdict("9", within(mixed_pos, 0.42, 0.05) && dominated,
          "mixed vs pos CPS " + num(mixed_pos) + " (0.42 +/- 0.05); " + text);
}

int run_quiet(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion10() {
  const auto start = std::chrono::steady_clock::now();
  const int a = run_quiet("\"" TECORRIDOR_TEST_INFO_THEORY "\"");
  const int b = run_quiet("\"" TECORRIDOR_TEST_Q_AGENT "\"");
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
  verdict("10", a == 0 && b == 0 && dt.count() < 60.0,
          "info-theory and Q-agent property suites " + std::string(a == 0 && b == 0 ? "green" : "red") + " in " +
              num(dt.count(), 1) + " s (< 60 s)");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void criterion11() {
  const auto root = fs::temp_directory_path() / "tecorridor_acceptance_determinism";
  fs::remove_all(root);
  bool ok = true;
  for (const char* run : {"a", "b"}) {
    const auto cmd = "\"" TECORRIDOR_CLI "\" train --pair pos:pos --seeds 7 --out \"" + (root / run).string() + "\"";
    ok = ok && run_quiet(cmd) == 0;
  }
  std::size_t compared = 0;
  if (ok) {
    for (const auto& entry : fs::directory_iterator(root / "a")) {
      const auto name = entry.path().filename();
      const auto ext = name.extension();
      if (ext != ".qtable" && ext != ".csv") continue;
      ++compared;
      ok = ok && fs::exists(root / "b" / name) && slurp(entry.path()) == slurp(root / "b" / name);
    }
  }
  ok = ok && compared >= 4;
  verdict("11", ok, "train --pair pos:pos --seeds 7 twice: " + std::to_string(compared) +
                        " snapshot/CSV files " + (ok ? "byte-identical" : "differ or missing"));
  fs::remove_all(root);
}

void window_divisor_info(Runs& runs) {
  const auto w = qlearn::MarginalDivisor::FullWindow;
  const auto& non_pos = runs.get("non:pos", w).report;
  const auto& pos_pos = runs.get("pos:pos", w).report;
  info("divisor=window: avg TE non vs pos " + te_line(non_pos) + ", pos vs pos " + te_line(pos_pos) +
       " -> TE directionality " + (te_directional(non_pos, pos_pos) ? "holds" : "fails"));
  info("divisor=window: SRCL non:pos " + pct(non_pos.agents[0].srcl.mean) + ", pos:pos " +
       pct(pos_pos.agents[0].srcl.mean) + ", CPS pos:pos " + num(pos_pos.cps.mean));
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--strict") {
      s.strict = true;
    } else if (arg == "--episodes" && i + 1 < argc) {
      s.episodes = std::atol(argv[++i]);
    } else if (arg == "--eval-episodes" && i + 1 < argc) {
      s.eval_episodes = std::atol(argv[++i]);
    } else if (arg == "--divisor" && i + 1 < argc && qlearn::parse_marginal_divisor(argv[i + 1])) {
      s.divisor = *qlearn::parse_marginal_divisor(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--strict] [--episodes N] [--eval-episodes N] [--divisor all|visited|window]\n";
      return 2;
    }
  }
  std::cout << "acceptance: " << s.episodes << " training episodes x 6 seeds, " << s.eval_episodes
            << " evaluation episodes per seed, divisor=" << qlearn::to_string(s.divisor) << std::endl;

  Runs runs(s);
  criterion1(s);
  criterion2(runs);
  criterion3(runs);
  criterion4(runs);
  criterion5(runs);
  criterion6(runs);
  criterion7(runs);
  criterion8(runs);
  criterion9(runs);
  criterion10();
  criterion11();
  window_divisor_info(runs);

  std::cout << "summary: " << (11 - failures) << "/11 PASS" << std::endl;
  return s.strict && failures > 0 ? 1 : 0;
}
