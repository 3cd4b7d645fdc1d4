#include "tecorridor/game_service.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "tecorridor/errors.hpp"
#include "tecorridor/history.hpp"
#include "tecorridor/q_agent.hpp"

namespace tecorridor::service {

using env::Seat;
using nlohmann::json;

Millis SystemClock::now_ms() const {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

// ---------------------------------------------------------------------------
// Opponents

void OpponentRegistry::add_table(std::string slot, std::shared_ptr<const qlearn::SparseQTable> table) {
  if (!table) throw InvalidInput("opponent slot '" + slot + "': null table");
  slots_[std::move(slot)] = Opponent{std::move(table), std::nullopt};
}

void OpponentRegistry::add_baseline(std::string slot, baselines::BaselineSpec spec) {
  slots_[std::move(slot)] = Opponent{nullptr, spec};
}

const Opponent* OpponentRegistry::find(const std::string& slot) const {
  auto it = slots_.find(slot);
  return it == slots_.end() ? nullptr : &it->second;
}

std::vector<std::string> OpponentRegistry::slots() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : slots_) out.push_back(name);
  return out;
}

OpponentRegistry OpponentRegistry::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("snapshot directory not found: " + dir.string());
  }
  OpponentRegistry reg;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".qtable") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    reg.add_table(f.stem().string(), std::make_shared<const qlearn::SparseQTable>(qlearn::load_table(f)));
  }
  return reg;
}

// ---------------------------------------------------------------------------
// Sessions

struct GameService::Session {
  std::mutex mutex;
  std::string id;
  Opponent opponent;
  int rounds_total = 0;
  int round = 0;  // 0-based index of the round in play
  bool finished = false;
  Rng rng;
  env::EnvState state;
  std::array<std::vector<int>, 2> traj;
  EpisodeRecord current;
  std::vector<EpisodeRecord> log;
  std::ofstream log_file;
  Millis deadline = 0;
  Scores scores;

  explicit Session(std::uint64_t seed) : rng(seed) {}
};

namespace {

Position position(const env::EnvState& s, Seat seat) {
  return seat == Seat::P1 ? Position{s.p1_row(), s.p1_col} : Position{s.p2_row(), s.p2_col};
}

template <class S>
RoundView round_view(const S& session) {
  RoundView v;
  v.round = session.round + 1;
  v.your_objective = session.state.p1_objective;
  v.you = position(session.state, Seat::P1);
  v.opponent = position(session.state, Seat::P2);
  return v;
}

template <class S>
void start_round(S& s, const env::GridConfig& grid) {
  s.state = env::reset(grid, s.rng);
  s.traj = {std::vector<int>{s.state.p1_col}, std::vector<int>{s.state.p2_col}};
  s.current = EpisodeRecord{};
  s.current.round = s.round;
  s.current.seats[0].objective = s.state.p1_objective;
  s.current.seats[1].objective = s.state.p2_objective;
  if (s.opponent.table) s.current.seats[1].phi = s.opponent.table->phi();
}

}  // namespace

GameService::GameService(OpponentRegistry opponents, const Clock& clock, ServiceOptions options)
    : opponents_(std::move(opponents)), clock_(clock), options_(std::move(options)) {
  options_.grid.validate();
  if (options_.turn_ms <= 0) throw InvalidInput("turn_ms must be > 0");
  if (options_.default_rounds < 1 || options_.default_rounds > options_.max_rounds) {
    throw InvalidInput("default_rounds out of range");
  }
  for (const auto& slot : opponents_.slots()) {
    const Opponent* o = opponents_.find(slot);
    if (o->table && !(o->table->grid() == options_.grid)) {
      throw InvalidInput("opponent slot '" + slot + "' was trained on a different grid");
    }
  }
  if (options_.log_dir) std::filesystem::create_directories(*options_.log_dir);
  std::random_device rd;
  id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

GameService::~GameService() = default;

std::shared_ptr<GameService::Session> GameService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError("not_found", "unknown session '" + id + "'");
  return it->second;
}

Created GameService::create_session(const std::string& opponent_slot, std::optional<int> rounds,
                                    std::optional<std::uint64_t> seed) {
  const Opponent* opp = opponents_.find(opponent_slot);
  if (!opp) throw ServiceError("not_found", "unknown opponent slot '" + opponent_slot + "'");
  const int total = rounds.value_or(options_.default_rounds);
  if (total < 1 || total > options_.max_rounds) {
    throw ServiceError("bad_request", "rounds must be in [1, " + std::to_string(options_.max_rounds) + "]");
  }
  if (!seed) {
    std::random_device rd;
    seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }

  auto s = std::make_shared<Session>(*seed);
  char id[24];
  std::snprintf(id, sizeof(id), "%016llx",
                static_cast<unsigned long long>(Rng({id_salt_, next_id_++}).next()));
  s->id = id;
  s->opponent = *opp;
  s->rounds_total = total;
  start_round(*s, options_.grid);
  s->deadline = clock_.now_ms() + options_.turn_ms;
  if (options_.log_dir) {
    const auto path = *options_.log_dir / (s->id + ".jsonl");
    s->log_file.open(path, std::ios::out | std::ios::trunc);
    if (!s->log_file) throw std::runtime_error("cannot open session log " + path.string());
  }

  Created c;
  c.session_id = s->id;
  c.grid = options_.grid;
  c.rounds_total = total;
  c.round = round_view(*s);
  c.deadline_ms = s->deadline;
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(s->id, s);
  }
  return c;
}

namespace {

// Resolves the pending turn of `s`; caller holds the session mutex.
template <class S>
TurnResult resolve_turn(S& s, env::Action human, bool forced, Millis next_deadline,
                        const env::GridConfig& grid) {
  const int turn = s.state.turn;
  SeatTrace& p1 = s.current.seats[0];
  SeatTrace& p2 = s.current.seats[1];

  env::Action agent;
  if (s.opponent.table) {
    const auto& table = *s.opponent.table;
    const auto key = qlearn::make_key(table.seat(), turn, s.state.p2_objective, s.traj[1], s.traj[0],
                                      table.history_len());
    const auto m = qlearn::influence_measures(table, key);
    p2.te.push_back(m.te.value);
    p2.h_plus.push_back(m.h_plus.value);
    p2.h_minus.push_back(m.h_minus.value);
    agent = qlearn::select_action(table, key, 0.0, s.rng);
  } else {
    agent = baselines::baseline_action(*s.opponent.baseline, s.state.p2_col, s.state.p1_col,
                                       s.state.p2_objective, s.state.p1_objective, grid.cols, s.rng);
  }

  s.state = env::step(s.state, human, agent);
  s.traj[0].push_back(s.state.p1_col);
  s.traj[1].push_back(s.state.p2_col);
  p1.actions.push_back(human);
  p2.actions.push_back(agent);
  p1.forced.push_back(forced);
  p2.forced.push_back(false);

  TurnResult r;
  r.session_id = s.id;
  r.round = s.round + 1;
  r.turn = turn;
  r.your_move = human;
  r.opponent_move = agent;
  r.you = position(s.state, Seat::P1);
  r.opponent = position(s.state, Seat::P2);
  r.forced = forced;

  if (s.state.terminal()) {
    const env::Outcome result = env::outcome(s.state);
    s.current.outcome = result;
    p1.cols = s.traj[0];
    p2.cols = s.traj[1];
    p1.success = env::achieved(p1.objective, result);
    p2.success = env::achieved(p2.objective, result);
    s.scores.you += p1.success;
    s.scores.opponent += p2.success;
    if (s.log_file.is_open()) {
      s.log_file << to_json(s.current).dump() << '\n';
      s.log_file.flush();
    }
    s.log.push_back(std::move(s.current));
    r.outcome = result;
    r.you_succeeded = p1.success;
    ++s.round;
    if (s.round >= s.rounds_total) {
      s.finished = true;
      r.status = RoundStatus::Finished;
    } else {
      r.status = RoundStatus::RoundOver;
      start_round(s, grid);
      r.next_round = round_view(s);
    }
  }
  r.scores = s.scores;
  if (!s.finished) {
    s.deadline = next_deadline;
    r.deadline_ms = s.deadline;
  }
  return r;
}

// Forces every overdue turn; caller holds the session mutex.
template <class S>
std::vector<TurnResult> force_overdue(S& s, Millis now, Millis turn_ms, const env::GridConfig& grid) {
  std::vector<TurnResult> out;
  while (!s.finished && s.deadline <= now) {
    out.push_back(resolve_turn(s, env::Action::Straight, true, s.deadline + turn_ms, grid));
  }
  return out;
}

}  // namespace

TurnResult GameService::submit_action(const std::string& session_id, env::Action action,
                                      std::optional<int> expected_round,
                                      std::optional<int> expected_turn) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  const Millis now = clock_.now_ms();
  auto forced = force_overdue(*s, now, options_.turn_ms, options_.grid);
  if (!forced.empty()) {
    const auto n = forced.size();
    throw TimeoutError("deadline passed; Straight was applied for " + std::to_string(n) + " turn(s)",
                       std::move(forced));
  }
  if (s->finished) throw ServiceError("finished", "session is finished");
  if ((expected_round && *expected_round != s->round + 1) ||
      (expected_turn && *expected_turn != s->state.turn)) {
    throw ServiceError("conflict", "action is not for the pending turn (round " +
                                       std::to_string(s->round + 1) + ", turn " +
                                       std::to_string(s->state.turn) + ")");
  }
  return resolve_turn(*s, action, false, now + options_.turn_ms, options_.grid);
}

std::vector<TurnResult> GameService::tick(const std::string& session_id, Millis now) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return force_overdue(*s, now, options_.turn_ms, options_.grid);
}

std::vector<TurnResult> GameService::tick_all() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [_, s] : sessions_) all.push_back(s);
  }
  const Millis now = clock_.now_ms();
  std::vector<TurnResult> out;
  for (auto& s : all) {
    std::lock_guard lock(s->mutex);
    auto forced = force_overdue(*s, now, options_.turn_ms, options_.grid);
    std::move(forced.begin(), forced.end(), std::back_inserter(out));
  }
  return out;
}

SessionReport GameService::report(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  SessionReport r;
  r.session_id = s->id;
  r.rounds_completed = static_cast<int>(s->log.size());
  r.rounds_total = s->rounds_total;
  r.scores = s->scores;
  if (!s->log.empty()) r.rates = metrics::success_rates(s->log, Seat::P1);
  for (const auto& rec : s->log) (rec.collaborative() ? r.collaborative : r.competitive)++;
  return r;
}

std::vector<EpisodeRecord> GameService::session_log(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return s->log;
}

std::vector<std::string> GameService::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// Wire format

std::string_view to_string(RoundStatus s) {
  switch (s) {
    case RoundStatus::InProgress: return "in_progress";
    case RoundStatus::RoundOver: return "round_over";
    case RoundStatus::Finished: return "finished";
  }
  return "?";
}

namespace {

json pos_json(const Position& p) { return {{"row", p.row}, {"col", p.col}}; }

json round_json(const RoundView& v) {
  return {{"round", v.round},
          {"your_objective", env::to_string(v.your_objective)},
          {"positions", {{"you", pos_json(v.you)}, {"opponent", pos_json(v.opponent)}}}};
}

json opt_rate(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const Created& c) {
  json j = round_json(c.round);
  j["type"] = "created";
  j["session_id"] = c.session_id;
  j["grid"] = {{"rows", c.grid.rows}, {"cols", c.grid.cols}, {"turns", c.grid.turns}};
  j["rounds_total"] = c.rounds_total;
  j["deadline_ms"] = c.deadline_ms;
  return j;
}

json to_json(const TurnResult& t) {
  json j = {{"type", "turn"},
            {"session_id", t.session_id},
            {"round", t.round},
            {"turn", t.turn},
            {"moves", {{"you", env::to_string(t.your_move)}, {"opponent", env::to_string(t.opponent_move)}}},
            {"positions", {{"you", pos_json(t.you)}, {"opponent", pos_json(t.opponent)}}},
            {"round_status", to_string(t.status)},
            {"forced", t.forced},
            {"scores", {{"you", t.scores.you}, {"opponent", t.scores.opponent}}},
            {"deadline_ms", t.deadline_ms ? json(*t.deadline_ms) : json(nullptr)}};
  if (t.outcome) j["outcome"] = env::to_string(*t.outcome);
  if (t.you_succeeded) j["you_succeeded"] = *t.you_succeeded;
  if (t.next_round) j["next_round"] = round_json(*t.next_round);
  return j;
}

json to_json(const SessionReport& r) {
  return {{"type", "report"},
          {"session_id", r.session_id},
          {"rounds_completed", r.rounds_completed},
          {"rounds_total", r.rounds_total},
          {"collaborative", r.collaborative},
          {"competitive", r.competitive},
          {"scores", {{"you", r.scores.you}, {"opponent", r.scores.opponent}}},
          {"rates",
           {{"srcp", opt_rate(r.rates.srcp)},
            {"srcl", opt_rate(r.rates.srcl)},
            {"srp", opt_rate(r.rates.srp)},
            {"srm", opt_rate(r.rates.srm)}}}};
}

json error_json(const std::string& code, const std::string& message) {
  return {{"type", "error"}, {"code", code}, {"message", message}};
}

json GameService::handle(const json& request) {
  try {
    if (!request.is_object() || !request.contains("type") || !request["type"].is_string()) {
      throw ServiceError("bad_request", "message must be an object with a string 'type'");
    }
    const auto type = request["type"].get<std::string>();
    auto session_id = [&] {
      if (!request.contains("session_id") || !request["session_id"].is_string()) {
        throw ServiceError("bad_request", "'session_id' (string) is required");
      }
      return request["session_id"].get<std::string>();
    };
    auto opt_int = [&](const char* field) -> std::optional<int> {
      if (!request.contains(field) || request[field].is_null()) return std::nullopt;
      if (!request[field].is_number_integer()) throw ServiceError("bad_request", std::string("'") + field + "' must be an integer");
      return request[field].get<int>();
    };

    if (type == "create") {
      if (!request.contains("opponent_slot") || !request["opponent_slot"].is_string()) {
        throw ServiceError("bad_request", "'opponent_slot' (string) is required");
      }
      std::optional<std::uint64_t> seed;
      if (request.contains("seed") && !request["seed"].is_null()) {
        const auto& v = request["seed"];
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
          throw ServiceError("bad_request", "'seed' must be a non-negative integer");
        }
        seed = request["seed"].get<std::uint64_t>();
      }
      return to_json(create_session(request["opponent_slot"].get<std::string>(), opt_int("rounds"), seed));
    }
    if (type == "act") {
      const auto id = session_id();
      if (!request.contains("action") || !request["action"].is_string()) {
        throw ServiceError("bad_request", "'action' must be one of left|straight|right");
      }
      const auto word = request["action"].get<std::string>();
      auto action = env::parse_action(word);
      if (!action || env::to_string(*action) != word) throw ServiceError("bad_request", "'action' must be one of left|straight|right");
      const auto round = opt_int("round");
      const auto turn = opt_int("turn");
      try {
        return to_json(submit_action(id, *action, round, turn));
      } catch (const TimeoutError& e) {
        json err = error_json(e.code(), e.what());
        err["forced_turns"] = json::array();
        for (const auto& t : e.forced_turns()) err["forced_turns"].push_back(to_json(t));
        return err;
      }
    }
    if (type == "report") return to_json(report(session_id()));
    if (type == "slots") return {{"type", "slots"}, {"slots", opponent_slots()}};
    throw ServiceError("bad_request", "unknown message type '" + type + "'");
  } catch (const ServiceError& e) {
    return error_json(e.code(), e.what());
  } catch (const json::exception& e) {
    return error_json("bad_request", e.what());
  }
}

}  // namespace tecorridor::service
