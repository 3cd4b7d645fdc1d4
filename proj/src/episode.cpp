#include "tecorridor/episode.hpp"

#include <istream>
#include <ostream>

#include "tecorridor/errors.hpp"

namespace tecorridor {

using nlohmann::json;

namespace {

constexpr std::array<env::Seat, 2> kSeats = {env::Seat::P1, env::Seat::P2};

std::string seat_name(env::Seat s) { return std::string(env::to_string(s)); }

template <class T>
std::vector<T> vec_field(const json& per_seat, env::Seat s) {
  if (!per_seat.contains(seat_name(s))) return {};
  return per_seat.at(seat_name(s)).get<std::vector<T>>();
}

}  // namespace

json to_json(const EpisodeRecord& record) {
  json j;
  j["round"] = record.round;
  j["outcome"] = env::to_string(record.outcome);
  json objectives, cols, actions, success;
  json te, h_plus, h_minus, rewards, forced, phi;
  for (env::Seat s : kSeats) {
    const SeatTrace& t = record.seat(s);
    const auto name = seat_name(s);
    objectives[name] = env::to_string(t.objective);
    cols[name] = t.cols;
    json acts = json::array();
    for (auto a : t.actions) acts.push_back(env::to_string(a));
    actions[name] = std::move(acts);
    success[name] = t.success;
    if (t.has_measures()) {
      te[name] = t.te;
      h_plus[name] = t.h_plus;
      h_minus[name] = t.h_minus;
      phi[name] = t.phi;
    }
    if (!t.rewards.empty()) rewards[name] = t.rewards;
    if (!t.forced.empty()) forced[name] = t.forced;
  }
  j["objectives"] = std::move(objectives);
  j["cols"] = std::move(cols);
  j["actions"] = std::move(actions);
  j["success"] = std::move(success);
  if (!te.is_null()) {
    j["te"] = std::move(te);
    j["h_plus"] = std::move(h_plus);
    j["h_minus"] = std::move(h_minus);
    j["phi"] = std::move(phi);
  }
  if (!rewards.is_null()) j["rewards"] = std::move(rewards);
  if (!forced.is_null()) j["forced"] = std::move(forced);
  return j;
}

EpisodeRecord episode_from_json(const json& j) {
  try {
    EpisodeRecord r;
    r.round = j.at("round").get<long>();
    auto outcome = env::parse_outcome(j.at("outcome").get<std::string>());
    if (!outcome) throw InvalidInput("bad outcome");
    r.outcome = *outcome;
    for (env::Seat s : kSeats) {
      SeatTrace& t = r.seat(s);
      const auto name = seat_name(s);
      auto obj = env::parse_objective(j.at("objectives").at(name).get<std::string>());
      if (!obj) throw InvalidInput("bad objective");
      t.objective = *obj;
      t.cols = j.at("cols").at(name).get<std::vector<int>>();
      for (const auto& a : j.at("actions").at(name)) {
        auto act = env::parse_action(a.get<std::string>());
        if (!act) throw InvalidInput("bad action");
        t.actions.push_back(*act);
      }
      t.success = j.at("success").at(name).get<bool>();
      if (j.contains("te")) {
        t.te = vec_field<double>(j["te"], s);
        t.h_plus = vec_field<double>(j.at("h_plus"), s);
        t.h_minus = vec_field<double>(j.at("h_minus"), s);
        if (j.contains("phi") && j["phi"].contains(name)) t.phi = j["phi"][name].get<double>();
      }
      if (j.contains("rewards")) t.rewards = vec_field<double>(j["rewards"], s);
      if (j.contains("forced")) t.forced = vec_field<bool>(j["forced"], s);
    }
    return r;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("episode record: ") + e.what());
  }
}

void write_episode_log(std::ostream& out, std::span<const EpisodeRecord> records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<EpisodeRecord> read_episode_log(std::istream& in) {
  std::vector<EpisodeRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(episode_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const InvalidInput& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

ReplayReport replay(std::span<const EpisodeRecord> records, const env::GridConfig& grid) {
  grid.validate();
  ReplayReport report;
  for (const auto& r : records) {
    ++report.episodes;
    auto fail = [&](const std::string& why) {
      report.mismatches.push_back("round " + std::to_string(r.round) + ": " + why);
    };
    const SeatTrace& p1 = r.seat(env::Seat::P1);
    const SeatTrace& p2 = r.seat(env::Seat::P2);
    const auto turns = static_cast<std::size_t>(grid.turns);
    if (p1.actions.size() != turns || p2.actions.size() != turns || p1.cols.empty() ||
        p2.cols.empty()) {
      fail("wrong number of actions or missing start columns");
      continue;
    }
    env::EnvState state;
    state.grid = grid;
    state.p1_col = p1.cols.front();
    state.p2_col = p2.cols.front();
    state.p1_objective = p1.objective;
    state.p2_objective = p2.objective;
    if (state.p1_col < 0 || state.p1_col >= grid.cols || state.p2_col < 0 ||
        state.p2_col >= grid.cols) {
      fail("start column out of range");
      continue;
    }
    std::vector<int> c1{state.p1_col}, c2{state.p2_col};
    for (std::size_t t = 0; t < turns; ++t) {
      state = env::step(state, p1.actions[t], p2.actions[t]);
      c1.push_back(state.p1_col);
      c2.push_back(state.p2_col);
    }
    if (c1 != p1.cols || c2 != p2.cols) fail("recorded columns differ from replayed trajectory");
    const env::Outcome result = env::outcome(state);
    if (result != r.outcome) fail("recorded outcome differs from replay");
    if (env::achieved(p1.objective, result) != p1.success) fail("P1 success flag differs");
    if (env::achieved(p2.objective, result) != p2.success) fail("P2 success flag differs");
  }
  return report;
}

}  // namespace tecorridor
