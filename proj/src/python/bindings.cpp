#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "tecorridor/errors.hpp"
#include "tecorridor/game_service.hpp"
#include "tecorridor/info_theory.hpp"
#include "tecorridor/training.hpp"

namespace py = pybind11;
using namespace tecorridor;

namespace {

py::object to_python(const nlohmann::json& j) {
  const py::object loads = py::module_::import("json").attr("loads");
  return loads(j.dump());
}

nlohmann::json from_python(const py::handle& obj) {
  const py::object dumps = py::module_::import("json").attr("dumps");
  return nlohmann::json::parse(dumps(obj).cast<std::string>());
}

py::object opt(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict rates_dict(const metrics::SuccessRates& r) {
  py::dict d;
  d["srcp"] = opt(r.srcp);
  d["srcl"] = opt(r.srcl);
  d["srp"] = opt(r.srp);
  d["srm"] = opt(r.srm);
  return d;
}

py::dict stat_dict(const metrics::Stat& s) {
  py::dict d;
  d["mean"] = opt(s.mean);
  d["std"] = opt(s.stddev);
  return d;
}

py::dict report_dict(const metrics::MetricsReport& r) {
  py::list agents;
  for (const auto& a : r.agents) {
    py::dict d;
    d["label"] = a.label;
    d["srcp"] = stat_dict(a.srcp);
    d["srcl"] = stat_dict(a.srcl);
    d["srp"] = stat_dict(a.srp);
    d["srm"] = stat_dict(a.srm);
    d["avg_te"] = stat_dict(a.avg_te);
    d["avg_h_plus"] = stat_dict(a.avg_h_plus);
    d["avg_h_minus"] = stat_dict(a.avg_h_minus);
    agents.append(d);
  }
  py::list seeds;
  for (const auto& s : r.seeds) {
    py::dict d;
    d["seed"] = s.seed;
    d["episodes"] = s.episodes;
    d["cps"] = opt(s.cps);
    d["p1"] = rates_dict(s.agents[0].rates);
    d["p2"] = rates_dict(s.agents[1].rates);
    seeds.append(d);
  }
  py::dict out;
  out["experiment"] = r.experiment;
  out["agents"] = agents;
  out["cps"] = stat_dict(r.cps);
  out["seeds"] = seeds;
  return out;
}

training::ExperimentConfig make_config(const py::kwargs& kw) {
  training::ExperimentConfig config;
  training::KeyValues values;
  for (const auto& [k, v] : kw) {
    const auto key = k.cast<std::string>();
    if (key == "seeds" && py::isinstance<py::sequence>(v) && !py::isinstance<py::str>(v)) {
      std::string joined;
      for (const auto& s : v) joined += (joined.empty() ? "" : ",") + py::str(s).cast<std::string>();
      values[key] = joined;
    } else {
      values[key] = py::str(v).cast<std::string>();
    }
  }
  training::apply(config, values);
  config.validate();
  return config;
}

qlearn::SparseQTable make_table(env::Seat seat, int history_len, double phi, qlearn::RewardMode mode,
                                qlearn::MarginalDivisor divisor, int cols, int turns) {
  qlearn::TableSettings s;
  s.seat = seat;
  s.history_len = history_len;
  s.phi = phi;
  s.mode = mode;
  s.divisor = divisor;
  s.grid = {2 * turns + 1, cols, turns};
  return qlearn::SparseQTable(s);
}

/// A GameService bundled with the clock it reads.
class PyGameService {
 public:
  PyGameService(const std::filesystem::path& snapshot_dir, bool with_baselines, int turn_ms,
                int default_rounds, std::optional<std::filesystem::path> log_dir, bool manual_clock) {
    auto reg = service::OpponentRegistry::from_directory(snapshot_dir);
    if (with_baselines) {
      for (auto k : {baselines::BaselineKind::Random, baselines::BaselineKind::PureSF,
                     baselines::BaselineKind::IPKSF, baselines::BaselineKind::PKSF}) {
        reg.add_baseline(std::string(baselines::to_string(k)), {k, baselines::kDefaultKnowledgeProbability});
      }
    }
    service::ServiceOptions opts;
    opts.turn_ms = turn_ms;
    opts.default_rounds = default_rounds;
    opts.log_dir = std::move(log_dir);
    if (manual_clock) {
      manual_ = std::make_unique<service::ManualClock>();
      svc_ = std::make_unique<service::GameService>(std::move(reg), *manual_, opts);
    } else {
      svc_ = std::make_unique<service::GameService>(std::move(reg), system_, opts);
    }
  }

  py::object handle(const py::dict& request) { return to_python(svc_->handle(from_python(request))); }

  py::list tick() {
    py::list out;
    for (const auto& t : svc_->tick_all()) out.append(to_python(service::to_json(t)));
    return out;
  }

  void advance(service::Millis ms) {
    if (!manual_) throw InvalidInput("advance() needs manual_clock=True");
    manual_->advance(ms);
  }

  std::vector<std::string> slots() const { return svc_->opponent_slots(); }

  py::list session_log(const std::string& id) const {
    py::list out;
    for (const auto& r : svc_->session_log(id)) out.append(to_python(to_json(r)));
    return out;
  }

 private:
  service::SystemClock system_;
  std::unique_ptr<service::ManualClock> manual_;
  std::unique_ptr<service::GameService> svc_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Transfer-entropy shaped self-play in the corridor dilemma";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<service::ServiceError>(m, "ServiceError", PyExc_RuntimeError);

  py::enum_<env::Seat>(m, "Seat").value("P1", env::Seat::P1).value("P2", env::Seat::P2);
  py::enum_<env::Action>(m, "Action")
      .value("LEFT", env::Action::Left)
      .value("STRAIGHT", env::Action::Straight)
      .value("RIGHT", env::Action::Right);
  py::enum_<env::Objective>(m, "Objective")
      .value("MEET", env::Objective::Meet)
      .value("PASS", env::Objective::Pass);
  py::enum_<qlearn::RewardMode>(m, "RewardMode")
      .value("TE", qlearn::RewardMode::TE)
      .value("ENTROPY", qlearn::RewardMode::EntropyOnly)
      .value("NONE", qlearn::RewardMode::None);
  py::enum_<qlearn::MarginalDivisor>(m, "MarginalDivisor")
      .value("ALL", qlearn::MarginalDivisor::AllPossible)
      .value("VISITED", qlearn::MarginalDivisor::VisitedOnly)
      .value("WINDOW", qlearn::MarginalDivisor::FullWindow);

  // information theory
  m.def("softmax", [](const std::vector<double>& q) {
    const auto d = info::softmax(q);
    return std::vector<double>(d.probs().begin(), d.probs().end());
  }, py::arg("q_values"));
  m.def("shannon_entropy", [](const std::vector<double>& p) { return info::shannon_entropy(p).value; },
        py::arg("probs"), "Entropy in bits.");
  m.def("transfer_entropy", [](const std::vector<double>& p_minus, const std::vector<double>& p_plus) {
    return info::transfer_entropy(info::ActionDistribution(p_minus), info::ActionDistribution(p_plus)).value;
  }, py::arg("p_minus"), py::arg("p_plus"), "H(p_minus) - H(p_plus) in bits.");
  m.def("normalized_te", [](double te, int k) { return info::normalized_te({te}, k); },
        py::arg("te"), py::arg("action_count") = env::kActionCount);
  m.def("gaussian_entropy", [](int dim, double det) {
    return info::gaussian_differential_entropy({dim, det}).value;
  }, py::arg("dimension"), py::arg("covariance_determinant"), "Differential entropy in nats.");
  m.def("opponent_history_count", &qlearn::opponent_history_count, py::arg("length"), py::arg("cols") = 5);

  // Q-table
  py::class_<qlearn::SparseQTable>(m, "QTable")
      .def(py::init(&make_table), py::arg("seat") = env::Seat::P1, py::arg("history_len") = 5,
           py::arg("phi") = 0.0, py::arg("mode") = qlearn::RewardMode::TE,
           py::arg("divisor") = qlearn::MarginalDivisor::AllPossible, py::arg("cols") = 5,
           py::arg("turns") = 5)
      .def_property_readonly("seat", &qlearn::SparseQTable::seat)
      .def_property_readonly("phi", &qlearn::SparseQTable::phi)
      .def_property_readonly("history_len", &qlearn::SparseQTable::history_len)
      .def_property_readonly("entry_count", &qlearn::SparseQTable::entry_count)
      .def("q_values", [](const qlearn::SparseQTable& t, int turn, env::Objective obj,
                          const std::vector<int>& ego, const std::vector<int>& opp) {
        return t.q_values({t.seat(), turn, obj, ego, opp});
      }, py::arg("turn"), py::arg("objective"), py::arg("ego_cols"), py::arg("opp_cols"))
      .def("set_q", [](qlearn::SparseQTable& t, int turn, env::Objective obj, const std::vector<int>& ego,
                       const std::vector<int>& opp, env::Action a, double v) {
        t.set_q({t.seat(), turn, obj, ego, opp}, a, v);
      }, py::arg("turn"), py::arg("objective"), py::arg("ego_cols"), py::arg("opp_cols"),
         py::arg("action"), py::arg("value"))
      .def("marginal_q", [](const qlearn::SparseQTable& t, int turn, env::Objective obj,
                            const std::vector<int>& ego) {
        return t.marginal_q({t.seat(), turn, obj, ego});
      }, py::arg("turn"), py::arg("objective"), py::arg("ego_cols"))
      .def("influence", [](const qlearn::SparseQTable& t, int turn, env::Objective obj,
                           const std::vector<int>& ego, const std::vector<int>& opp) {
        const auto m = qlearn::influence_measures(t, {t.seat(), turn, obj, ego, opp});
        py::dict d;
        d["te"] = m.te.value;
        d["h_plus"] = m.h_plus.value;
        d["h_minus"] = m.h_minus.value;
        return d;
      }, py::arg("turn"), py::arg("objective"), py::arg("ego_cols"), py::arg("opp_cols"))
      .def("td_update", [](qlearn::SparseQTable& t, int turn, env::Objective obj, const std::vector<int>& ego,
                           const std::vector<int>& opp, env::Action a, double reward, double alpha,
                           double gamma) {
        qlearn::td_update(t, {t.seat(), turn, obj, ego, opp}, a, reward, std::nullopt, alpha, gamma);
      }, py::arg("turn"), py::arg("objective"), py::arg("ego_cols"), py::arg("opp_cols"),
         py::arg("action"), py::arg("reward"), py::arg("alpha") = qlearn::kDefaultAlpha,
         py::arg("gamma") = qlearn::kDefaultGamma, "Terminal-step update (no bootstrap).")
      .def("save", [](const qlearn::SparseQTable& t, const std::filesystem::path& p) { qlearn::save_table(t, p); })
      .def("dumps", [](const qlearn::SparseQTable& t) {
        std::ostringstream out;
        qlearn::save_table(t, out);
        return out.str();
      })
      .def_static("load", [](const std::filesystem::path& p) { return qlearn::load_table(p); });

  // experiments
  m.def("train_and_evaluate", [](const py::kwargs& kw) {
    const auto config = make_config(kw);
    metrics::MetricsReport report;
    {
      py::gil_scoped_release release;
      report = training::evaluate(training::train_pair(config), config.eval_episodes);
    }
    return report_dict(report);
  }, "Keyword arguments are config keys: pair, episodes, seeds, alpha, gamma, history, "
     "eval_episodes, divisor, jobs, experiment.");
  m.def("train", [](const std::filesystem::path& out_dir, const py::kwargs& kw) {
    const auto config = make_config(kw);
    py::gil_scoped_release release;
    training::save_trained(training::train_pair(config), out_dir);
  }, py::arg("out_dir"), "Trains and writes snapshots plus the config to out_dir.");
  m.def("evaluate", [](const std::filesystem::path& pair_dir, long episodes) {
    const auto trained = training::load_trained(pair_dir);
    return report_dict(training::evaluate(trained, episodes));
  }, py::arg("pair_dir"), py::arg("episodes") = 10000);
  m.def("parse_pair", [](const std::string& text) { return training::to_string(training::parse_pair_spec(text)); },
        py::arg("spec"), "Canonical form of a pair spec.");

  // metrics
  m.def("cps", py::overload_cast<double, double, double, double, double, double>(&metrics::cps),
        py::arg("srp1"), py::arg("srm1"), py::arg("srp2"), py::arg("srm2"),
        py::arg("bsrp") = metrics::kBaselineSuccessPass, py::arg("bsrm") = metrics::kBaselineSuccessMeet);
  m.def("success_rates", [](const std::vector<py::dict>& records, env::Seat seat) {
    std::vector<EpisodeRecord> recs;
    recs.reserve(records.size());
    for (const auto& r : records) recs.push_back(episode_from_json(from_python(r)));
    return rates_dict(metrics::success_rates(recs, seat));
  }, py::arg("records"), py::arg("seat"), "Rates over episode records (dicts as written to JSONL logs).");

  // game service
  py::class_<PyGameService>(m, "GameService")
      .def(py::init<const std::filesystem::path&, bool, int, int, std::optional<std::filesystem::path>, bool>(),
           py::arg("snapshot_dir"), py::arg("baselines") = false, py::arg("turn_ms") = 5000,
           py::arg("rounds") = 100, py::arg("log_dir") = std::nullopt, py::arg("manual_clock") = false)
      .def("handle", &PyGameService::handle, py::arg("request"),
           "Dispatches a create/act/report message and returns the reply.")
      .def("tick", &PyGameService::tick)
      .def("advance", &PyGameService::advance, py::arg("ms"))
      .def_property_readonly("slots", &PyGameService::slots)
      .def("session_log", &PyGameService::session_log, py::arg("session_id"));
}
