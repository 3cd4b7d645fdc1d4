import json
import math

import pytest

import tecorridor as tc


def test_softmax_and_entropy():
    p = tc.softmax([0.0, 0.0, 0.0])
    assert p == pytest.approx([1 / 3] * 3)
    assert tc.softmax([1.0, 2.0, 3.0]) == pytest.approx(tc.softmax([101.0, 102.0, 103.0]))
    assert tc.shannon_entropy(p) == pytest.approx(math.log2(3))
    assert tc.shannon_entropy([1.0, 0.0, 0.0]) == 0.0
    with pytest.raises(ValueError):
        tc.shannon_entropy([0.5, 0.2, 0.2])


def test_transfer_entropy():
    u = [1 / 3] * 3
    assert tc.transfer_entropy(u, [1.0, 0.0, 0.0]) == pytest.approx(math.log2(3))
    assert tc.transfer_entropy([0.2, 0.3, 0.5], [0.6, 0.3, 0.1]) == pytest.approx(
        -tc.transfer_entropy([0.6, 0.3, 0.1], [0.2, 0.3, 0.5])
    )
    assert tc.normalized_te(math.log2(3)) == pytest.approx(1.0)
    assert tc.normalized_te(-math.log2(3) / 2) == pytest.approx(-0.5)
    assert tc.gaussian_entropy(1, 1.0) == pytest.approx(1.4189, abs=1e-4)
    assert tc.opponent_history_count(1) == 5
    assert tc.opponent_history_count(2) == 13


def test_qtable_roundtrip(tmp_path):
    t = tc.QTable(seat=tc.Seat.P2, phi=10.0)
    assert t.entry_count == 0
    t.set_q(1, tc.Objective.MEET, [2, 2], [1, 2], tc.Action.LEFT, 10.0)
    assert t.q_values(1, tc.Objective.MEET, [2, 2], [1, 2]) == [10.0, 0.0, 0.0]
    assert t.marginal_q(1, tc.Objective.MEET, [2, 2])[0] == pytest.approx(10.0 / 13)
    m = t.influence(1, tc.Objective.MEET, [2, 2], [1, 2])
    assert m["te"] == pytest.approx(m["h_minus"] - m["h_plus"])

    path = tmp_path / "agent.qtable"
    t.save(path)
    loaded = tc.QTable.load(path)
    assert loaded.dumps() == t.dumps()
    assert loaded.seat == tc.Seat.P2
    assert loaded.phi == 10.0

    path.write_text("tecorridor-qtable 9\n")
    with pytest.raises(ValueError):
        tc.QTable.load(path)


def test_td_update():
    t = tc.QTable()
    t.td_update(0, tc.Objective.PASS, [2], [2], tc.Action.RIGHT, 10.0)
    assert t.q_values(0, tc.Objective.PASS, [2], [2])[2] == pytest.approx(8.0)


def test_metrics():
    assert tc.cps(0.8, 0.2, 0.8, 0.2) == pytest.approx(0.32)
    assert tc.parse_pair("pos:pk-sf") == "pos:pk-sf"
    with pytest.raises(ValueError):
        tc.parse_pair("nobody:pos")


def test_train_and_evaluate(tmp_path):
    report = tc.train_and_evaluate(pair="pos:pos", episodes=1500, seeds=[3, 4], eval_episodes=200)
    assert [s["seed"] for s in report["seeds"]] == [3, 4]
    p1, p2 = report["agents"]
    assert p1["label"] == "pos"
    assert p1["srcp"]["mean"] + p2["srcp"]["mean"] == pytest.approx(1.0)
    again = tc.train_and_evaluate(pair="pos:pos", episodes=1500, seeds=[3, 4], eval_episodes=200)
    assert again == report

    tc.train(tmp_path / "pair", pair="non:neg", episodes=1000, seeds="1")
    assert (tmp_path / "pair" / "seed1_P2.qtable").exists()
    evaluated = tc.evaluate(tmp_path / "pair", episodes=100)
    assert evaluated["seeds"][0]["episodes"] == 100

    with pytest.raises(ValueError):
        tc.train_and_evaluate(pair="pos:pos", episodes=0)
    with pytest.raises(ValueError):
        tc.train_and_evaluate(colour="blue")


def test_game_service(tmp_path):
    snapshots = tmp_path / "snapshots"
    tc.train(tmp_path / "pair", pair="non:pos", episodes=1000, seeds="2")
    snapshots.mkdir()
    (snapshots / "friendly.qtable").write_bytes((tmp_path / "pair" / "seed2_P2.qtable").read_bytes())

    svc = tc.GameService(snapshots, baselines=True, turn_ms=1000, log_dir=tmp_path / "logs", manual_clock=True)
    assert "friendly" in svc.slots and "pk-sf" in svc.slots

    created = svc.handle({"type": "create", "opponent_slot": "friendly", "rounds": 2, "seed": 5})
    assert created["type"] == "created"
    assert "opponent_objective" not in json.dumps(created)
    sid = created["session_id"]

    turn = svc.handle({"type": "act", "session_id": sid, "action": "left", "round": 1, "turn": 0})
    assert turn["type"] == "turn" and turn["forced"] is False
    dup = svc.handle({"type": "act", "session_id": sid, "action": "left", "round": 1, "turn": 0})
    assert dup == {"type": "error", "code": "conflict", "message": dup["message"]}

    svc.advance(1000)
    forced = svc.tick()
    assert len(forced) == 1 and forced[0]["forced"] is True and forced[0]["moves"]["you"] == "straight"

    while True:
        t = svc.handle({"type": "act", "session_id": sid, "action": "straight"})
        if t["round_status"] == "finished":
            break
    report = svc.handle({"type": "report", "session_id": sid})
    log = svc.session_log(sid)
    assert report["rounds_completed"] == len(log) == 2
    assert tc.success_rates(log, tc.Seat.P1)["srp"] == report["rates"]["srp"]
    assert (tmp_path / "logs" / f"{sid}.jsonl").read_text().count("\n") == 2

    assert svc.handle({"type": "create", "opponent_slot": "nobody"})["code"] == "not_found"
