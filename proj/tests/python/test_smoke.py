# SPDX-License-Identifier: Apache-2.0
import json
import math
import os
import pathlib

import pytest

import insitu

GOLDEN = pathlib.Path(
    os.environ.get("INSITU_GOLDEN_DIR", pathlib.Path(__file__).parents[1] / "golden")
)


def test_three_buttons_emit_immediately():
    m = insitu.Mechanism("three_buttons")
    assert m.step(5, "button_down", 1) == (5, 1)
    assert m.step(6, "button_up", 1) is None
    assert m.label == 1


def test_touch_led_follows_force():
    m = insitu.Mechanism("touch")
    seen = []
    for k, force in enumerate([0, 100, 400, 800]):
        m.step(300 * k, "force", force)
        seen.append(m.led)
    assert seen == ["off", "green", "yellow", "red"]


def test_bad_input_raises():
    with pytest.raises(insitu.InsituError):
        insitu.Mechanism("three_buttons").step(0, "button_down", 7)
    with pytest.raises(ValueError):
        insitu.Mechanism("no_such_mechanism")


def test_golden_vectors_replay():
    files = sorted(GOLDEN.glob("*.jsonl"))
    assert files
    for f in files:
        ok, msg = insitu.replay_golden(str(f))
        assert ok, f"{f.name}: {msg}"


def test_statistics_fixtures():
    q = insitu.cochran_q([[1, 1, 0], [1, 0, 0], [1, 1, 1], [0, 0, 0]])
    assert q["statistic"] == pytest.approx(3.0, abs=1e-12)
    assert q["p"] == pytest.approx(math.exp(-1.5), abs=1e-6)
    assert insitu.mcnemar_exact_p(5, 1) == 0.21875
    assert insitu.chi2_sf(4.0, 2.0) == pytest.approx(math.exp(-2.0), abs=1e-12)
    assert insitu.f_sf(1.0, 7.0, 7.0) == pytest.approx(0.5, abs=1e-12)


def test_window_count():
    assert insitu.window_count(1000, 100, 20) == 12
    assert insitu.window_count(99, 100, 20) == 0


def test_simulated_csv_round_trip():
    text = insitu.simulate_csv("users = 1\nroute = walking:5, upstairs:5\n", "slider")
    assert text.startswith("t_ms,ax,ay,az,gx,gy,gz,mx,my,mz,label")
    labels = insitu.csv_labels(text)
    assert len(labels) == 500
    assert set(labels) <= {-1, 0, 1, 2}


def test_protocol_session(tmp_path):
    s = insitu.ProtocolSession(str(tmp_path / "live.csv"))
    out = s.handle_line(json.dumps({"type": "control", "action": "start", "mechanism": "app"}))
    assert json.loads(out[0])["recording"] is True
    err = s.handle_line("{oops")
    assert json.loads(err[0])["type"] == "error"
    tap = {"type": "input", "t_ms": 100, "kind": "tap", "value": "walking"}
    assert json.loads(s.handle_line(json.dumps(tap))[0])["label"] == 1
    s.handle_line(json.dumps({"type": "control", "action": "stop", "t_ms": 400}))
    assert not s.recording
    assert (tmp_path / "live.csv").exists()
