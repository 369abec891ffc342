"""Harness tests: config, presets, engine determinism, metrics, IO, CLI, session."""

import dataclasses
import hashlib
import json
import math

import numpy as np
import pytest

from teleosim.harness import (
    DEFAULT_BINS,
    ConfigError,
    Engine,
    ScenarioConfig,
    apply_overrides,
    compute_metrics,
    from_json,
    preset,
    run_scenario,
)
from teleosim.harness.cli import EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, main
from teleosim.harness.engine import EngineDivergence, ScenarioTrace, desired_stiffness
from teleosim.harness.metrics import mean_error_above
from teleosim.harness.operators import (
    balloon_descent,
    fig2_sine,
    seeded_sines,
    square_polish,
    trapezoid_grasp,
)
from teleosim.harness.traceio import HEADER, export_trace, load_trace


def _sha(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


class TestConfig:
    def test_validation_errors_name_the_field(self):
        cases = [
            (dict(scenario="nope"), "scenario"),
            (dict(controller="pid"), "controller"),
            (dict(dt=0.0), "dt"),
            (dict(duration=-1.0), "duration"),
            (dict(delta=-0.1), "delta"),
            (dict(mass=0.0), "mass"),
            (dict(bilateral=True, delta=0.1), "bilateral"),
            (dict(contact="sand"), "contact"),
            (dict(estimator="magic"), "estimator"),
            (dict(transport="carrier_pigeon"), "transport"),
        ]
        for overrides, fieldname in cases:
            cfg = dataclasses.replace(ScenarioConfig(), **overrides)
            with pytest.raises(ConfigError) as exc:
                cfg.validate()
            assert fieldname in str(exc.value)

    def test_unknown_override_keys_rejected(self):
        with pytest.raises(ConfigError) as exc:
            apply_overrides(ScenarioConfig(), {"stiffnes": 100.0})
        assert "stiffnes" in str(exc.value)

    def test_from_json_roundtrip(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"scenario": "fig2", "controller": "tic", "seed": 7}))
        cfg = from_json(str(path))
        assert cfg.scenario == "fig2"
        assert cfg.controller == "tic"
        assert cfg.seed == 7
        assert cfg.gain_schedule == "fig2_step"

    def test_bilateral_requires_zero_delay(self):
        with pytest.raises(ConfigError):
            dataclasses.replace(preset("bilateral_polish", "iac"), delta=0.1).validate()


class TestPresets:
    def test_fig2_pins(self):
        cfg = preset("fig2", "iac")
        assert cfg.dt == 1e-3
        assert cfg.duration == 12.0
        assert cfg.delta == 0.1
        assert cfg.gain_schedule == "fig2_step"
        # stiffness 500 outside, 50 inside the [2, 8) s window
        assert desired_stiffness(cfg, 0.0, 1.0) == 500.0
        assert desired_stiffness(cfg, 0.0, 2.0) == 50.0
        assert desired_stiffness(cfg, 0.0, 7.999) == 50.0
        assert desired_stiffness(cfg, 0.0, 8.0) == 500.0
        # operator sinusoid: amplitude 0.10 m at 0.6 Hz on x
        tau, tau_dot = fig2_sine(1.0 / 2.4)  # quarter period
        assert tau[0] == pytest.approx(0.10)
        assert np.allclose(tau[1:], 0.0)
        assert tau_dot[0] == pytest.approx(0.0, abs=1e-12)

    def test_free_tracking_pins(self):
        cfg = preset("free_tracking", "tic")
        assert cfg.duration == 60.0
        assert cfg.delta == 0.1
        assert cfg.gain_schedule == "stiffness_sine"
        for t in (0.0, 1.7, 4.0, 13.3):
            assert desired_stiffness(cfg, 0.0, t) == pytest.approx(
                700.0 + 620.0 * math.sin(0.25 * math.pi * t)
            )

    def test_balloon_pins(self):
        iac = preset("balloon", "iac")
        tic = preset("balloon", "tic")
        assert iac.gain_value == 60.0
        assert tic.gain_value == 300.0
        assert iac.contact == "balloon"
        assert iac.rupture_force == 8.0
        # leader descends to 0.05 m above the follower's table, i.e. the
        # resting offset from the balloon scenario
        traj = balloon_descent()
        tau_end, _ = traj(20.0)
        assert tau_end[2] == pytest.approx(0.05)

    def test_bilateral_polish_pins(self):
        cfg = preset("bilateral_polish", "iac")
        assert cfg.delta == 0.0
        assert cfg.duration == 30.0
        assert cfg.bilateral
        assert cfg.grasp_driven
        assert cfg.contact == "table"
        # square side 0.10 m in the x-y plane
        traj = square_polish()
        xs, ys = [], []
        for t in np.linspace(0.0, 6.0, 1201):
            tau, _ = traj(float(t))
            xs.append(tau[0])
            ys.append(tau[1])
        assert max(xs) - min(xs) == pytest.approx(0.10, abs=1e-6)
        assert max(ys) - min(ys) == pytest.approx(0.10, abs=1e-6)

    def test_seeded_sines_deterministic_and_bounded(self):
        a = seeded_sines(3)
        b = seeded_sines(3)
        c = seeded_sines(4)
        ts = np.linspace(0.0, 10.0, 500)
        for t in ts:
            ta, _ = a(float(t))
            tb, _ = b(float(t))
            assert np.array_equal(ta, tb)
            assert np.abs(ta).max() <= 0.2 + 1e-12
        assert any(not np.array_equal(a(float(t))[0], c(float(t))[0]) for t in ts)

    def test_trapezoid_grasp_profile(self):
        grasp = trapezoid_grasp(peak=20.0, duration=30.0)
        assert grasp(0.0) == pytest.approx(0.0)
        assert grasp(15.0) == pytest.approx(20.0)
        assert grasp(30.0) == pytest.approx(0.0)
        assert 0.0 < grasp(5.0) < 20.0


class TestEngine:
    def test_row_count(self):
        cfg = dataclasses.replace(preset("fig2", "iac"), duration=0.5)
        trace = run_scenario(cfg)
        assert len(trace) == 501
        assert trace.t[0] == 0.0
        assert trace.t[-1] == pytest.approx(0.5)

    def test_error_is_euclidean_leader_follower_distance(self):
        cfg = dataclasses.replace(preset("fig2", "iac"), duration=0.3)
        trace = run_scenario(cfg)
        assert np.allclose(trace.error, np.linalg.norm(trace.x - trace.x_l, axis=1))

    def test_determinism_bitwise(self):
        cfg = dataclasses.replace(preset("free_tracking", "tic"), duration=1.0)
        a, b = run_scenario(cfg), run_scenario(cfg)
        for col in ("t", "x_l", "xd_l", "x", "tau", "l1", "l2", "u_l", "u", "f_env", "error"):
            assert np.array_equal(getattr(a, col), getattr(b, col))

    def test_memory_and_udp_transports_agree(self):
        cfg = dataclasses.replace(preset("fig2", "iac"), duration=0.5)
        mem = run_scenario(cfg)
        udp = run_scenario(dataclasses.replace(cfg, transport="udp"))
        for col in ("x", "x_l", "u", "error"):
            assert np.array_equal(getattr(mem, col), getattr(udp, col))

    def test_startup_hold_before_first_packet(self):
        # the follower holds its start pose until the first delayed packet
        # arrives, one delay interval in
        cfg = dataclasses.replace(preset("fig2", "iac"), duration=0.3)
        trace = run_scenario(cfg)
        hold = trace.t < cfg.delta
        assert np.allclose(trace.x[hold], trace.x[0], atol=1e-12)

    def test_divergence_guard_trips(self):
        cfg = dataclasses.replace(
            ScenarioConfig(),
            scenario="custom",
            controller="high-gain",
            high_gain_l1=1e9,
            dt=1e-2,
            duration=5.0,
            delta=0.0,
        )
        with pytest.raises(EngineDivergence):
            run_scenario(cfg)

    def test_steppable_engine_matches_run_scenario(self):
        cfg = dataclasses.replace(preset("fig2", "tic"), duration=0.2)
        engine = Engine(cfg)
        rows = [engine.step() for _ in range(50)]
        engine.close()
        trace = run_scenario(dataclasses.replace(cfg, duration=0.05))
        # run_scenario emits the same rows as manual stepping; rows are
        # stamped at the tick's start time
        assert rows[0]["t"] == trace.t[0] == 0.0
        assert np.array_equal(rows[49]["x"], trace.x[49])


def _zero_trace(n=100, l1=500.0):
    z = np.zeros((n, 3))
    return ScenarioTrace(
        t=np.arange(n) * 1e-3,
        x_l=z.copy(), xd_l=z.copy(), x=z.copy(), tau=z.copy(),
        l1=np.full((n, 3), l1), l2=np.full((n, 3), 0.1 * l1),
        u_l=z.copy(), u=z.copy(), f_env=z.copy(),
        error=np.zeros(n),
    )


class TestMetrics:
    def test_constant_zero_trace(self):
        report = compute_metrics(_zero_trace())
        assert report.mean_error == 0.0
        assert report.max_error == 0.0
        assert report.peak_contact_force == 0.0
        assert report.contact_duration == 0.0
        assert all(b.mean_error == 0.0 for b in report.bins)

    def test_empty_bins_absent(self):
        report = compute_metrics(_zero_trace(l1=500.0))
        # the only populated bin is [500, 700)
        assert len(report.bins) == 1
        assert report.bins[0].lo == 500.0
        assert report.bins[0].hi == 700.0

    def test_purity(self):
        cfg = dataclasses.replace(preset("fig2", "tic"), duration=0.5)
        trace = run_scenario(cfg)
        assert compute_metrics(trace) == compute_metrics(trace)

    def test_rupture_flag(self):
        trace = _zero_trace()
        trace.f_env[50, 2] = 9.0
        report = compute_metrics(trace, rupture_force=8.0)
        assert report.balloon_ruptured is True
        assert report.peak_contact_force == pytest.approx(9.0)
        assert compute_metrics(trace, rupture_force=10.0).balloon_ruptured is False
        assert compute_metrics(trace).balloon_ruptured is None

    def test_empty_trace_rejected(self):
        with pytest.raises(ValueError):
            compute_metrics(_zero_trace(n=0))

    def test_mean_error_above_floor(self):
        trace = _zero_trace(l1=500.0)
        trace.error[:] = 0.25
        assert mean_error_above(trace, 300.0) == pytest.approx(0.25)
        with pytest.raises(ValueError):
            mean_error_above(trace, 1000.0)


class TestTraceIO:
    def test_header_and_row_count(self, tmp_path):
        cfg = dataclasses.replace(preset("fig2", "iac"), duration=10.0)
        trace = run_scenario(cfg)
        path = tmp_path / "trace.csv"
        export_trace(trace, str(path))
        lines = path.read_text().splitlines()
        assert lines[0].split(",")[0] == "t"
        assert lines[0] == ",".join(HEADER)
        assert len(lines) == 1 + 10001

    def test_rerun_identical_hash(self, tmp_path):
        cfg = dataclasses.replace(preset("fig2", "tic"), duration=1.0)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        export_trace(run_scenario(cfg), str(p1))
        export_trace(run_scenario(cfg), str(p2))
        assert _sha(p1) == _sha(p2)

    def test_roundtrip(self, tmp_path):
        cfg = dataclasses.replace(preset("fig2", "iac"), duration=0.3)
        trace = run_scenario(cfg)
        path = tmp_path / "trace.csv"
        export_trace(trace, str(path))
        loaded = load_trace(str(path))
        for col in ("t", "x_l", "xd_l", "x", "tau", "l1", "l2", "u_l", "u", "f_env", "error"):
            assert np.array_equal(getattr(trace, col), getattr(loaded, col))

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,oops\n0.0,1.0\n")
        with pytest.raises(ValueError):
            load_trace(str(path))

    def test_unwritable_path_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            export_trace(run_scenario(dataclasses.replace(preset("fig2", "iac"), duration=0.01)),
                         str(tmp_path / "no" / "such" / "dir.csv"))


class TestCli:
    def test_run_writes_trace(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code = main(["run", "--scenario", "fig2", "--controller", "iac",
                     "--duration", "0.2", "--out", str(out)])
        assert code == EXIT_OK
        assert out.exists()
        assert "wrote 201 rows" in capsys.readouterr().out

    def test_run_without_out_prints_metrics(self, capsys):
        code = main(["run", "--scenario", "fig2", "--duration", "0.2"])
        assert code == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert "mean_error" in report

    def test_bad_scenario_exits_config(self, capsys):
        assert main(["run", "--scenario", "marshole"]) == EXIT_CONFIG

    def test_bad_bins_exit_config(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        main(["run", "--duration", "0.05", "--out", str(out)])
        assert main(["metrics", str(out), "--bins", "500,100"]) == EXIT_CONFIG

    def test_metrics_roundtrip(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        main(["run", "--scenario", "fig2", "--duration", "0.2", "--out", str(out)])
        capsys.readouterr()
        assert main(["metrics", str(out)]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["max_error"] >= 0.0

    def test_divergence_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "controller": "high-gain", "high_gain_l1": 1e9,
            "dt": 1e-2, "duration": 5.0, "delta": 0.0,
        }))
        assert main(["run", "--config", str(cfg)]) == EXIT_DIVERGED

    def test_delay_ms_flag(self, capsys):
        code = main(["run", "--scenario", "fig2", "--duration", "0.05", "--delay-ms", "0"])
        assert code == EXIT_OK

    def test_plot_writes_files(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        main(["run", "--scenario", "fig2", "--duration", "0.2", "--out", str(out)])
        plots = tmp_path / "plots"
        assert main(["plot", str(out), "--out", str(plots)]) == EXIT_OK
        assert any(plots.glob("*.png"))


class TestSession:
    @pytest.fixture
    def client(self):
        from starlette.testclient import TestClient

        from teleosim.harness.session import create_app

        cfg = dataclasses.replace(preset("custom", "iac"), duration=3600.0, delta=0.0)
        app = create_app(cfg)
        with TestClient(app) as client:
            yield client

    @staticmethod
    def _drain_until(ws, msg_type):
        for _ in range(200):
            msg = json.loads(ws.receive_text())
            if msg["type"] == msg_type:
                return msg
        pytest.fail(f"no {msg_type} message")

    @staticmethod
    def _advance(ws, ticks):
        ws.send_text(json.dumps({"kind": "advance", "ticks": ticks}))
        last = None
        remaining = ticks // 16 + 1
        for _ in range(remaining):
            last = json.loads(ws.receive_text())
            assert last["type"] == "snapshot"
        return last

    def test_lockstep_snapshot_protocol(self, client):
        with client.websocket_connect("/session?mode=lockstep") as ws:
            hello = json.loads(ws.receive_text())
            assert hello["type"] == "snapshot"
            assert hello["tick"] == 0
            snap = self._advance(ws, 16)
            assert snap["tick"] == 16
            # rows are stamped at the tick's start time
            assert snap["t"] == pytest.approx(15e-3)

    def test_grasp_event_changes_stiffness_within_two_ticks(self, client):
        with client.websocket_connect("/session?mode=lockstep") as ws:
            ws.receive_text()
            base = self._advance(ws, 16)["l1"][0]
            ws.send_text(json.dumps({"kind": "grasp", "value": 20.0}))
            snap = self._advance(ws, 2)
            # applied at the next tick boundary; rises from tick 1 on,
            # shaped by the rate limiter
            assert snap["l1"][0] > base

    def test_controller_toggle_keeps_follower_continuous(self, client):
        with client.websocket_connect("/session?mode=lockstep") as ws:
            ws.receive_text()
            ws.send_text(json.dumps({"kind": "target_move", "x": 0.1, "y": 0.0, "z": 0.0}))
            before = self._advance(ws, 320)
            ws.send_text(json.dumps({"kind": "toggle_controller", "controller": "tic"}))
            after = self._advance(ws, 2)
            assert after["controller"] == "tic"
            assert abs(after["x"][0] - before["x"][0]) < 1e-3

    def test_pause_then_reset_equals_fresh_state(self, client):
        with client.websocket_connect("/session?mode=lockstep") as ws:
            fresh = json.loads(ws.receive_text())
            self._advance(ws, 64)
            ws.send_text(json.dumps({"kind": "pause"}))
            ws.send_text(json.dumps({"kind": "reset"}))
            snap = self._advance(ws, 0 + 16)
            assert snap["tick"] == 16
            ws.send_text(json.dumps({"kind": "reset"}))
            # reset returns to tick 0; the next advance starts from scratch
            again = self._advance(ws, 16)
            assert again["tick"] == 16
            assert again["x_l"] == pytest.approx(fresh["x_l"])

    def test_malformed_inputs_rejected_without_terminating(self, client):
        with client.websocket_connect("/session?mode=lockstep") as ws:
            ws.receive_text()
            ws.send_text(json.dumps({"kind": "bogus"}))
            err = json.loads(ws.receive_text())
            assert err["type"] == "error"
            ws.send_text(json.dumps({"kind": "grasp", "value": 50.0}))
            err = json.loads(ws.receive_text())
            assert err["type"] == "error"
            # session still alive and stepping
            snap = self._advance(ws, 16)
            assert snap["tick"] == 16

    def test_paused_session_ignores_advance(self, client):
        with client.websocket_connect("/session?mode=lockstep") as ws:
            ws.receive_text()
            ws.send_text(json.dumps({"kind": "pause"}))
            ws.send_text(json.dumps({"kind": "advance", "ticks": 16}))
            ws.send_text(json.dumps({"kind": "resume"}))
            snap = self._advance(ws, 16)
            assert snap["tick"] == 16

    def test_reconnect_preserves_engine_run(self, client):
        # a dropped connection resumes the same run; only reset restarts it
        with client.websocket_connect("/session?mode=lockstep") as ws:
            ws.receive_text()
            self._advance(ws, 32)
        with client.websocket_connect("/session?mode=lockstep") as ws:
            hello = json.loads(ws.receive_text())
            assert hello["tick"] == 32
            ws.send_text(json.dumps({"kind": "reset"}))
            snap = self._advance(ws, 16)
            assert snap["tick"] == 16
