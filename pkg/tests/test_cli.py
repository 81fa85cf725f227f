"""Operator CLI: artifacts, exit codes, idempotence."""

import csv
import json

import pytest

from polarsim.cli import main
from polarsim.storage import load_snapshot


def run_cli(*argv):
    return main(list(argv))


def tiny_config_doc(seed=61):
    return {
        "simulation": {
            "n_regular": 8,
            "n_influencers_pro": 1,
            "n_influencers_contra": 1,
            "n_iterations": 2,
            "n_recs": 4,
            "seed": seed,
        },
        "gateway": {"mode": "stub"},
    }


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(tiny_config_doc()))
    return path


class TestSimulate:
    def test_writes_snapshot_stats_manifest(self, tmp_path, config_file, capsys):
        out = tmp_path / "snap.json"
        stats = tmp_path / "stats.csv"
        code = run_cli(
            "simulate",
            "--config",
            str(config_file),
            "--out",
            str(out),
            "--stats-out",
            str(stats),
        )
        assert code == 0
        assert out.exists() and stats.exists()
        assert stats.with_suffix(".png").exists()
        manifest = json.loads((tmp_path / "snap.json.manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert str(out) in manifest["outputs"]
        assert load_snapshot(out).state.iteration == 2

    def test_missing_config_names_path(self, tmp_path, capsys):
        missing = tmp_path / "nope.json"
        code = run_cli("simulate", "--config", str(missing), "--out", str(tmp_path / "s.json"))
        assert code == 2
        assert str(missing) in capsys.readouterr().err

    def test_live_mode_without_key_fails_fast(self, tmp_path, config_file, monkeypatch, capsys):
        monkeypatch.delenv("POLARSIM_API_KEY", raising=False)
        out = tmp_path / "snap.json"
        code = run_cli(
            "simulate", "--config", str(config_file), "--mode", "live", "--out", str(out)
        )
        assert code == 3
        assert not out.exists()

    def test_seed_override_changes_output(self, tmp_path, config_file):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run_cli("simulate", "--config", str(config_file), "--out", str(a)) == 0
        assert (
            run_cli("simulate", "--config", str(config_file), "--seed", "99", "--out", str(b))
            == 0
        )
        assert a.read_bytes() != b.read_bytes()

    def test_idempotent_given_same_inputs(self, tmp_path, config_file):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run_cli("simulate", "--config", str(config_file), "--out", str(a))
        run_cli("simulate", "--config", str(config_file), "--out", str(b))
        assert a.read_bytes() == b.read_bytes()


class TestPrepareConditions:
    def test_six_snapshots_plus_reports(self, tmp_path, config_file):
        out_dir = tmp_path / "cells"
        code = run_cli(
            "prepare-conditions",
            "--snapshot-dir",
            str(out_dir),
            "--config-polarized",
            str(config_file),
            "--config-moderate",
            str(config_file),
            "--seed",
            "71",
        )
        assert code == 0
        snapshots = sorted(p.name for p in out_dir.glob("condition_*.json"))
        assert len(snapshots) == 6
        assert (out_dir / "stats_polarized.csv").exists()
        assert (out_dir / "stats_polarized.png").exists()
        assert (out_dir / "manifest.json").exists()

    def test_rerun_identical(self, tmp_path, config_file):
        dirs = [tmp_path / "one", tmp_path / "two"]
        for d in dirs:
            assert (
                run_cli(
                    "prepare-conditions",
                    "--snapshot-dir",
                    str(d),
                    "--config-polarized",
                    str(config_file),
                    "--config-moderate",
                    str(config_file),
                    "--seed",
                    "72",
                )
                == 0
            )
        for name in [p.name for p in dirs[0].glob("condition_*.json")]:
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()

    def test_invalid_config_no_partial_manifest(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"simulation": {"n_regular": -5}}))
        out_dir = tmp_path / "cells"
        code = run_cli(
            "prepare-conditions",
            "--snapshot-dir",
            str(out_dir),
            "--config-polarized",
            str(bad),
        )
        assert code == 2
        assert not (out_dir / "manifest.json").exists()


class TestExportCurve:
    def test_grid_covers_endpoints(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert run_cli("export-curve", "--out", str(out)) == 0
        rows = list(csv.DictReader(out.open()))
        like_rows = [r for r in rows if r["interaction_type"] == "like" and r["o_m"] == "1"]
        o_is = [float(r["o_i"]) for r in like_rows]
        assert min(o_is) == -1.0 and max(o_is) == 1.0
        assert len(like_rows) == 201
        assert out.with_suffix(".png").exists()

    def test_like_curve_monotone_in_distance(self, tmp_path):
        out = tmp_path / "curve.csv"
        run_cli("export-curve", "--out", str(out))
        rows = list(csv.DictReader(out.open()))
        like = sorted(
            (
                (abs(float(r["o_i"]) - 1.0), float(r["probability"]))
                for r in rows
                if r["interaction_type"] == "like" and r["o_m"] == "1"
            ),
        )
        probs = [p for _, p in like]
        assert all(a >= b for a, b in zip(probs, probs[1:]))

    def test_figure_skippable(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert run_cli("export-curve", "--out", str(out), "--no-figure") == 0
        assert not out.with_suffix(".png").exists()

    def test_like_row_at_aligned_extreme(self, tmp_path):
        out = tmp_path / "curve.csv"
        run_cli("export-curve", "--out", str(out))
        rows = [
            r
            for r in csv.DictReader(out.open())
            if r["interaction_type"] == "like" and float(r["o_m"]) == 0.8
        ]
        closest = min(rows, key=lambda r: abs(float(r["o_i"]) - 0.8))
        assert float(closest["probability"]) == pytest.approx(0.62970, abs=1e-4)


class TestServe:
    def test_missing_snapshot_dir_exits_2(self, tmp_path, capsys):
        missing = tmp_path / "no-snapshots"
        code = run_cli("serve", "--snapshot-dir", str(missing), "--port", "0")
        assert code == 2
        assert str(missing) in capsys.readouterr().err

    def test_bad_feed_weights_exit_2(self, tmp_path, capsys):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"feed_weights": {"popularity": 0.9, "ideology": 0.9, "noise": 0.9}}))
        code = run_cli(
            "serve", "--snapshot-dir", str(tmp_path), "--config", str(config), "--port", "0"
        )
        assert code == 2
        assert "feed_weights" in capsys.readouterr().err

    def test_serves_and_shuts_down_cleanly(self, tmp_path, config_file):
        import signal
        import socket
        import subprocess
        import sys
        import time

        import httpx

        out_dir = tmp_path / "cells"
        assert (
            run_cli(
                "prepare-conditions",
                "--snapshot-dir",
                str(out_dir),
                "--config-polarized",
                str(config_file),
                "--config-moderate",
                str(config_file),
            )
            == 0
        )
        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            port = probe.getsockname()[1]
        proc = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "polarsim.cli",
                "serve",
                "--snapshot-dir",
                str(out_dir),
                "--port",
                str(port),
            ],
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
        )
        try:
            deadline = time.time() + 15
            session_id = None
            while time.time() < deadline:
                try:
                    response = httpx.post(
                        f"http://127.0.0.1:{port}/sessions",
                        json={"condition": {"polarization": "polarized", "bias": "pro"}},
                        timeout=2.0,
                    )
                    assert response.status_code == 200
                    session_id = response.json()["session_id"]
                    break
                except httpx.HTTPError:
                    time.sleep(0.2)
            assert session_id, "server never came up"
            feed = httpx.get(
                f"http://127.0.0.1:{port}/sessions/{session_id}/feed", timeout=2.0
            )
            assert feed.status_code == 200
            proc.send_signal(signal.SIGTERM)
            assert proc.wait(timeout=10) == 0
            log_file = out_dir / "session_logs" / f"{session_id}.jsonl"
            assert log_file.exists()
            assert log_file.read_text().strip(), "events were not flushed"
        finally:
            if proc.poll() is None:
                proc.kill()


class TestWriteConfig:
    def test_defaults_prefilled(self, tmp_path):
        out = tmp_path / "config.json"
        assert run_cli("write-config", "--out", str(out)) == 0
        doc = json.loads(out.read_text())
        sim = doc["simulation"]
        assert sim["n_regular"] == 24
        assert sim["n_iterations"] == 10
        assert sim["n_recs"] == 8
        assert sim["posting"] == {"regular_prob": 0.2, "influencer_prob": 0.6}
        assert sim["reaction_like"]["base_prob"] == 0.7
        assert sim["reaction_comment"]["cross_ideology"] == 0.5
        assert sim["connection"]["unfollow_prob"] == 0.05
        assert doc["feed_weights"] == {"popularity": 0.6, "ideology": 0.2, "noise": 0.2}
        assert doc["gateway"]["mode"] == "stub"

    def test_round_trips_through_simulate(self, tmp_path):
        config_path = tmp_path / "config.json"
        run_cli("write-config", "--out", str(config_path), "--polarization", "moderate")
        doc = json.loads(config_path.read_text())
        doc["simulation"]["n_iterations"] = 1
        config_path.write_text(json.dumps(doc))
        out = tmp_path / "snap.json"
        assert run_cli("simulate", "--config", str(config_path), "--out", str(out)) == 0
        assert load_snapshot(out).state.iteration == 1
