"""Snapshot, event-log, manifest, and CSV file formats."""

import csv
import json

import pytest

from polarsim.engine import SimulationConfig, compute_stats, run
from polarsim.gateway import Gateway
from polarsim.model import ActionKind, SessionEvent, dumps_canonical
from polarsim.storage import (
    EventLogWriter,
    RunManifest,
    load_event_log,
    load_snapshot,
    save_event_log,
    save_snapshot,
    write_curve_csv,
    write_manifest,
    write_stats_csv,
)


@pytest.fixture(scope="module")
def finished_run():
    config = SimulationConfig.polarized(seed=41, n_iterations=3)
    return config, run(config, Gateway())


class TestSnapshot:
    def test_round_trip_identity(self, finished_run, tmp_path):
        config, state = finished_run
        path = tmp_path / "snap.json"
        save_snapshot(path, config, state)
        loaded = load_snapshot(path)
        assert dumps_canonical(loaded.state.to_dict()) == dumps_canonical(state.to_dict())
        assert loaded.config.to_dict() == config.to_dict()

    def test_byte_identical_for_same_seed(self, finished_run, tmp_path):
        config, state = finished_run
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_snapshot(a, config, state)
        save_snapshot(b, config, run(config, Gateway()))
        assert a.read_bytes() == b.read_bytes()

    def test_condition_tag_preserved(self, finished_run, tmp_path):
        config, state = finished_run
        path = tmp_path / "tagged.json"
        save_snapshot(path, config, state, condition={"polarization": "polarized", "bias": "pro"})
        assert load_snapshot(path).condition == {"polarization": "polarized", "bias": "pro"}

    def test_unknown_version_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"format_version": 99}))
        with pytest.raises(ValueError):
            load_snapshot(path)


class TestEventLog:
    def test_round_trip(self, finished_run, tmp_path):
        _, state = finished_run
        path = tmp_path / "events.jsonl"
        save_event_log(path, state.events)
        assert load_event_log(path) == state.events

    def test_incremental_writer_matches_batch(self, tmp_path):
        events = [
            SessionEvent(1, 0, ActionKind.CREATE_POST, 1, "text", 1),
            SessionEvent(2, 1, ActionKind.LIKE, 1, None, 1),
        ]
        batch, incremental = tmp_path / "batch.jsonl", tmp_path / "inc.jsonl"
        save_event_log(batch, events)
        writer = EventLogWriter(incremental)
        for ev in events:
            writer.append(ev)
        writer.close()
        assert batch.read_bytes() == incremental.read_bytes()


class TestManifest:
    def test_written_with_timestamp(self, tmp_path):
        path = tmp_path / "run.manifest.json"
        write_manifest(path, RunManifest("simulate", 7, "stub", None, ["out.json"]))
        doc = json.loads(path.read_text())
        assert doc["command"] == "simulate"
        assert doc["created_at"]
        assert doc["outputs"] == ["out.json"]


class TestCsv:
    def test_stats_table_shape(self, finished_run, tmp_path):
        _, state = finished_run
        path = tmp_path / "stats.csv"
        write_stats_csv(path, compute_stats(state), condition="polarized")
        rows = list(csv.reader(path.open()))
        assert rows[0] == [
            "condition",
            "user_type",
            "avg_followers",
            "avg_followees",
            "avg_posts",
            "avg_likes",
            "avg_comments",
            "avg_reposts",
        ]
        assert [r[1] for r in rows[1:]] == ["overall", "influencers", "regular"]

    def test_curve_rows_format(self, tmp_path):
        path = tmp_path / "curve.csv"
        write_curve_csv(path, [(-1.0, 1.0, "like", 0.25)])
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["o_i", "o_m", "interaction_type", "probability"]
        assert rows[1] == ["-1", "1", "like", "0.25"]
