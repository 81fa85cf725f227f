"""File formats: snapshots, run manifests, event logs, and stats CSV.

Snapshots and event logs are written with a canonical JSON encoding
(sorted keys, compact separators) so that identical seeds produce
byte-identical artifacts; manifests carry wall-clock timestamps and are
exempt from that guarantee. All writes go through a temp-file rename so
readers never observe partial files.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

from .engine import SNAPSHOT_FORMAT_VERSION, PlatformStats, SimulationConfig, SimulationState, STAT_COLUMNS
from .model import SessionEvent, dumps_canonical


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_snapshot(
    path: Path,
    config: SimulationConfig,
    state: SimulationState,
    condition: Optional[dict] = None,
) -> None:
    doc = {
        "format_version": SNAPSHOT_FORMAT_VERSION,
        "config": config.to_dict(),
        "seed": config.seed,
        "state": state.to_dict(),
    }
    if condition is not None:
        doc["condition"] = condition
    write_atomic(Path(path), dumps_canonical(doc) + "\n")


@dataclass
class Snapshot:
    config: SimulationConfig
    state: SimulationState
    condition: Optional[dict] = None
    format_version: int = SNAPSHOT_FORMAT_VERSION


def load_snapshot(path: Path) -> Snapshot:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != SNAPSHOT_FORMAT_VERSION:
        raise ValueError(f"unsupported snapshot format_version {version!r} in {path}")
    return Snapshot(
        config=SimulationConfig.from_dict(doc["config"]),
        state=SimulationState.from_dict(doc["state"]),
        condition=doc.get("condition"),
        format_version=version,
    )


def save_event_log(path: Path, events: Iterable[SessionEvent]) -> None:
    lines = "".join(dumps_canonical(e.to_dict()) + "\n" for e in events)
    write_atomic(Path(path), lines)


def load_event_log(path: Path) -> list[SessionEvent]:
    events: list[SessionEvent] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(SessionEvent.from_dict(json.loads(line)))
    return events


class EventLogWriter:
    """Append-only JSON-lines sink, one line per event, flushed per append."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, event: SessionEvent) -> None:
        self._fh.write(dumps_canonical(event.to_dict()) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()


MANIFEST_FORMAT_VERSION = 1


@dataclass
class RunManifest:
    """Operator breadcrumb written atomically alongside every artifact."""

    command: str
    seed: Optional[int]
    mode: str
    config_path: Optional[str]
    outputs: list[str] = field(default_factory=list)
    created_at: str = ""
    format_version: int = MANIFEST_FORMAT_VERSION

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "command": self.command,
            "seed": self.seed,
            "mode": self.mode,
            "config_path": self.config_path,
            "outputs": self.outputs,
            "created_at": self.created_at,
        }


def write_manifest(path: Path, manifest: RunManifest) -> None:
    if not manifest.created_at:
        manifest.created_at = datetime.now(timezone.utc).isoformat()
    write_atomic(Path(path), json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")


def write_stats_csv(path: Path, stats: PlatformStats, condition: Optional[str] = None) -> None:
    """Stats table with one row per user type, mirroring the platform report."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["condition", "user_type", *STAT_COLUMNS] if condition else ["user_type", *STAT_COLUMNS]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row_name in ("overall", "influencers", "regular"):
            row = stats.rows[row_name]
            cells = [f"{row[c]:.3f}" for c in STAT_COLUMNS]
            if condition:
                writer.writerow([condition, row_name, *cells])
            else:
                writer.writerow([row_name, *cells])


def write_curve_csv(path: Path, rows: Iterable[tuple[float, float, str, float]]) -> None:
    """Reaction-curve export: (o_i, o_m, interaction_type, probability) rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["o_i", "o_m", "interaction_type", "probability"])
        for o_i, o_m, kind, prob in rows:
            writer.writerow([f"{o_i:.10g}", f"{o_m:.10g}", kind, f"{prob:.12g}"])
