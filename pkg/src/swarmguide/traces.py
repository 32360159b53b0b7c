"""Trace logging and replay formats.

A run produces two artifacts: a CSV of per-tick rows (the physics record)
and a JSONL stream of events (patterns, collisions, markers). Floats are
written with repr() so a value survives the round trip bit-exactly, which is
what makes "same inputs, same trace file" a byte-level guarantee.

Hand motion uses a separate minimal CSV (t, x, y, z) recorded at any rate;
replay resamples it to the sim rate by linear interpolation.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

TRACE_FORMAT = "swarmguide-trace"
TRACE_VERSION = 1


@dataclass
class TraceHeader:
    scenario_hash: str
    sample_time: float
    n_drones: int
    n_links: int
    default_area: float
    vertex_order: list
    meta: dict = field(default_factory=dict)


@dataclass
class TraceRow:
    tick: int
    t: float
    hand: np.ndarray  # (3,)
    hand_velocity: np.ndarray  # (3,)
    goals: np.ndarray  # (n_drones, 3)
    positions: np.ndarray  # (n_drones, 3)
    corrections: np.ndarray  # (n_links, 3)
    label: str
    displacement: float  # nan while no motion direction has been seen
    pattern_id: str  # "" when the glove is silent


@dataclass
class TraceEvent:
    tick: int
    t: float
    kind: str  # pattern_start | pattern_end | collision | separation | state_change | marker
    data: dict = field(default_factory=dict)


class TraceLog:
    def __init__(self, header: TraceHeader):
        self.header = header
        self.rows: list[TraceRow] = []
        self.events: list[TraceEvent] = []

    def append(self, row: TraceRow):
        if self.rows and row.tick <= self.rows[-1].tick:
            raise ValueError(f"trace rows must be strictly ordered by tick, got {row.tick} after {self.rows[-1].tick}")
        self.rows.append(row)

    def add_event(self, event: TraceEvent):
        self.events.append(event)

    def centroids(self) -> np.ndarray:
        return np.array([row.positions.mean(axis=0) for row in self.rows])

    def times(self) -> np.ndarray:
        return np.array([row.t for row in self.rows])

    def pattern_starts(self) -> list[TraceEvent]:
        return [e for e in self.events if e.kind == "pattern_start"]

    @staticmethod
    def from_arrays(times: Sequence[float], positions: np.ndarray, default_area: float,
                    vertex_order: Sequence[int], sample_time: Optional[float] = None,
                    displacement: Optional[Sequence[float]] = None,
                    scenario_hash: str = "synthetic") -> "TraceLog":
        """Builds a minimal log from raw arrays; handy for analysis fixtures."""
        times = np.asarray(times, dtype=float)
        positions = np.asarray(positions, dtype=float)
        if positions.ndim != 3:
            raise ValueError("positions must have shape (n_rows, n_drones, 3)")
        if sample_time is None:
            sample_time = float(times[1] - times[0]) if len(times) > 1 else 1.0 / 60.0
        header = TraceHeader(
            scenario_hash=scenario_hash,
            sample_time=sample_time,
            n_drones=positions.shape[1],
            n_links=0,
            default_area=default_area,
            vertex_order=list(vertex_order),
        )
        log = TraceLog(header)
        for k, t in enumerate(times):
            disp = float(displacement[k]) if displacement is not None else math.nan
            log.append(TraceRow(
                tick=k,
                t=float(t),
                hand=np.zeros(3),
                hand_velocity=np.zeros(3),
                goals=positions[k].copy(),
                positions=positions[k].copy(),
                corrections=np.zeros((0, 3)),
                label="Regular",
                displacement=disp,
                pattern_id="",
            ))
        return log


# ---------------------------------------------------------------------------
# CSV row format


def _columns(n_drones: int, n_links: int) -> list[str]:
    cols = ["tick", "t", "hand_x", "hand_y", "hand_z", "hand_vx", "hand_vy", "hand_vz"]
    for i in range(n_drones):
        cols += [f"d{i}_gx", f"d{i}_gy", f"d{i}_gz", f"d{i}_x", f"d{i}_y", f"d{i}_z"]
    for j in range(n_links):
        cols += [f"l{j}_cx", f"l{j}_cy", f"l{j}_cz"]
    cols += ["label", "displacement", "pattern"]
    return cols


def _row_values(row: TraceRow) -> list[str]:
    vals = [str(row.tick), repr(row.t)]
    vals += [repr(float(v)) for v in row.hand] + [repr(float(v)) for v in row.hand_velocity]
    for goal, pos in zip(row.goals, row.positions):
        vals += [repr(float(v)) for v in goal] + [repr(float(v)) for v in pos]
    for corr in row.corrections:
        vals += [repr(float(v)) for v in corr]
    vals += [row.label, repr(float(row.displacement)), row.pattern_id]
    return vals


def trace_csv_text(log: TraceLog) -> str:
    """Renders the whole per-tick record, header comments included."""
    h = log.header
    out = io.StringIO()
    out.write(f"# {TRACE_FORMAT} v{TRACE_VERSION}\n")
    out.write(f"# scenario_hash={h.scenario_hash}\n")
    out.write(f"# sample_time={repr(h.sample_time)}\n")
    out.write(f"# n_drones={h.n_drones}\n")
    out.write(f"# n_links={h.n_links}\n")
    out.write(f"# default_area={repr(h.default_area)}\n")
    out.write(f"# vertex_order={json.dumps(h.vertex_order, separators=(',', ':'))}\n")
    out.write(f"# meta={json.dumps(h.meta, sort_keys=True, separators=(',', ':'))}\n")
    out.write(",".join(_columns(h.n_drones, h.n_links)) + "\n")
    for row in log.rows:
        out.write(",".join(_row_values(row)) + "\n")
    return out.getvalue()


def write_trace_csv(log: TraceLog, path: str):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(trace_csv_text(log))


def read_trace_csv(path: str) -> TraceLog:
    with open(path, "r", encoding="utf-8") as f:
        return parse_trace_csv(f.read())


def parse_trace_csv(text: str) -> TraceLog:
    meta: dict[str, str] = {}
    lines = text.splitlines()
    idx = 0
    while idx < len(lines) and lines[idx].startswith("#"):
        body = lines[idx][1:].strip()
        if "=" in body:
            key, value = body.split("=", 1)
            meta[key.strip()] = value.strip()
        idx += 1
    required = ("scenario_hash", "sample_time", "n_drones", "n_links", "default_area", "vertex_order")
    missing = [k for k in required if k not in meta]
    if missing:
        raise ValueError(f"trace header missing fields: {', '.join(missing)}")
    header = TraceHeader(
        scenario_hash=meta["scenario_hash"],
        sample_time=float(meta["sample_time"]),
        n_drones=int(meta["n_drones"]),
        n_links=int(meta["n_links"]),
        default_area=float(meta["default_area"]),
        vertex_order=json.loads(meta["vertex_order"]),
        meta=json.loads(meta.get("meta", "{}")),
    )
    expected_cols = _columns(header.n_drones, header.n_links)
    if idx >= len(lines) or lines[idx].split(",") != expected_cols:
        raise ValueError("trace column header does not match the declared drone/link counts")
    idx += 1
    log = TraceLog(header)
    n, m = header.n_drones, header.n_links
    for line in lines[idx:]:
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(expected_cols):
            raise ValueError(f"trace row has {len(parts)} fields, expected {len(expected_cols)}")
        vals = parts
        goals = np.empty((n, 3))
        positions = np.empty((n, 3))
        for i in range(n):
            base = 8 + 6 * i
            goals[i] = [float(v) for v in vals[base:base + 3]]
            positions[i] = [float(v) for v in vals[base + 3:base + 6]]
        corrections = np.empty((m, 3))
        for j in range(m):
            base = 8 + 6 * n + 3 * j
            corrections[j] = [float(v) for v in vals[base:base + 3]]
        log.append(TraceRow(
            tick=int(vals[0]),
            t=float(vals[1]),
            hand=np.array([float(v) for v in vals[2:5]]),
            hand_velocity=np.array([float(v) for v in vals[5:8]]),
            goals=goals,
            positions=positions,
            corrections=corrections,
            label=vals[-3],
            displacement=float(vals[-2]),
            pattern_id=vals[-1],
        ))
    return log


# ---------------------------------------------------------------------------
# JSONL events


def events_jsonl_text(log: TraceLog) -> str:
    lines = []
    for e in log.events:
        doc = {"tick": e.tick, "t": e.t, "kind": e.kind, **e.data}
        lines.append(json.dumps(doc, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + ("\n" if lines else "")


def write_events_jsonl(log: TraceLog, path: str):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(events_jsonl_text(log))


def read_events_jsonl(path: str) -> list[TraceEvent]:
    events = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            events.append(TraceEvent(
                tick=doc.pop("tick"),
                t=doc.pop("t"),
                kind=doc.pop("kind"),
                data=doc,
            ))
    return events


# ---------------------------------------------------------------------------
# hand traces


def write_hand_trace(samples: Iterable[tuple[float, Sequence[float]]], path: str):
    """Writes (t, position) samples as a minimal t,x,y,z CSV."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("t,x,y,z\n")
        for t, pos in samples:
            pos = np.asarray(pos, dtype=float)
            f.write(f"{repr(float(t))},{repr(float(pos[0]))},{repr(float(pos[1]))},{repr(float(pos[2]))}\n")


def read_hand_trace(path: str) -> list[tuple[float, np.ndarray]]:
    samples: list[tuple[float, np.ndarray]] = []
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline().strip()
        if first and first != "t,x,y,z":
            raise ValueError(f"hand trace must start with 't,x,y,z' header, got {first!r}")
        for line in f:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ValueError(f"hand trace row needs 4 fields, got {len(parts)}")
            t = float(parts[0])
            if samples and t <= samples[-1][0]:
                raise ValueError(f"hand trace timestamps must strictly increase, got {t} after {samples[-1][0]}")
            samples.append((t, np.array([float(parts[1]), float(parts[2]), float(parts[3])])))
    return samples


def resample_hand_trace(samples: Sequence[tuple[float, np.ndarray]], sample_time: float,
                        n_ticks: int, start: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
    """Linear interpolation of a recorded hand path onto the sim tick grid.

    Before the first sample the hand holds the scenario start pose; after the
    last it holds the final recorded pose. An empty recording holds the start
    pose for the whole run.
    """
    grid = np.arange(n_ticks) * sample_time
    if not samples:
        return np.tile(np.asarray(start, dtype=float), (n_ticks, 1))
    ts = np.array([t for t, _ in samples])
    ps = np.array([p for _, p in samples])
    out = np.empty((n_ticks, 3))
    for axis in range(3):
        out[:, axis] = np.interp(grid, ts, ps[:, axis])
    out[grid < ts[0]] = np.asarray(start, dtype=float)
    return out
