"""Run analysis: fleet-performance quantities and the reaction-correctness curve.

The seven run metrics (centroid path length, mean velocity, mean absolute
acceleration, mean absolute jerk, and area error mean/std/max) describe how
smoothly the swarm moved and how well it held its shape. They are measurement
pipeline only: published values for these quantities depend on the human
operator and are not reproduction targets.

Differentiation happens on a 5-sample moving-average of the centroid
(documented in the report header); the average pads the boundary by linear
extrapolation so straight-line motion differentiates exactly. The path length
uses the raw centroid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from typing import Optional, Sequence

import numpy as np

from .formation import polygon_area
from .traces import TraceEvent, TraceLog

SMOOTHING_WINDOW = 5
REACTION_HORIZON_MS = 3300.0
REACTION_BIN_MS = 300.0

SMOOTHING_NOTE = (
    f"velocity/acceleration/jerk from successive finite differences of a "
    f"{SMOOTHING_WINDOW}-sample moving-average centroid (linear-extrapolation padding, "
    f"padding-contaminated boundary samples excluded from the means); "
    f"path length from the raw centroid"
)
VALUES_NOTE = (
    "measurement pipeline only: published fleet-performance values are "
    "operator-dependent outcomes, not targets for this implementation"
)


@dataclass(frozen=True)
class RunMetrics:
    path_length: float
    mean_velocity: float
    mean_abs_acceleration: float
    mean_abs_jerk: float
    area_error_mean: float
    area_error_std: float
    area_error_max: float

    def to_json(self) -> str:
        doc = {
            "notes": {"smoothing": SMOOTHING_NOTE, "values": VALUES_NOTE},
            "metrics": asdict(self),
        }
        return json.dumps(doc, sort_keys=True, indent=2)


def moving_average(values: np.ndarray, window: int = SMOOTHING_WINDOW) -> np.ndarray:
    """Centered boxcar average with linear-extrapolation padding.

    Padding each end with the continuation of the boundary slope keeps
    perfectly linear data unchanged, so constant-velocity fixtures
    differentiate to their exact rates.
    """
    values = np.asarray(values, dtype=float)
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd number, got {window}")
    if window == 1 or len(values) < 3:
        return values.copy()
    half = window // 2
    front_steps = np.arange(-half, 0, dtype=float)
    back_steps = np.arange(1, half + 1, dtype=float)
    if values.ndim > 1:
        front_steps = front_steps.reshape(-1, 1)
        back_steps = back_steps.reshape(-1, 1)
    front = values[0] + front_steps * (values[1] - values[0])
    back = values[-1] + back_steps * (values[-1] - values[-2])
    padded = np.concatenate([front, values, back], axis=0)
    kernel = np.ones(window) / window
    if values.ndim == 1:
        return np.convolve(padded, kernel, mode="valid")
    out = np.empty_like(values)
    for col in range(values.shape[1]):
        out[:, col] = np.convolve(padded[:, col], kernel, mode="valid")
    return out


def _trimmed_mean_norm(vectors: np.ndarray, edge: int) -> float:
    """Mean vector magnitude, excluding `edge` boundary samples per side when
    enough interior remains; the padding only distorts those samples."""
    if len(vectors) == 0:
        return 0.0
    if len(vectors) > 2 * edge + 1:
        vectors = vectors[edge:-edge]
    return float(np.linalg.norm(vectors, axis=1).mean())


def compute_run_metrics(trace: TraceLog) -> RunMetrics:
    """All seven fleet-performance quantities from one per-tick trace."""
    if len(trace.rows) < 3:
        raise ValueError(f"need at least 3 trace rows, got {len(trace.rows)}")
    times = trace.times()
    centroid = trace.centroids()
    dt = np.diff(times)
    edge = SMOOTHING_WINDOW // 2 + 3

    steps = np.linalg.norm(np.diff(centroid, axis=0), axis=1)
    path_length = float(steps.sum())

    smooth = moving_average(centroid)
    velocity = np.diff(smooth, axis=0) / dt[:, None]
    mean_velocity = _trimmed_mean_norm(velocity, edge)

    if len(velocity) >= 2:
        acceleration = np.diff(velocity, axis=0) / dt[1:, None]
        mean_abs_acceleration = _trimmed_mean_norm(acceleration, edge)
    else:
        acceleration = np.zeros((0, 3))
        mean_abs_acceleration = 0.0
    if len(acceleration) >= 2:
        jerk = np.diff(acceleration, axis=0) / dt[2:, None]
        mean_abs_jerk = _trimmed_mean_norm(jerk, edge)
    else:
        mean_abs_jerk = 0.0

    area_errors = np.abs(trace_areas(trace) - trace.header.default_area)
    return RunMetrics(
        path_length=path_length,
        mean_velocity=mean_velocity,
        mean_abs_acceleration=mean_abs_acceleration,
        mean_abs_jerk=mean_abs_jerk,
        area_error_mean=float(area_errors.mean()),
        area_error_std=float(area_errors.std()),
        area_error_max=float(area_errors.max()),
    )


def trace_areas(trace: TraceLog) -> np.ndarray:
    order = trace.header.vertex_order or list(range(trace.header.n_drones))
    return np.array([polygon_area(row.positions[order, :2]) for row in trace.rows])


# ---------------------------------------------------------------------------
# reaction correctness


@dataclass(frozen=True)
class ReactionCurve:
    """Per-bin fraction of pattern events followed by a proper correction."""

    bin_end_ms: np.ndarray
    fraction: np.ndarray
    counted: np.ndarray  # events contributing to each bin
    n_events: int

    def to_csv(self) -> str:
        lines = ["bin_end_ms,fraction_correct,n_events"]
        for end, frac, n in zip(self.bin_end_ms, self.fraction, self.counted):
            lines.append(f"{repr(float(end))},{repr(float(frac))},{int(n)}")
        return "\n".join(lines) + "\n"


def reaction_correctness(trace: TraceLog, events: Optional[Sequence[TraceEvent]] = None,
                         horizon_ms: float = REACTION_HORIZON_MS,
                         bin_ms: float = REACTION_BIN_MS) -> ReactionCurve:
    """How often the operator corrected the swarm after each guidance pattern.

    For every pattern start and every time bin up to the horizon, the
    reaction counts as correct when, at the bin's end, the swarm's area has
    moved toward the default AND the lateral centroid displacement magnitude
    has shrunk, both relative to the moment the pattern fired. Events whose
    bin end runs past the trace contribute nothing to that bin.
    """
    if events is None:
        events = trace.pattern_starts()
    n_bins = int(math.ceil(horizon_ms / bin_ms))
    bin_end_ms = bin_ms * np.arange(1, n_bins + 1)
    if not events:
        return ReactionCurve(bin_end_ms=bin_end_ms, fraction=np.zeros(n_bins),
                             counted=np.zeros(n_bins, dtype=int), n_events=0)

    times = trace.times()
    areas = trace_areas(trace)
    area_err = np.abs(areas - trace.header.default_area)
    disp = np.array([abs(row.displacement) for row in trace.rows])

    correct = np.zeros(n_bins)
    counted = np.zeros(n_bins, dtype=int)
    for event in events:
        start_idx = int(np.searchsorted(times, event.t))
        if start_idx >= len(times):
            continue
        err0 = area_err[start_idx]
        disp0 = disp[start_idx]
        for b, end in enumerate(bin_end_ms):
            t_end = event.t + end / 1000.0
            if t_end > times[-1]:
                continue
            idx = int(np.searchsorted(times, t_end, side="right")) - 1
            counted[b] += 1
            if area_err[idx] < err0 and disp[idx] < disp0:
                correct[b] += 1
    fraction = np.divide(correct, counted, out=np.zeros(n_bins), where=counted > 0)
    return ReactionCurve(bin_end_ms=bin_end_ms, fraction=fraction, counted=counted,
                         n_events=len(events))
