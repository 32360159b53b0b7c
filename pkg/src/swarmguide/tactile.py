"""Formation-state classification and vibrotactile guidance patterns.

The classifier watches the swarm's shape (polygon area and every pairwise
distance) against the formation's defaults and labels it Contracted, Regular,
or Extended with hysteresis. The lateral drift of the swarm's centroid
relative to the motion direction picks the guidance side, and the selector
turns (label, side) into one of the timed five-finger patterns, respecting
playback and cooldown windows so patterns never overlap.

Fingers are numbered 1..5, thumb to little finger, right hand viewed from the
back. Frame levels are vibration frequencies in Hz; 0 means off.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .formation import FormationSpec, polygon_area

CLASSIFIER_THRESHOLD = 0.10  # enter Extended/Contracted beyond +-10%
CLASSIFIER_EXIT_MARGIN = 0.02  # leave again only once back within +-8%
DIRECTION_EPSILON = 0.05  # m/s; below this the motion direction holds
DISPLACEMENT_DEAD_BAND = 0.05  # m
PATTERN_COOLDOWN_MS = 300.0

LOW, MID, HIGH = 150, 200, 250
FREQUENCY_LEVELS = (0, LOW, MID, HIGH)
FRAME_DURATIONS_MS = (200, 300)


class FormationLabel(enum.Enum):
    CONTRACTED = "Contracted"
    REGULAR = "Regular"
    EXTENDED = "Extended"


@dataclass(frozen=True)
class StateReading:
    """Classifier output: the label plus the measurements behind it."""

    label: FormationLabel
    area: float
    area_ratio: float
    pair_ratios: dict

    @property
    def max_ratio(self) -> float:
        return max([self.area_ratio, *self.pair_ratios.values()])

    @property
    def min_ratio(self) -> float:
        return min([self.area_ratio, *self.pair_ratios.values()])


class FormationClassifier:
    """Stateful shape classifier with an enter/exit hysteresis band.

    A shape ratio (area or any pair distance, relative to the formation
    default) beyond +-theta flips the label; the label only reverts once
    every ratio is back inside +-(theta - exit_margin), so jitter around
    the threshold cannot chatter.
    """

    def __init__(self, spec: FormationSpec, theta: float = CLASSIFIER_THRESHOLD,
                 exit_margin: float = CLASSIFIER_EXIT_MARGIN):
        if not 0.0 < theta < 1.0:
            raise ValueError(f"threshold must be in (0, 1), got {theta}")
        if not 0.0 <= exit_margin < theta:
            raise ValueError(f"exit margin must be in [0, theta), got {exit_margin}")
        if spec.n_drones < 2:
            raise ValueError("classification needs at least two drones")
        self.theta = theta
        self.exit_margin = exit_margin
        self.spec = spec
        self.default_distances = spec.default_pair_distances()
        for pair, d in self.default_distances.items():
            if d <= 1e-9:
                raise ValueError(f"default distance for pair {pair} is degenerate")
        self.use_area = spec.n_drones >= 3
        self.default_area = spec.default_area() if self.use_area else 0.0
        if self.use_area and self.default_area <= 1e-9:
            raise ValueError("default formation area is degenerate (zero)")
        self.label = FormationLabel.REGULAR

    def reset(self):
        self.label = FormationLabel.REGULAR

    def measure(self, positions: np.ndarray) -> tuple[float, float, dict]:
        positions = np.asarray(positions, dtype=float)
        pair_ratios = {}
        for (i, j), d0 in self.default_distances.items():
            pair_ratios[(i, j)] = float(np.linalg.norm(positions[i] - positions[j])) / d0
        if self.use_area:
            area = polygon_area(positions[self.spec.vertex_order(), :2])
            area_ratio = area / self.default_area
        else:
            area, area_ratio = 0.0, 1.0
        return area, area_ratio, pair_ratios

    def classify(self, positions: np.ndarray) -> StateReading:
        area, area_ratio, pair_ratios = self.measure(positions)
        ratios = [area_ratio, *pair_ratios.values()]
        hi = max(ratios)
        lo = min(ratios)
        enter_hi = 1.0 + self.theta
        enter_lo = 1.0 - self.theta
        exit_hi = 1.0 + self.theta - self.exit_margin
        exit_lo = 1.0 - self.theta + self.exit_margin

        label = self.label
        if label is FormationLabel.EXTENDED:
            if hi <= exit_hi:
                label = FormationLabel.CONTRACTED if lo < enter_lo else FormationLabel.REGULAR
        elif label is FormationLabel.CONTRACTED:
            if lo >= exit_lo:
                label = FormationLabel.EXTENDED if hi > enter_hi else FormationLabel.REGULAR
        else:
            stretched = hi > enter_hi
            squeezed = lo < enter_lo
            if stretched and squeezed:
                # both rules fire at once: the larger relative deviation wins
                label = FormationLabel.EXTENDED if (hi - 1.0) > (1.0 - lo) else FormationLabel.CONTRACTED
            elif stretched:
                label = FormationLabel.EXTENDED
            elif squeezed:
                label = FormationLabel.CONTRACTED
        self.label = label
        return StateReading(label=label, area=area, area_ratio=area_ratio, pair_ratios=pair_ratios)


# ---------------------------------------------------------------------------
# centroid displacement and motion direction


class DirectionTracker:
    """Keeps the last planar motion direction seen above the speed floor."""

    def __init__(self, epsilon: float = DIRECTION_EPSILON):
        self.epsilon = epsilon
        self.direction: Optional[np.ndarray] = None

    def reset(self):
        self.direction = None

    def update(self, velocity) -> Optional[np.ndarray]:
        v = np.asarray(velocity, dtype=float)[:2]
        speed = float(np.linalg.norm(v))
        if speed > self.epsilon:
            self.direction = v / speed
        return self.direction


def com_displacement(positions: np.ndarray, reference_centroid, motion_direction) -> float:
    """Signed lateral offset of the swarm centroid; positive means right.

    With z up and the motion direction ahead, a centroid to the operator's
    right (clockwise from the direction) comes out positive.
    """
    positions = np.asarray(positions, dtype=float)
    u = np.asarray(motion_direction, dtype=float)[:2]
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        raise ValueError("motion direction must be nonzero")
    u = u / norm
    centroid = positions[:, :2].mean(axis=0)
    d = centroid - np.asarray(reference_centroid, dtype=float)[:2]
    return float(d[0] * u[1] - d[1] * u[0])


# ---------------------------------------------------------------------------
# pattern timelines


@dataclass(frozen=True)
class PatternFrame:
    """Five finger frequencies [Hz] held for a fixed duration."""

    levels: tuple[int, int, int, int, int]
    duration_ms: int


@dataclass(frozen=True)
class TactilePattern:
    id: str
    frames: tuple[PatternFrame, ...]

    @property
    def total_duration_ms(self) -> int:
        return sum(f.duration_ms for f in self.frames)

    def levels_at(self, elapsed_ms: float) -> tuple[int, int, int, int, int]:
        """Finger levels at a time offset; all zeros outside the timeline."""
        if elapsed_ms < 0.0:
            return (0, 0, 0, 0, 0)
        t = 0.0
        for frame in self.frames:
            t += frame.duration_ms
            if elapsed_ms < t:
                return frame.levels
        return (0, 0, 0, 0, 0)

    @staticmethod
    def empty() -> "TactilePattern":
        return TactilePattern("NONE", ())


def _frame(duration_ms: int, **fingers: int) -> PatternFrame:
    levels = [0, 0, 0, 0, 0]
    for name, freq in fingers.items():
        levels[int(name[1]) - 1] = freq
    return PatternFrame(tuple(levels), duration_ms)


def _reversed_pattern(pattern_id: str, base: TactilePattern) -> TactilePattern:
    return TactilePattern(pattern_id, tuple(reversed(base.frames)))


def _build_library() -> dict:
    ei = TactilePattern("EI", (
        _frame(200, f3=LOW),
        _frame(200, f2=MID, f4=MID),
        _frame(300, f1=HIGH, f5=HIGH),
    ))
    ri = TactilePattern("RI", (
        _frame(200, f3=MID),
        _frame(200, f2=MID, f4=MID),
        _frame(200, f1=MID, f5=MID),
    ))
    ci = TactilePattern("CI", (
        _frame(300, f3=HIGH),
        _frame(200, f2=MID, f4=MID),
        _frame(200, f1=LOW, f5=LOW),
    ))
    r = TactilePattern("R", tuple(_frame(200, **{f"f{i}": MID}) for i in range(1, 6)))
    cr = TactilePattern("CR", (
        _frame(200, f2=MID),
        _frame(200, f3=MID),
        _frame(200, f4=MID),
    ))
    library = {
        "EI": ei,
        "ED": _reversed_pattern("ED", ei),
        "RI": ri,
        "RD": _reversed_pattern("RD", ri),
        "CI": ci,
        "CD": _reversed_pattern("CD", ci),
        "R": r,
        "L": _reversed_pattern("L", r),
        "CR": cr,
        "CL": _reversed_pattern("CL", cr),
        "ER": TactilePattern("ER", (_frame(300, f5=HIGH),)),
        "EL": TactilePattern("EL", (_frame(300, f1=HIGH),)),
    }
    return library


PATTERN_LIBRARY = _build_library()
PATTERN_IDS = tuple(PATTERN_LIBRARY)


def encode_pattern(pattern_id: str) -> TactilePattern:
    """Looks up the fixed timeline for a pattern id."""
    try:
        return PATTERN_LIBRARY[pattern_id]
    except KeyError:
        raise ValueError(f"unknown pattern id {pattern_id!r}") from None


def pattern_to_json(pattern: TactilePattern) -> str:
    doc = {
        "id": pattern.id,
        "total_duration_ms": pattern.total_duration_ms,
        "frames": [{"levels": list(f.levels), "duration_ms": f.duration_ms} for f in pattern.frames],
    }
    return json.dumps(doc, separators=(",", ":"), sort_keys=True)


def pattern_from_json(text: str) -> TactilePattern:
    doc = json.loads(text)
    frames = tuple(PatternFrame(tuple(f["levels"]), f["duration_ms"]) for f in doc["frames"])
    return TactilePattern(doc["id"], frames)


def pattern_to_device_lines(pattern: TactilePattern) -> list[str]:
    """Line-based actuator format: one 'finger,frequency,duration_ms' line per
    active finger, frames in playback order, fingers ascending within a frame.
    """
    lines = []
    for frame in pattern.frames:
        for finger, freq in enumerate(frame.levels, start=1):
            if freq:
                lines.append(f"{finger},{freq},{frame.duration_ms}")
    return lines


# ---------------------------------------------------------------------------
# pattern selection


@dataclass(frozen=True)
class SelectorConfig:
    dead_band: float = DISPLACEMENT_DEAD_BAND
    cooldown_ms: float = PATTERN_COOLDOWN_MS


@dataclass(frozen=True)
class PatternEvent:
    pattern_id: str
    start_tick: int
    end_tick: int  # exclusive; playback covers [start_tick, end_tick)
    label: FormationLabel
    displacement_sign: float


GUIDANCE_TABLE = {
    # squeezed: steer along the displacement; stretched: steer against it
    (FormationLabel.CONTRACTED, 1.0): "CR",
    (FormationLabel.CONTRACTED, -1.0): "CL",
    (FormationLabel.EXTENDED, 1.0): "EL",
    (FormationLabel.EXTENDED, -1.0): "ER",
}


class PatternSelector:
    """Turns (state label, lateral displacement) into non-overlapping events.

    One pattern plays at a time; after it ends a cooldown must elapse before
    the next may start. Small displacements inside the dead band reuse the
    last decisive sign; with no decisive sign on record no side can be
    recommended and nothing fires.
    """

    def __init__(self, sample_time: float, config: SelectorConfig = SelectorConfig()):
        if sample_time <= 0.0:
            raise ValueError(f"sample time must be > 0, got {sample_time}")
        self.sample_time = sample_time
        self.config = config
        self._blocked_until = 0  # first tick allowed to start a new pattern
        self._last_sign = 0.0

    def reset(self):
        self._blocked_until = 0
        self._last_sign = 0.0

    def _ms_to_ticks(self, ms: float) -> int:
        return int(math.ceil(ms / 1000.0 / self.sample_time))

    def update(self, tick: int, label: FormationLabel,
               displacement: Optional[float]) -> Optional[PatternEvent]:
        if displacement is not None and abs(displacement) >= self.config.dead_band:
            self._last_sign = math.copysign(1.0, displacement)
        if tick < self._blocked_until or label is FormationLabel.REGULAR:
            return None
        if displacement is not None and abs(displacement) >= self.config.dead_band:
            sign = math.copysign(1.0, displacement)
        else:
            sign = self._last_sign
        if sign == 0.0:
            return None
        pattern = encode_pattern(GUIDANCE_TABLE[(label, sign)])
        end_tick = tick + self._ms_to_ticks(pattern.total_duration_ms)
        self._blocked_until = end_tick + self._ms_to_ticks(self.config.cooldown_ms)
        return PatternEvent(
            pattern_id=pattern.id,
            start_tick=tick,
            end_tick=end_tick,
            label=label,
            displacement_sign=sign,
        )
