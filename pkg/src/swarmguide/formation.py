"""Formation geometry, impedance-link graph, and per-drone goal positions.

A formation is a set of geometric placement rules (each drone anchored to
the hand, another drone, or the midpoint of two drones, plus a fixed offset)
and a directed graph of impedance links rooted at the hand. The hand's
velocity forces every link; the links' displacements shift each drone's
goal away from its geometric slot, which produces the trailing, stretching
behavior of the formation under fast hand motion.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .impedance import (
    ImpedanceParams,
    ImpedanceState,
    SaturationLimits,
    discretize,
    external_force,
    make_impedance_params,
    saturate,
    step,
)

HAND = "hand"

DEFAULT_VELOCITY_GAIN = -7.0  # N*s/m; negative so drones retreat from the motion
DEFAULT_ESTIMATOR_WINDOW = 6
DEFAULT_ESTIMATOR_ALPHA = 0.5


class FormationSpecError(ValueError):
    """Raised for an invalid formation description; carries all violations."""

    def __init__(self, violations: Sequence[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


# ---------------------------------------------------------------------------
# hand velocity estimation


class HandVelocityEstimator:
    """Windowed backward difference with exponential smoothing.

    The raw estimate is the position difference across a sliding window of
    the newest samples; an exponential moving average with factor alpha
    suppresses sample jitter. Below two samples the estimate is zero and
    flagged cold.
    """

    def __init__(self, window: int = DEFAULT_ESTIMATOR_WINDOW, alpha: float = DEFAULT_ESTIMATOR_ALPHA):
        if window < 2:
            raise ValueError(f"estimator window must be >= 2, got {window}")
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"smoothing factor must be in (0, 1], got {alpha}")
        self.window = window
        self.alpha = alpha
        self._samples: deque = deque(maxlen=window)
        self.velocity = np.zeros(3)
        self.cold = True

    def reset(self):
        self._samples.clear()
        self.velocity = np.zeros(3)
        self.cold = True

    def ingest(self, t: float, position: np.ndarray) -> np.ndarray:
        position = np.asarray(position, dtype=float)
        if self._samples and t <= self._samples[-1][0]:
            raise ValueError(f"sample timestamps must strictly increase, got {t} after {self._samples[-1][0]}")
        self._samples.append((t, position.copy()))
        if len(self._samples) < 2:
            self.velocity = np.zeros(3)
            self.cold = True
            return self.velocity
        t0, p0 = self._samples[0]
        t1, p1 = self._samples[-1]
        raw = (p1 - p0) / (t1 - t0)
        self.velocity = self.alpha * raw + (1.0 - self.alpha) * self.velocity
        self.cold = False
        return self.velocity


def estimate_hand_velocity(
    history: Iterable[tuple[float, Sequence[float]]],
    window: int = DEFAULT_ESTIMATOR_WINDOW,
    alpha: float = DEFAULT_ESTIMATOR_ALPHA,
) -> tuple[np.ndarray, bool]:
    """Replay a timestamped position history; returns (velocity, cold)."""
    est = HandVelocityEstimator(window=window, alpha=alpha)
    for t, pos in history:
        est.ingest(t, np.asarray(pos, dtype=float))
    return est.velocity, est.cold


class HandState:
    """Current hand pose plus its velocity estimator."""

    def __init__(self, position=(0.0, 0.0, 0.0), window: int = DEFAULT_ESTIMATOR_WINDOW,
                 alpha: float = DEFAULT_ESTIMATOR_ALPHA):
        self.position = np.asarray(position, dtype=float)
        self.estimator = HandVelocityEstimator(window=window, alpha=alpha)

    @property
    def velocity(self) -> np.ndarray:
        return self.estimator.velocity

    @property
    def cold(self) -> bool:
        return self.estimator.cold

    def ingest(self, t: float, position: np.ndarray) -> np.ndarray:
        self.position = np.asarray(position, dtype=float)
        return self.estimator.ingest(t, self.position)


# ---------------------------------------------------------------------------
# formation description


@dataclass(frozen=True)
class Anchor:
    """Geometric reference for one drone: hand, another drone, or a midpoint."""

    kind: str  # "hand" | "drone" | "midpoint"
    indices: tuple[int, ...] = ()

    @staticmethod
    def hand() -> "Anchor":
        return Anchor("hand")

    @staticmethod
    def drone(i: int) -> "Anchor":
        return Anchor("drone", (i,))

    @staticmethod
    def midpoint(i: int, j: int) -> "Anchor":
        return Anchor("midpoint", (i, j))


@dataclass(frozen=True)
class DroneRule:
    """Placement rule: anchor position plus a fixed offset vector [m]."""

    anchor: Anchor
    offset: tuple[float, float, float]


@dataclass(frozen=True)
class LinkSpec:
    """One directed impedance link from the hand or a drone to a drone."""

    source: object  # HAND or drone index
    target: int
    params: ImpedanceParams
    limits: SaturationLimits
    axis_signs: tuple[float, float, float] = (1.0, 1.0, 1.0)


@dataclass
class FormationSpec:
    """Drone placement rules, link graph, and the hand-velocity force gain."""

    drones: list[DroneRule]
    links: list[LinkSpec]
    velocity_gain: float = DEFAULT_VELOCITY_GAIN
    away_axis: int = 0
    away_sign: float = -1.0
    area_vertex_order: list[int] = field(default_factory=list)

    @property
    def n_drones(self) -> int:
        return len(self.drones)

    def vertex_order(self) -> list[int]:
        return self.area_vertex_order or list(range(self.n_drones))

    def validate(self) -> list[str]:
        """Collects every violation instead of stopping at the first."""
        problems: list[str] = []
        n = self.n_drones
        if n < 1:
            problems.append("formation must contain at least one drone")
        for i, rule in enumerate(self.drones):
            if not all(math.isfinite(v) for v in rule.offset):
                problems.append(f"drone {i} offset is not finite")
            if rule.anchor.kind not in ("hand", "drone", "midpoint"):
                problems.append(f"drone {i} has unknown anchor kind {rule.anchor.kind!r}")
            for j in rule.anchor.indices:
                if not 0 <= j < n:
                    problems.append(f"drone {i} anchor references missing drone {j}")
                elif j == i:
                    problems.append(f"drone {i} anchor references itself")
        for k, link in enumerate(self.links):
            if link.source != HAND and not (isinstance(link.source, int) and 0 <= link.source < n):
                problems.append(f"link {k} source {link.source!r} is not the hand or a drone index")
            if not (isinstance(link.target, int) and 0 <= link.target < n):
                problems.append(f"link {k} target {link.target!r} is not a drone index")
        if problems:
            return problems

        reachable = self._reachable_from_hand()
        for i in range(n):
            if i not in reachable:
                problems.append(f"drone {i} is not reachable from the hand through the link graph")
        if self._link_graph_has_cycle():
            problems.append("link graph contains a cycle; links must form a DAG rooted at the hand")
        try:
            self.default_slots(np.zeros(3))
        except FormationSpecError as err:
            problems.extend(err.violations)
        if self.away_axis not in (0, 1, 2):
            problems.append(f"away_axis must be 0, 1, or 2, got {self.away_axis}")
        for idx in self.area_vertex_order:
            if not 0 <= idx < n:
                problems.append(f"area vertex order references missing drone {idx}")
        return problems

    def require_valid(self):
        problems = self.validate()
        if problems:
            raise FormationSpecError(problems)

    def _reachable_from_hand(self) -> set:
        out: dict[object, list[int]] = {}
        for link in self.links:
            out.setdefault(link.source, []).append(link.target)
        seen: set = set()
        frontier = list(out.get(HAND, []))
        while frontier:
            node = frontier.pop()
            if node in seen:
                continue
            seen.add(node)
            frontier.extend(out.get(node, []))
        return seen

    def _link_graph_has_cycle(self) -> bool:
        out: dict[int, list[int]] = {}
        indeg = {i: 0 for i in range(self.n_drones)}
        for link in self.links:
            if link.source == HAND:
                continue
            out.setdefault(link.source, []).append(link.target)
            indeg[link.target] += 1
        queue = [i for i, d in indeg.items() if d == 0]
        visited = 0
        while queue:
            node = queue.pop()
            visited += 1
            for nxt in out.get(node, []):
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    queue.append(nxt)
        return visited != self.n_drones

    def default_slots(self, hand_position: np.ndarray) -> np.ndarray:
        """Geometric positions with all link corrections at zero."""
        hand_position = np.asarray(hand_position, dtype=float)
        slots: dict[int, np.ndarray] = {}
        in_progress: set = set()

        def resolve(i: int) -> np.ndarray:
            if i in slots:
                return slots[i]
            if i in in_progress:
                raise FormationSpecError([f"anchor chain of drone {i} is cyclic"])
            in_progress.add(i)
            rule = self.drones[i]
            if rule.anchor.kind == "hand":
                base = hand_position
            elif rule.anchor.kind == "drone":
                base = resolve(rule.anchor.indices[0])
            else:
                base = 0.5 * (resolve(rule.anchor.indices[0]) + resolve(rule.anchor.indices[1]))
            in_progress.discard(i)
            slots[i] = base + np.asarray(rule.offset, dtype=float)
            return slots[i]

        return np.array([resolve(i) for i in range(self.n_drones)])

    def default_pair_distances(self) -> dict[tuple[int, int], float]:
        slots = self.default_slots(np.zeros(3))
        out = {}
        for i in range(self.n_drones):
            for j in range(i + 1, self.n_drones):
                out[(i, j)] = float(np.linalg.norm(slots[i] - slots[j]))
        return out

    def default_area(self) -> float:
        slots = self.default_slots(np.zeros(3))
        return polygon_area(slots[self.vertex_order(), :2])


def polygon_area(vertices_xy: np.ndarray) -> float:
    """Unsigned shoelace area of a polygon given in vertex order."""
    pts = np.asarray(vertices_xy, dtype=float)
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


# ---------------------------------------------------------------------------
# link stepping and goal composition


class FormationLinks:
    """Owns the per-link, per-axis impedance states and steps them each tick."""

    def __init__(self, spec: FormationSpec, sample_time: float):
        spec.require_valid()
        self.spec = spec
        self.sample_time = sample_time
        self._transitions = [discretize(link.params, sample_time) for link in spec.links]
        self._states = [[ImpedanceState() for _ in range(3)] for _ in spec.links]
        self.corrections = np.zeros((len(spec.links), 3))

    def reset(self):
        self._states = [[ImpedanceState() for _ in range(3)] for _ in self.spec.links]
        self.corrections = np.zeros((len(self.spec.links), 3))

    def update(self, hand_velocity: np.ndarray) -> np.ndarray:
        """Force every link with the hand velocity and emit clamped corrections.

        The hand drives all links globally; drone-to-drone links feel the same
        forcing as the hand link, which is what cascades displacement down the
        graph.
        """
        hand_velocity = np.asarray(hand_velocity, dtype=float)
        out = np.zeros((len(self.spec.links), 3))
        for li, (link, tr) in enumerate(zip(self.spec.links, self._transitions)):
            states = self._states[li]
            for axis in range(3):
                force = external_force(hand_velocity[axis], self.spec.velocity_gain)
                states[axis] = step(states[axis], force, tr)
            raw = np.array([s.displacement for s in states])
            out[li] = saturate(raw, link.limits)
        self.corrections = out
        return out


@dataclass(frozen=True)
class GoalSet:
    """Per-drone goal positions and the link corrections that shaped them."""

    goals: np.ndarray
    corrections: np.ndarray


def compute_goals(
    spec: FormationSpec,
    hand_position: np.ndarray,
    drone_positions: np.ndarray,
    corrections: np.ndarray,
) -> GoalSet:
    """Compose geometric slots with impedance corrections into goal positions.

    Geometric parts reference the drones' actual positions, so displacement
    cascades down the anchor chain with one tick of lag per hop. On the
    away axis the summed correction enters as a magnitude with a fixed
    retreat sign, so growing corrections always spread the formation away
    from the hand; the other axes add the signed sums directly.
    """
    hand_position = np.asarray(hand_position, dtype=float)
    drone_positions = np.asarray(drone_positions, dtype=float)
    corrections = np.asarray(corrections, dtype=float)

    incoming: dict[int, list[int]] = {}
    for li, link in enumerate(spec.links):
        incoming.setdefault(link.target, []).append(li)

    goals = np.empty((spec.n_drones, 3))
    for i, rule in enumerate(spec.drones):
        if rule.anchor.kind == "hand":
            base = hand_position
        elif rule.anchor.kind == "drone":
            base = drone_positions[rule.anchor.indices[0]]
        else:
            a, b = rule.anchor.indices
            base = 0.5 * (drone_positions[a] + drone_positions[b])
        geom = base + np.asarray(rule.offset, dtype=float)

        sums = np.zeros(3)
        for li in incoming.get(i, []):
            sums += np.asarray(spec.links[li].axis_signs, dtype=float) * corrections[li]
        imp = sums.copy()
        imp[spec.away_axis] = spec.away_sign * abs(sums[spec.away_axis])
        goals[i] = geom + imp
    return GoalSet(goals=goals, corrections=corrections)


# ---------------------------------------------------------------------------
# canonical geometries


def rhombus_formation(
    spacing_x: float = 0.5,
    spacing_y: float = 0.5,
    params: ImpedanceParams | None = None,
    limits: SaturationLimits | None = None,
    velocity_gain: float = DEFAULT_VELOCITY_GAIN,
) -> FormationSpec:
    """Four drones in a rhombus behind the hand.

    Drone 0 leads, drones 1 and 2 flank it, drone 3 trails at the midpoint
    of the flank pair. Links: hand->0, 0->1, 0->2, 1->3, 2->3.
    """
    params = params or make_impedance_params(1.9, 12.6, 21.0)
    limits = limits or SaturationLimits(0.25, 0.25, 0.25)
    drones = [
        DroneRule(Anchor.hand(), (-spacing_x, 0.0, 0.0)),
        DroneRule(Anchor.drone(0), (-spacing_x, spacing_y, 0.0)),
        DroneRule(Anchor.drone(0), (-spacing_x, -spacing_y, 0.0)),
        DroneRule(Anchor.midpoint(1, 2), (-spacing_x, 0.0, 0.0)),
    ]
    links = [
        LinkSpec(HAND, 0, params, limits),
        LinkSpec(0, 1, params, limits),
        LinkSpec(0, 2, params, limits),
        LinkSpec(1, 3, params, limits),
        LinkSpec(2, 3, params, limits),
    ]
    return FormationSpec(
        drones=drones,
        links=links,
        velocity_gain=velocity_gain,
        area_vertex_order=[0, 1, 3, 2],
    )


def triangle_formation(
    side: float = 0.5,
    lead_distance: float = 0.5,
    params: ImpedanceParams | None = None,
    limits: SaturationLimits | None = None,
    velocity_gain: float = DEFAULT_VELOCITY_GAIN,
) -> FormationSpec:
    """Three drones in an equilateral triangle, apex toward the hand."""
    params = params or make_impedance_params(1.9, 12.6, 21.0)
    limits = limits or SaturationLimits(0.25, 0.25, 0.25)
    depth = side * math.sqrt(3.0) / 2.0
    drones = [
        DroneRule(Anchor.hand(), (-lead_distance, 0.0, 0.0)),
        DroneRule(Anchor.drone(0), (-depth, side / 2.0, 0.0)),
        DroneRule(Anchor.drone(0), (-depth, -side / 2.0, 0.0)),
    ]
    links = [
        LinkSpec(HAND, 0, params, limits),
        LinkSpec(0, 1, params, limits),
        LinkSpec(0, 2, params, limits),
    ]
    return FormationSpec(drones=drones, links=links, velocity_gain=velocity_gain)
