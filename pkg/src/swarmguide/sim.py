"""Fixed-step world simulator.

Each tick runs the same eight stages in a fixed order:

  1. ingest the hand sample at sim-tick time and estimate hand velocity
  2. step every impedance link with the hand-velocity force
  3. compose per-drone goal positions from anchors plus link corrections
  4. fold the repulsive avoidance offset into the commanded goals
  5. PID each drone toward its commanded goal
  6. integrate semi-implicit Euler (v += a*T, speed clamp, p += v*T)
  7. detect events: collision, separation, state change, tactile patterns
  8. append the trace row

This ordering is part of the observable contract: a committed golden trace
pins it, and reordering stages is a breaking change. Physics is strictly
deterministic: no wall clock, no unordered iteration, no unseeded randomness.

The avoidance offset (stage 4) is a leaky integrator per drone: every tick
the offset decays by exp(-T/tau) and the clamped repulsive velocity times T
is added on top. Inside an influence zone the offset therefore saturates
near v*tau instead of growing without bound (an accumulate-only offset can
deadlock a drone against its own stale displacement at the influence edge);
outside every zone the repulsive velocity is exactly zero, so the offset
purely decays and snaps to exactly zero below a tiny floor. A drone that
never meets an obstacle keeps a bitwise-untouched goal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .apf import PenetrationError, repulsive_velocity
from .formation import (
    DEFAULT_ESTIMATOR_ALPHA,
    DEFAULT_ESTIMATOR_WINDOW,
    FormationLinks,
    HandState,
    compute_goals,
)
from .scenario import PidGains, Scenario, scenario_to_dict
from .tactile import (
    DirectionTracker,
    FormationClassifier,
    FormationLabel,
    PatternEvent,
    PatternSelector,
    SelectorConfig,
    com_displacement,
    encode_pattern,
)
from .traces import TraceEvent, TraceHeader, TraceLog, TraceRow, resample_hand_trace

AVOIDANCE_DECAY_TAU = 0.5  # s; offset relaxation time outside influence zones
AVOIDANCE_SNAP = 1e-9  # m; below this the offset becomes exactly zero

STAGES = (
    "hand_estimate",
    "link_update",
    "goal_composition",
    "avoidance",
    "pid",
    "integration",
    "events",
    "trace",
)


class SimulationError(RuntimeError):
    """Non-finite value in the pipeline; names the stage and drone."""

    def __init__(self, stage: str, tick: int, drone_id: Optional[int] = None):
        where = f"stage {stage!r} at tick {tick}"
        if drone_id is not None:
            where += f" for drone {drone_id}"
        super().__init__(f"non-finite value in {where}")
        self.stage = stage
        self.tick = tick
        self.drone_id = drone_id


@dataclass
class DroneState:
    id: int
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    integrator: np.ndarray = field(default_factory=lambda: np.zeros(3))
    prev_error: Optional[np.ndarray] = None


def pid_track(drone: DroneState, goal: np.ndarray, gains_xy: PidGains, gains_z: PidGains,
              sample_time: float) -> np.ndarray:
    """Position PID: a = kp*e + kd*de + ki*int(e), both clamps applied.

    The derivative comes from error differences (zero on the first call).
    Three anti-windup measures keep the integral term honest: its magnitude
    is clamped, it freezes while the output saturates, and it resets on an
    error zero-crossing. The reset matters most: the charge collected while
    crossing a large step otherwise drains at the slow kp/ki time constant
    and the drone hangs over a percent past its goal for many seconds.
    Dumping the charge the moment the error changes sign leaves the fast
    PD poles to finish the approach. The output clamp preserves direction
    in the XY plane and clips Z.
    """
    goal = np.asarray(goal, dtype=float)
    error = goal - drone.position
    if drone.prev_error is None:
        error_rate = np.zeros(3)
    else:
        error_rate = (error - drone.prev_error) / sample_time
        flipped = error * drone.prev_error < 0.0
        drone.integrator[flipped] = 0.0
    drone.prev_error = error

    accel = np.empty(3)

    pd_xy = gains_xy.kp * error[:2] + gains_xy.kd * error_rate[:2]
    candidate = np.clip(drone.integrator[:2] + error[:2] * sample_time,
                        -gains_xy.integrator_limit, gains_xy.integrator_limit)
    trial = pd_xy + gains_xy.ki * candidate
    if float(np.hypot(trial[0], trial[1])) <= gains_xy.a_max:
        drone.integrator[:2] = candidate
        accel[:2] = trial
    else:
        held = pd_xy + gains_xy.ki * drone.integrator[:2]
        magnitude = float(np.hypot(held[0], held[1]))
        if magnitude > gains_xy.a_max:
            held = held * (gains_xy.a_max / magnitude)
        accel[:2] = held

    pd_z = gains_z.kp * error[2] + gains_z.kd * error_rate[2]
    limit = gains_z.integrator_limit
    candidate_z = min(max(drone.integrator[2] + error[2] * sample_time, -limit), limit)
    trial_z = pd_z + gains_z.ki * candidate_z
    if abs(trial_z) <= gains_z.a_max:
        drone.integrator[2] = candidate_z
        accel[2] = trial_z
    else:
        held_z = pd_z + gains_z.ki * drone.integrator[2]
        accel[2] = min(max(held_z, -gains_z.a_max), gains_z.a_max)

    return accel


class World:
    """The single stepped object: hand, drones, links, fields, and the trace."""

    def __init__(self, scenario: Scenario,
                 estimator_window: int = DEFAULT_ESTIMATOR_WINDOW,
                 estimator_alpha: float = DEFAULT_ESTIMATOR_ALPHA):
        scenario.formation.require_valid()
        self.scenario = scenario
        self.spec = scenario.formation
        self.sample_time = scenario.sample_time
        self.tick = 0
        self.hand = HandState(scenario.start_hand, window=estimator_window,
                              alpha=estimator_alpha)
        slots = self.spec.default_slots(np.asarray(scenario.start_hand, dtype=float))
        self.drones = [DroneState(id=i, position=slots[i].copy()) for i in range(self.spec.n_drones)]
        self.links = FormationLinks(self.spec, self.sample_time)
        th = scenario.thresholds
        # state classification needs a real default polygon; formations
        # without one (fewer than three drones, or collinear) fly with the
        # label pinned to Regular and no guidance patterns
        if self.spec.n_drones >= 3 and self.spec.default_area() > 0.0:
            self.classifier = FormationClassifier(self.spec, theta=th.theta,
                                                  exit_margin=th.exit_margin)
            self.selector = PatternSelector(self.sample_time,
                                            SelectorConfig(dead_band=th.dead_band,
                                                           cooldown_ms=th.cooldown_ms))
        else:
            self.classifier = None
            self.selector = None
        self.tracker = DirectionTracker(epsilon=th.direction_epsilon)
        self.avoid_offsets = np.zeros((self.spec.n_drones, 2))
        self.active_pattern: Optional[PatternEvent] = None
        self.finished = False
        self._displacement: Optional[float] = None
        self.trace = TraceLog(self._header())

    def _header(self) -> TraceHeader:
        doc = scenario_to_dict(self.scenario)
        meta = {
            "scenario_name": self.scenario.name,
            "pid": doc["pid"],
            "apf": doc["apf"],
            "velocity_gain": self.spec.velocity_gain,
            "limits": doc["limits"],
            "thresholds": doc["thresholds"],
            "estimator": {"window": self.hand.estimator.window, "alpha": self.hand.estimator.alpha},
            "avoidance_enabled": self.scenario.avoidance_enabled,
        }
        return TraceHeader(
            scenario_hash=self.scenario.hash(),
            sample_time=self.sample_time,
            n_drones=self.spec.n_drones,
            n_links=len(self.spec.links),
            default_area=self.spec.default_area(),
            vertex_order=self.spec.vertex_order(),
            meta=meta,
        )

    @property
    def t_sim(self) -> float:
        return self.tick * self.sample_time

    def positions(self) -> np.ndarray:
        return np.array([d.position for d in self.drones])

    def step(self, hand_position: Sequence[float]) -> tuple[TraceRow, list[TraceEvent]]:
        """Advances one tick; returns the appended row and this tick's events."""
        tick = self.tick
        t = self.t_sim

        # 1. hand ingest + velocity estimate (timestamps are sim-tick time)
        hand_velocity = self.hand.ingest(t, np.asarray(hand_position, dtype=float))
        if not np.all(np.isfinite(self.hand.position)) or not np.all(np.isfinite(hand_velocity)):
            raise SimulationError("hand_estimate", tick)

        # 2. impedance links forced by the hand velocity
        corrections = self.links.update(hand_velocity)
        if not np.all(np.isfinite(corrections)):
            raise SimulationError("link_update", tick)

        # 3. goal composition from anchors + corrections
        goals = compute_goals(self.spec, self.hand.position, self.positions(), corrections).goals
        bad = self._first_nonfinite_row(goals)
        if bad is not None:
            raise SimulationError("goal_composition", tick, bad)

        # 4. repulsive avoidance offsets folded into the commanded goals
        if self.scenario.avoidance_enabled and self.scenario.obstacles:
            decay = math.exp(-self.sample_time / AVOIDANCE_DECAY_TAU)
            for drone in self.drones:
                try:
                    v_avoid = repulsive_velocity(drone.position, self.scenario.obstacles,
                                                 self.scenario.apf)
                except PenetrationError:
                    v_avoid = np.zeros(2)  # stage 7 logs the collision event
                self.avoid_offsets[drone.id] *= decay
                if v_avoid[0] != 0.0 or v_avoid[1] != 0.0:
                    self.avoid_offsets[drone.id] += v_avoid * self.sample_time
                elif float(np.linalg.norm(self.avoid_offsets[drone.id])) < AVOIDANCE_SNAP:
                    self.avoid_offsets[drone.id] = 0.0
                offset = self.avoid_offsets[drone.id]
                if offset[0] != 0.0 or offset[1] != 0.0:
                    goals[drone.id, 0] += offset[0]
                    goals[drone.id, 1] += offset[1]
        bad = self._first_nonfinite_row(goals)
        if bad is not None:
            raise SimulationError("avoidance", tick, bad)

        # 5. PID per drone
        accels = np.empty((len(self.drones), 3))
        for drone in self.drones:
            accels[drone.id] = pid_track(drone, goals[drone.id], self.scenario.pid_xy,
                                         self.scenario.pid_z, self.sample_time)
        bad = self._first_nonfinite_row(accels)
        if bad is not None:
            raise SimulationError("pid", tick, bad)

        # 6. semi-implicit Euler with a speed clamp
        v_max = self.scenario.limits.v_drone_max
        for drone in self.drones:
            drone.velocity = drone.velocity + accels[drone.id] * self.sample_time
            speed = float(np.linalg.norm(drone.velocity))
            if speed > v_max:
                drone.velocity *= v_max / speed
            drone.position = drone.position + drone.velocity * self.sample_time
            if not np.all(np.isfinite(drone.position)) or not np.all(np.isfinite(drone.velocity)):
                raise SimulationError("integration", tick, drone.id)

        # 7. events: collision, separation, state change, tactile guidance
        events = self._detect_events(tick, t)

        # 8. trace row
        row = TraceRow(
            tick=tick,
            t=t,
            hand=self.hand.position.copy(),
            hand_velocity=hand_velocity.copy(),
            goals=goals,
            positions=self.positions(),
            corrections=corrections.copy(),
            label=(self.classifier.label.value if self.classifier is not None
                   else FormationLabel.REGULAR.value),
            displacement=self._displacement if self._displacement is not None else math.nan,
            pattern_id=self.active_pattern.pattern_id if self.active_pattern else "",
        )
        self.trace.append(row)
        self.tick += 1
        return row, events

    def _first_nonfinite_row(self, array: np.ndarray) -> Optional[int]:
        finite = np.isfinite(array).all(axis=1)
        if finite.all():
            return None
        return int(np.argmin(finite))

    def _detect_events(self, tick: int, t: float) -> list[TraceEvent]:
        events: list[TraceEvent] = []
        positions = self.positions()

        # collision with a safety zone: at most one event per tick (deepest)
        deepest = None
        for drone in self.drones:
            for obs in self.scenario.obstacles:
                rho = obs.boundary_distance(drone.position)
                if rho <= 0.0 and (deepest is None or rho < deepest[2]):
                    deepest = (drone.id, obs.id, rho)
        if deepest is not None:
            events.append(TraceEvent(tick=tick, t=t, kind="collision",
                                     data={"drone": deepest[0], "obstacle": deepest[1],
                                           "depth": -deepest[2]}))

        # inter-drone separation: at most one event per tick (closest pair)
        d_min = self.scenario.limits.d_min
        closest = None
        for i in range(len(self.drones)):
            for j in range(i + 1, len(self.drones)):
                dist = float(np.linalg.norm(positions[i] - positions[j]))
                if dist < d_min and (closest is None or dist < closest[2]):
                    closest = (i, j, dist)
        if closest is not None:
            events.append(TraceEvent(tick=tick, t=t, kind="separation",
                                     data={"pair": [closest[0], closest[1]],
                                           "distance": closest[2]}))

        # formation state + lateral displacement + guidance pattern
        if self.classifier is not None:
            previous_label = self.classifier.label
            label = self.classifier.classify(positions).label
            if label is not previous_label:
                events.append(TraceEvent(tick=tick, t=t, kind="state_change",
                                         data={"from": previous_label.value,
                                               "to": label.value}))
        else:
            label = FormationLabel.REGULAR

        direction = self.tracker.update(self.hand.velocity)
        if direction is not None:
            reference = self.spec.default_slots(self.hand.position).mean(axis=0)
            self._displacement = com_displacement(positions, reference, direction)
        else:
            self._displacement = None

        if self.active_pattern and tick >= self.active_pattern.end_tick:
            events.append(TraceEvent(tick=tick, t=t, kind="pattern_end",
                                     data={"pattern": self.active_pattern.pattern_id}))
            self.active_pattern = None
        fired = (self.selector.update(tick, label, self._displacement)
                 if self.selector is not None else None)
        if fired is not None:
            self.active_pattern = fired
            timeline = encode_pattern(fired.pattern_id)
            events.append(TraceEvent(tick=tick, t=t, kind="pattern_start",
                                     data={"pattern": fired.pattern_id,
                                           "label": fired.label.value,
                                           "sign": fired.displacement_sign,
                                           "end_tick": fired.end_tick,
                                           "duration_ms": timeline.total_duration_ms}))

        # finish-region marker, once
        if self.scenario.finish is not None and not self.finished:
            centroid = positions[:, :2].mean(axis=0)
            center = np.asarray(self.scenario.finish.center, dtype=float)
            if float(np.linalg.norm(centroid - center)) <= self.scenario.finish.radius:
                self.finished = True
                events.append(TraceEvent(tick=tick, t=t, kind="marker",
                                         data={"name": "finish_reached"}))

        for event in events:
            self.trace.add_event(event)
        return events


def run_scenario(scenario: Scenario, hand_samples: Sequence = (),
                 n_ticks: Optional[int] = None) -> TraceLog:
    """Headless deterministic run: identical inputs give byte-identical logs.

    The recorded hand samples are resampled onto the tick grid by linear
    interpolation. Without an explicit tick count the run covers the
    recording plus a two-second tail, or 600 ticks for an empty recording.
    """
    if n_ticks is None:
        if hand_samples:
            t_last = hand_samples[-1][0]
            n_ticks = int(math.ceil(t_last / scenario.sample_time)) + 1 \
                + int(round(2.0 / scenario.sample_time))
        else:
            n_ticks = 600
    world = World(scenario)
    grid = resample_hand_trace(hand_samples, scenario.sample_time, n_ticks,
                               start=scenario.start_hand)
    for k in range(n_ticks):
        world.step(grid[k])
    return world.trace
