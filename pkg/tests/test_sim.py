"""World stepping: PID tracking, the eight-stage tick pipeline, events,
avoidance folding, determinism, and the committed golden trace."""

import math
import pathlib
from dataclasses import replace

import numpy as np
import pytest

from swarmguide.formation import HAND, Anchor, DroneRule, FormationSpec, LinkSpec
from swarmguide.impedance import SaturationLimits, make_impedance_params
from swarmguide.scenario import PidGains, Scenario, Thresholds, load_preset
from swarmguide.sim import (
    AVOIDANCE_DECAY_TAU,
    AVOIDANCE_SNAP,
    DroneState,
    SimulationError,
    World,
    pid_track,
    run_scenario,
)
from swarmguide.traces import events_jsonl_text, trace_csv_text

DT = 1.0 / 60.0
GAINS = PidGains()


def make_drone(position=(0.0, 0.0, 0.0)):
    return DroneState(id=0, position=np.asarray(position, dtype=float))


# ---------------------------------------------------------------------------
# pid_track


def test_pid_at_goal_is_quiet():
    drone = make_drone()
    for _ in range(10):
        accel = pid_track(drone, np.zeros(3), GAINS, GAINS, DT)
        assert np.all(accel == 0.0)


def test_pid_first_call_has_no_derivative_kick():
    drone = make_drone()
    accel = pid_track(drone, np.array([0.1, 0.0, 0.0]), GAINS, GAINS, DT)
    # P term plus one tick of I term only; the error rate needs two samples
    expected = GAINS.kp * 0.1 + GAINS.ki * 0.1 * DT
    assert accel[0] == pytest.approx(expected, rel=1e-12)
    assert accel[1] == 0.0 and accel[2] == 0.0


def test_pid_step_response_settles_fast_without_ringing():
    # point mass driven by the tracker: settles within 2% of a 0.5 m step
    # in under 3 s and never overshoots by more than 5%
    drone = make_drone()
    goal = np.array([0.5, 0.0, 0.0])
    velocity = np.zeros(3)
    history = []
    for _ in range(int(6.0 / DT)):
        accel = pid_track(drone, goal, GAINS, GAINS, DT)
        velocity = velocity + accel * DT
        drone.position = drone.position + velocity * DT
        history.append(drone.position[0])
    history = np.array(history)
    assert history.max() < 0.5 * 1.05
    settle_tick = int(3.0 / DT)
    assert np.all(np.abs(history[settle_tick:] - 0.5) <= 0.5 * 0.02)


def test_pid_integrator_stays_clamped():
    drone = make_drone()
    goal = np.array([100.0, -100.0, 50.0])
    for _ in range(2000):
        pid_track(drone, goal, GAINS, GAINS, DT)
    limit = GAINS.integrator_limit
    assert np.all(np.abs(drone.integrator) <= limit + 1e-12)


def test_pid_output_clamp_preserves_xy_direction():
    drone = make_drone()
    goal = np.array([3.0, 4.0, 0.0])
    accel = pid_track(drone, goal, GAINS, GAINS, DT)
    assert np.hypot(accel[0], accel[1]) == pytest.approx(GAINS.a_max, rel=1e-12)
    assert accel[1] / accel[0] == pytest.approx(4.0 / 3.0, rel=1e-9)


def test_pid_z_clamped_separately():
    drone = make_drone()
    soft_z = PidGains(a_max=1.5)
    accel = pid_track(drone, np.array([0.0, 0.0, 10.0]), GAINS, soft_z, DT)
    assert accel[2] == pytest.approx(1.5)


def test_pid_zero_gains_do_nothing():
    drone = make_drone()
    dead = PidGains(kp=0.0, kd=0.0, ki=0.0)
    for _ in range(50):
        accel = pid_track(drone, np.array([1.0, 2.0, 3.0]), dead, dead, DT)
        assert np.all(accel == 0.0)


# ---------------------------------------------------------------------------
# tick pipeline basics


def test_stationary_hand_is_a_bitwise_fixed_point():
    scenario = load_preset("rhombus-4")
    world = World(scenario)
    start = world.positions().copy()
    for _ in range(240):
        world.step(scenario.start_hand)
    assert np.array_equal(world.positions(), start)
    assert all(np.all(d.velocity == 0.0) for d in world.drones)
    assert np.array_equal(world.avoid_offsets, np.zeros_like(world.avoid_offsets))
    assert all(row.label == "Regular" for row in world.trace.rows)
    assert world.trace.events == []


def test_empty_hand_recording_runs_600_ticks():
    scenario = load_preset("rhombus-4")
    trace = run_scenario(scenario)
    assert len(trace.rows) == 600
    slots = scenario.formation.default_slots(np.asarray(scenario.start_hand))
    assert np.array_equal(trace.rows[-1].positions, slots)


def test_row_time_is_tick_times_sample_time():
    scenario = load_preset("rhombus-4")
    trace = run_scenario(scenario, n_ticks=50)
    for row in trace.rows:
        assert row.t == row.tick * scenario.sample_time


def test_tick_count_derived_from_recording_length():
    scenario = load_preset("rhombus-4")
    samples = [(0.0, (0.0, 0.0, 0.0)), (1.0, (0.1, 0.0, 0.0))]
    trace = run_scenario(scenario, samples)
    assert len(trace.rows) == 61 + 120  # recording plus a two-second tail


def ramp_samples(speed=0.5, ramp_s=0.5, hold_s=4.0, tail_s=4.0, axis=1, sign=-1.0):
    """Hand accelerates to `speed` along one axis, holds, then stops."""
    samples = []
    pos = np.zeros(3)
    t = 0.0
    n_ramp = int(round(ramp_s / DT))
    n_hold = int(round(hold_s / DT))
    samples.append((t, pos.copy()))
    for k in range(1, n_ramp + n_hold + 1):
        t = k * DT
        v = speed * min(k / n_ramp, 1.0)
        pos = pos.copy()
        pos[axis] += sign * v * DT
        samples.append((t, pos.copy()))
    samples.append((t + tail_s, pos.copy()))
    return samples


def test_ramp_stretches_the_tail_drone_most():
    scenario = load_preset("rhombus-4")
    samples = ramp_samples()
    trace = run_scenario(scenario, samples)

    gaps = np.array([abs(r.positions[0, 1] - r.positions[3, 1]) for r in trace.rows])
    default_span = float(np.linalg.norm(
        scenario.formation.default_slots(np.zeros(3))[0]
        - scenario.formation.default_slots(np.zeros(3))[3]))
    # the leader/tail Y gap opens by well over a tenth of their spacing
    assert gaps.max() >= 0.10 * default_span

    peak = int(np.argmax(gaps))
    row = trace.rows[peak]
    slots = scenario.formation.default_slots(row.hand)
    offsets = np.linalg.norm(row.goals - slots, axis=1)
    assert offsets[3] >= offsets[0]  # the tail's goal offset dominates

    # after the hand stops, link corrections drain below a millimeter in 3 s
    stop_t = samples[-2][0]
    relax = [r for r in trace.rows if r.t >= stop_t + 3.0]
    assert relax, "trace must extend past the relaxation window"
    assert np.abs(relax[0].corrections).max() < 1e-3


def test_reruns_are_byte_identical():
    scenario = load_preset("rhombus-4")
    samples = ramp_samples(hold_s=2.0, tail_s=1.0)
    a = run_scenario(scenario, samples)
    b = run_scenario(scenario, samples)
    assert trace_csv_text(a) == trace_csv_text(b)
    assert events_jsonl_text(a) == events_jsonl_text(b)


def test_halving_the_step_barely_moves_the_paths():
    scenario = load_preset("rhombus-4")
    samples = ramp_samples(hold_s=2.0, tail_s=2.0)
    coarse = run_scenario(scenario, samples, n_ticks=300)
    fine = run_scenario(replace(scenario, sample_time=DT / 2.0), samples, n_ticks=600)
    pos_coarse = np.array([r.positions for r in coarse.rows])
    pos_fine = np.array([r.positions for r in fine.rows])[::2]
    rms = float(np.sqrt(np.mean(np.sum((pos_coarse - pos_fine) ** 2, axis=2))))
    assert rms < 0.02


def test_free_drone_with_zero_accel_glides_in_an_exact_line():
    # integrator sanity: under a = 0 the velocity never changes and every
    # tick advances the position by exactly v*T
    dead = PidGains(kp=0.0, kd=0.0, ki=0.0)
    scenario = replace(load_preset("rhombus-4"), pid_xy=dead, pid_z=dead)
    world = World(scenario)
    velocity = np.array([0.3, -0.4, 0.1])
    world.drones[0].velocity = velocity.copy()
    previous = world.drones[0].position.copy()
    step_vector = velocity * scenario.sample_time
    for _ in range(200):
        world.step(scenario.start_hand)
        assert np.array_equal(world.drones[0].velocity, velocity)
        assert np.array_equal(world.drones[0].position, previous + step_vector)
        previous = world.drones[0].position.copy()


def test_displaced_drone_returns_straight_to_its_slot():
    # identical xy gains and direction-preserving clamps keep the recovery
    # path on the displacement line
    scenario = load_preset("rhombus-4")
    world = World(scenario)
    slot = world.drones[3].position.copy()
    offset = np.array([0.3, 0.4, 0.0])
    world.drones[3].position = slot + offset
    points = []
    for _ in range(300):
        world.step(scenario.start_hand)
        points.append(world.drones[3].position.copy())
    points = np.array(points)
    rel = points[:, :2] - slot[:2]
    cross = rel[:, 0] * offset[1] - rel[:, 1] * offset[0]
    assert np.abs(cross).max() < 1e-9
    assert np.linalg.norm(points[-1] - slot) < 1e-3


# ---------------------------------------------------------------------------
# events


def test_state_change_events_match_label_column():
    scenario = load_preset("rhombus-4")
    samples = ramp_samples(speed=1.2, hold_s=3.0, tail_s=4.0)
    trace = run_scenario(scenario, samples)
    changes = [e for e in trace.events if e.kind == "state_change"]
    assert changes, "a 1.2 m/s drag must stretch the rhombus out of Regular"
    assert changes[0].data["from"] == "Regular"
    assert changes[0].data["to"] == "Extended"
    for event in changes:
        assert trace.rows[event.tick].label == event.data["to"]
        assert trace.rows[event.tick - 1].label == event.data["from"]
    assert trace.rows[-1].label == "Regular"  # relaxed again after the stop


def test_turn_fires_extended_guidance_pattern():
    # drag -Y hard to stretch the formation, then turn to -X: the swarm
    # trails the old direction, which reads as a leftward centroid offset
    scenario = load_preset("rhombus-4")
    samples = []
    pos = np.zeros(3)
    t = 0.0
    samples.append((t, pos.copy()))
    for k in range(1, int(2.0 / DT) + 1):
        t = k * DT
        pos = pos + np.array([0.0, -1.2 * DT, 0.0])
        samples.append((t, pos.copy()))
    for k in range(1, int(2.0 / DT) + 1):
        pos = pos + np.array([-1.2 * DT, 0.0, 0.0])
        samples.append((t + k * DT, pos.copy()))
    trace = run_scenario(scenario, samples)

    starts = trace.pattern_starts()
    assert starts, "the turn must trigger a guidance pattern"
    first = starts[0]
    assert first.data["pattern"] in ("EL", "ER")
    assert first.data["label"] == "Extended"

    ends = [e for e in trace.events if e.kind == "pattern_end"]
    assert ends and ends[0].tick > first.tick
    # the trace's pattern column covers exactly the playing span
    end_tick = first.data["end_tick"]
    assert all(r.pattern_id == first.data["pattern"]
               for r in trace.rows[first.tick:end_tick])
    assert trace.rows[first.tick - 1].pattern_id == ""
    assert trace.rows[end_tick].pattern_id == ""  # cooldown keeps it silent


def test_pattern_events_never_overlap():
    scenario = load_preset("rhombus-4")
    samples = ramp_samples(speed=1.5, hold_s=6.0, tail_s=2.0)
    trace = run_scenario(scenario, samples)
    starts = trace.pattern_starts()
    for earlier, later in zip(starts, starts[1:]):
        cooldown_ticks = math.ceil(
            scenario.thresholds.cooldown_ms / 1000.0 / scenario.sample_time)
        assert later.tick >= earlier.data["end_tick"] + cooldown_ticks


def crowded_scenario():
    """Three drones with one pair spaced below the separation floor."""
    params = make_impedance_params(1.9, 12.6, 21.0)
    limits = SaturationLimits(0.25, 0.25, 0.25)
    spec = FormationSpec(
        drones=[
            DroneRule(Anchor.hand(), (-0.3, 0.06, 0.0)),
            DroneRule(Anchor.hand(), (-0.3, -0.06, 0.0)),
            DroneRule(Anchor.hand(), (-0.6, 0.0, 0.0)),
        ],
        links=[LinkSpec(HAND, i, params, limits) for i in range(3)],
        area_vertex_order=[0, 1, 2],
    )
    return Scenario(name="crowded", formation=spec)


def test_separation_event_exactly_once_per_offending_tick():
    scenario = crowded_scenario()
    trace = run_scenario(scenario, n_ticks=40)
    separations = [e for e in trace.events if e.kind == "separation"]
    assert len(separations) == 40  # the 0.12 m pair offends on every tick
    assert [e.tick for e in separations] == list(range(40))
    for event in separations:
        assert event.data["pair"] == [0, 1]
        assert event.data["distance"] == pytest.approx(0.12)


def test_collision_logged_once_per_tick_and_physics_continues():
    scenario = replace(load_preset("triangle-3-labyrinth"), avoidance_enabled=False)
    samples = [(0.0, (0.0, 0.0, 0.0)), (12.0, (6.0, 0.0, 0.0))]
    trace = run_scenario(scenario, samples)
    collisions = [e for e in trace.events if e.kind == "collision"]
    assert collisions, "driving the flank line through a pillar must collide"
    ticks = [e.tick for e in collisions]
    assert len(ticks) == len(set(ticks))  # one event per offending tick
    for event in collisions:
        assert event.data["obstacle"] in ("pillar-1", "pillar-2")
        assert event.data["depth"] > 0.0
    # the run survives the contact and keeps appending finite rows
    assert len(trace.rows) == 841
    assert np.all(np.isfinite(trace.rows[-1].positions))


def test_labyrinth_cleared_with_avoidance_on():
    scenario = load_preset("triangle-3-labyrinth")
    samples = [(0.0, (0.0, 0.0, 0.0)), (12.0, (6.0, 0.0, 0.0))]
    trace = run_scenario(scenario, samples)
    assert not any(e.kind == "collision" for e in trace.events)
    worst = math.inf
    for row in trace.rows:
        for obstacle in scenario.obstacles:
            center = np.asarray(obstacle.center)
            dists = np.hypot(*(row.positions[:, :2] - center).T) - obstacle.radius
            worst = min(worst, float(dists.min()))
    assert worst > 0.0
    assert any(e.kind == "marker" and e.data["name"] == "finish_reached"
               for e in trace.events)
    # and the displaced goals show up in the log while passing the pillars
    slots_mismatch = 0
    for row in trace.rows:
        slots = scenario.formation.default_slots(row.hand)
        if np.abs(row.goals[:, :2] - slots[:, :2]).max() > 0.05:
            slots_mismatch += 1
    assert slots_mismatch > 30


def test_finish_marker_fires_once():
    scenario = load_preset("triangle-3-labyrinth")
    samples = [(0.0, (0.0, 0.0, 0.0)), (12.0, (6.0, 0.0, 0.0))]
    trace = run_scenario(scenario, samples)
    markers = [e for e in trace.events if e.kind == "marker"]
    assert len(markers) == 1


# ---------------------------------------------------------------------------
# avoidance offset behavior


def test_offsets_decay_to_exact_zero_after_leaving_influence():
    scenario = load_preset("triangle-3-labyrinth")
    world = World(scenario)
    world.avoid_offsets[0] = np.array([1e-8, -1e-8])
    for _ in range(600):  # hand parked far from both pillars
        world.step(scenario.start_hand)
    assert world.avoid_offsets[0, 0] == 0.0
    assert world.avoid_offsets[0, 1] == 0.0


def test_offset_saturates_near_velocity_times_tau():
    # a drone pinned inside a strong field accumulates at most ~v_max * tau
    scenario = load_preset("triangle-3-labyrinth")
    samples = [(0.0, (0.0, 0.0, 0.0)), (12.0, (6.0, 0.0, 0.0))]
    world = World(scenario)
    from swarmguide.traces import resample_hand_trace
    grid = resample_hand_trace(samples, scenario.sample_time, 841,
                               start=scenario.start_hand)
    peak = 0.0
    for k in range(841):
        world.step(grid[k])
        peak = max(peak, float(np.linalg.norm(world.avoid_offsets, axis=1).max()))
    cap = scenario.apf.max_speed * AVOIDANCE_DECAY_TAU
    assert peak <= cap * 1.10


def test_avoidance_disabled_matches_no_obstacle_goals_bitwise():
    base = load_preset("triangle-3-labyrinth")
    samples = ramp_samples(speed=0.4, hold_s=1.0, tail_s=0.5, axis=0, sign=1.0)
    with_flag_off = run_scenario(replace(base, avoidance_enabled=False), samples)
    without_obstacles = run_scenario(replace(base, obstacles=[]), samples)
    for a, b in zip(with_flag_off.rows, without_obstacles.rows):
        assert np.array_equal(a.goals, b.goals)
        assert np.array_equal(a.positions, b.positions)


# ---------------------------------------------------------------------------
# failure diagnostics


def test_nan_hand_sample_halts_naming_the_stage():
    scenario = load_preset("rhombus-4")
    world = World(scenario)
    world.step(scenario.start_hand)
    with pytest.raises(SimulationError) as excinfo:
        world.step((math.nan, 0.0, 0.0))
    assert excinfo.value.stage == "hand_estimate"
    assert "hand_estimate" in str(excinfo.value)


def test_nan_position_halts_naming_stage_and_drone():
    scenario = load_preset("rhombus-4")
    world = World(scenario)
    world.step(scenario.start_hand)
    world.drones[2].position = np.array([0.0, math.nan, 0.0])
    with pytest.raises(SimulationError) as excinfo:
        world.step(scenario.start_hand)
    assert excinfo.value.drone_id is not None
    assert str(excinfo.value.drone_id) in str(excinfo.value)


def test_invalid_formation_rejected_at_world_construction():
    spec = FormationSpec(drones=[DroneRule(Anchor.hand(), (-0.5, 0.0, 0.0))],
                         links=[], area_vertex_order=[0])
    with pytest.raises(Exception):
        World(Scenario(name="broken", formation=spec))


# ---------------------------------------------------------------------------
# the golden trace


def test_golden_trace_is_reproduced_byte_for_byte():
    from tests.make_golden import GOLDEN_PATH, golden_trace_text
    committed = GOLDEN_PATH.read_text()
    assert golden_trace_text() == committed
