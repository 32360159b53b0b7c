"""Tests for the planar potential fields against a finite-difference oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmguide.apf import (
    ApfGains,
    Obstacle,
    PenetrationError,
    attractive_potential,
    avoidance_velocity,
    clamp_speed,
    repulsive_potential,
    repulsive_velocity,
)

from oracles import central_gradient


def single_obstacle(radius=0.3, center=(0.0, 0.0), influence=None):
    if influence is None:
        return Obstacle("obs-0", center, radius)
    return Obstacle("obs-0", center, radius, influence)


class TestObstacle:
    def test_default_influence(self):
        obs = single_obstacle(radius=0.3)
        assert obs.influence == pytest.approx(0.8)

    def test_invalid_radius(self):
        with pytest.raises(ValueError, match="radius"):
            Obstacle("bad", (0.0, 0.0), 0.0)

    def test_influence_must_exceed_radius(self):
        with pytest.raises(ValueError, match="influence"):
            Obstacle("bad", (0.0, 0.0), 0.5, 0.5)

    def test_boundary_distance_signs(self):
        obs = single_obstacle(radius=0.3)
        assert obs.boundary_distance([1.3, 0.0, 0.7]) == pytest.approx(1.0)
        assert obs.boundary_distance([0.1, 0.0]) == pytest.approx(-0.2)


class TestAttractive:
    def test_coincident_points(self):
        u, g = attractive_potential([1.0, 2.0], [1.0, 2.0])
        assert u == 0.0
        assert np.all(g == 0.0)

    def test_distance_two(self):
        u, _ = attractive_potential([2.0, 0.0], [0.0, 0.0], scale=1.0)
        assert u == pytest.approx(4.0)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            p = rng.uniform(-3.0, 3.0, size=2)
            goal = rng.uniform(-3.0, 3.0, size=2)
            _, analytic = attractive_potential(p, goal, scale=1.7)
            numeric = central_gradient(lambda q: attractive_potential(q, goal, 1.7)[0], p)
            denom = max(np.linalg.norm(numeric), 1e-9)
            assert np.linalg.norm(analytic - numeric) / denom < 1e-6

    def test_z_component_ignored(self):
        u1, g1 = attractive_potential([1.0, 2.0, 9.0], [0.0, 0.0, -4.0])
        u2, g2 = attractive_potential([1.0, 2.0], [0.0, 0.0])
        assert u1 == u2
        assert np.array_equal(g1, g2)


class TestRepulsive:
    def test_zero_beyond_influence(self):
        obs = [single_obstacle(radius=0.3)]
        u, g = repulsive_potential([0.8, 0.0], obs)  # rho exactly d0 - r... rho = 0.5 < d0? no: rho=0.5, d0=0.8
        u2, g2 = repulsive_potential([1.2, 0.0], obs)  # rho = 0.9 >= 0.8
        assert u2 == 0.0
        assert np.all(g2 == 0.0)
        assert u > 0.0

    def test_exactly_zero_at_influence_boundary(self):
        obs = [single_obstacle(radius=0.3)]
        u, g = repulsive_potential([1.1, 0.0], obs)  # rho = 0.8 = d0
        assert u == 0.0
        assert np.all(g == 0.0)

    def test_half_influence_value(self):
        # rho = d0/2 gives U = scale / d0^2
        d0 = 0.8
        obs = [single_obstacle(radius=0.3, influence=d0)]
        p = [0.3 + d0 / 2.0, 0.0]
        u, _ = repulsive_potential(p, obs, scale=0.1)
        assert u == pytest.approx(0.1 / d0**2, rel=1e-12)

    def test_no_obstacles(self):
        u, g = repulsive_potential([0.0, 0.0], [])
        assert u == 0.0
        assert np.all(g == 0.0)

    def test_penetration_raises_with_id(self):
        obs = [Obstacle("pillar-3", (1.0, 1.0), 0.4)]
        with pytest.raises(PenetrationError) as exc:
            repulsive_potential([1.1, 1.0], obs)
        assert exc.value.obstacle_id == "pillar-3"
        assert exc.value.depth == pytest.approx(0.3)

    def test_deepest_penetration_reported_first(self):
        obs = [
            Obstacle("shallow", (0.25, 0.0), 0.3),
            Obstacle("deep", (0.0, 0.0), 0.3),
        ]
        with pytest.raises(PenetrationError) as exc:
            repulsive_potential([0.0, 0.0], obs)
        assert exc.value.obstacle_id == "deep"

    def test_gradient_matches_finite_differences(self):
        # 1000 random points in the regular band rho in (1.1r, 0.95*d0)
        rng = np.random.default_rng(12)
        obs = [single_obstacle(radius=0.3, center=(0.4, -0.2))]
        r, d0 = 0.3, 0.8
        checked = 0
        while checked < 1000:
            rho = rng.uniform(1.1 * r - r, 0.95 * d0 - r) + r  # rho in (0.33, 0.76)
            theta = rng.uniform(0.0, 2.0 * np.pi)
            p = np.array([0.4, -0.2]) + (r + (rho - r)) * np.array([np.cos(theta), np.sin(theta)])
            _, analytic = repulsive_potential(p, obs, scale=0.1)
            numeric = central_gradient(lambda q: repulsive_potential(q, obs, 0.1)[0], p)
            assert np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric) < 1e-6
            checked += 1

    def test_monotone_decrease_with_distance(self):
        obs = [single_obstacle(radius=0.3)]
        rhos = np.linspace(0.05, 0.49, 60)
        values = [repulsive_potential([0.3 + rho, 0.0], obs)[0] for rho in rhos]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_closest_obstacle_only_by_default(self):
        near = single_obstacle(radius=0.3, center=(0.0, 0.0))
        far = Obstacle("obs-1", (1.2, 0.0), 0.3)
        p = [0.7, 0.0]  # rho_near = 0.4, rho_far = 0.2 -> far is closest
        u_both, g_both = repulsive_potential(p, [near, far])
        u_far, g_far = repulsive_potential(p, [far])
        assert u_both == u_far
        assert np.array_equal(g_both, g_far)

    def test_sum_all_toggle(self):
        near = single_obstacle(radius=0.3, center=(0.0, 0.0))
        far = Obstacle("obs-1", (1.2, 0.0), 0.3)
        p = [0.7, 0.0]
        u_sum, _ = repulsive_potential(p, [near, far], sum_all=True)
        u_near, _ = repulsive_potential(p, [near])
        u_far, _ = repulsive_potential(p, [far])
        assert u_sum == pytest.approx(u_near + u_far, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(rho=st.floats(min_value=0.02, max_value=0.49), theta=st.floats(min_value=0.0, max_value=6.28))
    def test_gradient_points_inward(self, rho, theta):
        # potential decreases away from the obstacle, so the gradient points
        # toward the center everywhere inside the influence band
        obs = single_obstacle(radius=0.3)
        p = (0.3 + rho) * np.array([np.cos(theta), np.sin(theta)])
        _, g = repulsive_potential(p, [obs])
        assert float(g @ p) < 0.0


class TestAvoidanceVelocity:
    def test_at_goal_no_obstacles(self):
        v = avoidance_velocity([0.5, 0.5], [0.5, 0.5], [], ApfGains())
        assert np.all(v == 0.0)

    def test_pure_attraction_points_at_goal(self):
        p = np.array([1.0, 1.0])
        goal = np.array([0.0, 0.0])
        v = avoidance_velocity(p, goal, [], ApfGains())
        direction = v / np.linalg.norm(v)
        expected = (goal - p) / np.linalg.norm(goal - p)
        assert np.allclose(direction, expected, atol=1e-12)

    def test_speed_clamped_direction_preserved(self):
        p = np.array([4.0, 3.0])
        goal = np.zeros(2)
        gains = ApfGains(max_speed=1.0)
        v = avoidance_velocity(p, goal, [], gains)
        assert np.linalg.norm(v) == pytest.approx(1.0)
        assert np.allclose(v / np.linalg.norm(v), -p / np.linalg.norm(p), atol=1e-12)

    def test_lateral_deflection_off_axis(self):
        # goal straight behind the obstacle; a drone slightly off the symmetry
        # axis picks up a lateral velocity component pushing it further off
        obs = [single_obstacle(radius=0.3, center=(1.0, 0.0))]
        gains = ApfGains()
        for dy in (0.05, 0.15):
            p = np.array([0.35, dy])  # inside influence band (rho ~ 0.37)
            v = avoidance_velocity(p, [2.0, 0.0], obs, gains)
            assert v[1] > 0.0
        p_mirror = np.array([0.35, -0.1])
        v_mirror = avoidance_velocity(p_mirror, [2.0, 0.0], obs, gains)
        assert v_mirror[1] < 0.0

    def test_penetration_propagates(self):
        obs = [single_obstacle(radius=0.3)]
        with pytest.raises(PenetrationError):
            avoidance_velocity([0.1, 0.0], [2.0, 0.0], obs, ApfGains())

    def test_repulsive_velocity_zero_outside_influence(self):
        obs = [single_obstacle(radius=0.3)]
        v = repulsive_velocity([2.0, 2.0], obs, ApfGains())
        assert np.all(v == 0.0)

    def test_repulsive_velocity_pushes_away(self):
        obs = [single_obstacle(radius=0.3)]
        p = np.array([0.5, 0.0])
        v = repulsive_velocity(p, obs, ApfGains())
        assert v[0] > 0.0
        assert v[1] == pytest.approx(0.0, abs=1e-15)

    def test_combined_field_continuous_at_influence_boundary(self):
        obs = [single_obstacle(radius=0.3)]
        gains = ApfGains()
        goal = np.array([3.0, 0.0])
        eps = 1e-9
        inside = avoidance_velocity([1.1 - eps, 0.0], goal, obs, gains)
        outside = avoidance_velocity([1.1 + eps, 0.0], goal, obs, gains)
        assert np.allclose(inside, outside, atol=1e-5)

    def test_bad_gains_rejected(self):
        with pytest.raises(ValueError, match="repulsive"):
            ApfGains(repulsive=0.0)
        with pytest.raises(ValueError, match="max_speed"):
            ApfGains(max_speed=-1.0)


class TestClampSpeed:
    def test_slow_vector_untouched(self):
        v = np.array([0.3, -0.4])
        assert np.array_equal(clamp_speed(v, 1.0), v)

    def test_zero_vector(self):
        assert np.all(clamp_speed(np.zeros(2), 1.0) == 0.0)

    @settings(max_examples=50, deadline=None)
    @given(
        vx=st.floats(min_value=-50.0, max_value=50.0),
        vy=st.floats(min_value=-50.0, max_value=50.0),
    )
    def test_never_exceeds_limit(self, vx, vy):
        out = clamp_speed(np.array([vx, vy]), 1.0)
        assert np.linalg.norm(out) <= 1.0 + 1e-12
