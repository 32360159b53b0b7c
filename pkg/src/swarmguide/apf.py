"""Potential-field obstacle avoidance in the horizontal plane.

Obstacles are vertical cylinders, so all fields are planar: positions reduce
to their XY components and every returned gradient or velocity lives in XY.
The attractive potential pulls a drone toward its goal; the repulsive
potential grows without bound at an obstacle's safety boundary and vanishes
(value and gradient) beyond the obstacle's influence distance. Distances to
an obstacle are measured from the safety-zone boundary, not the center, which
keeps the singularity outside flyable space.

Everything here is a pure function; the simulator owns how the resulting
velocity is folded into drone goals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_ATTRACTIVE_SCALE = 1.0
DEFAULT_REPULSIVE_SCALE = 0.1
DEFAULT_INFLUENCE_MARGIN = 0.5  # default d0 = radius + margin [m]
DEFAULT_APF_VELOCITY_GAIN = 1.0
DEFAULT_MAX_AVOIDANCE_SPEED = 1.0


class PenetrationError(ValueError):
    """A point is on or inside an obstacle's safety zone."""

    def __init__(self, obstacle_id: str, depth: float):
        super().__init__(f"position penetrates safety zone of obstacle {obstacle_id!r} by {depth:.4f} m")
        self.obstacle_id = obstacle_id
        self.depth = depth


@dataclass(frozen=True)
class Obstacle:
    """Cylindrical obstacle: planar center, safety radius, influence distance."""

    id: str
    center: tuple[float, float]
    radius: float
    influence: float = -1.0  # d0; resolved to radius + margin when unset

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError(f"obstacle {self.id!r} radius must be > 0, got {self.radius}")
        if self.influence < 0.0:
            object.__setattr__(self, "influence", self.radius + DEFAULT_INFLUENCE_MARGIN)
        if self.influence <= self.radius:
            raise ValueError(
                f"obstacle {self.id!r} influence distance {self.influence} must exceed radius {self.radius}"
            )

    def boundary_distance(self, p) -> float:
        """Signed distance from the safety boundary; negative means inside."""
        p = _xy(p)
        return float(np.hypot(p[0] - self.center[0], p[1] - self.center[1]) - self.radius)


@dataclass(frozen=True)
class ApfGains:
    """Field scales and the gradient-to-velocity conversion."""

    attractive: float = DEFAULT_ATTRACTIVE_SCALE
    repulsive: float = DEFAULT_REPULSIVE_SCALE
    velocity_gain: float = DEFAULT_APF_VELOCITY_GAIN
    max_speed: float = DEFAULT_MAX_AVOIDANCE_SPEED
    sum_all_obstacles: bool = False  # default: only the closest obstacle repels

    def __post_init__(self):
        for name in ("attractive", "repulsive", "velocity_gain", "max_speed"):
            value = getattr(self, name)
            if value <= 0.0:
                raise ValueError(f"gain {name} must be > 0, got {value}")


def _xy(p) -> np.ndarray:
    return np.asarray(p, dtype=float)[:2]


def attractive_potential(p, goal, scale: float = DEFAULT_ATTRACTIVE_SCALE):
    """Quadratic pull toward the goal: U = scale * |p - goal|^2.

    Returns (potential, planar gradient).
    """
    d = _xy(p) - _xy(goal)
    potential = scale * float(d @ d)
    gradient = 2.0 * scale * d
    return potential, gradient


def _check_penetration(p, obstacles: Sequence[Obstacle]):
    worst = None
    for obs in obstacles:
        rho = obs.boundary_distance(p)
        if rho <= 0.0 and (worst is None or rho < worst[1]):
            worst = (obs.id, rho)
    if worst is not None:
        raise PenetrationError(worst[0], -worst[1])


def _single_repulsion(p, obs: Obstacle, scale: float):
    rho = obs.boundary_distance(p)
    if rho >= obs.influence:
        return 0.0, np.zeros(2)
    gap = 1.0 / rho - 1.0 / obs.influence
    potential = scale * gap * gap
    # dU/drho = -2*scale*gap/rho^2, along the unit vector away from the center
    offset = _xy(p) - np.asarray(obs.center, dtype=float)
    unit = offset / np.linalg.norm(offset)
    gradient = (-2.0 * scale * gap / (rho * rho)) * unit
    return potential, gradient


def repulsive_potential(p, obstacles: Sequence[Obstacle], scale: float = DEFAULT_REPULSIVE_SCALE,
                        sum_all: bool = False):
    """Barrier field around obstacles: U = scale * (1/rho - 1/d0)^2 inside d0.

    rho is the distance to the closest obstacle's safety boundary. Returns
    (potential, planar gradient); both are exactly zero at or beyond d0.
    Raises PenetrationError when p is on or inside any safety zone.
    """
    _check_penetration(p, obstacles)
    if not obstacles:
        return 0.0, np.zeros(2)
    if sum_all:
        total = 0.0
        grad = np.zeros(2)
        for obs in obstacles:
            u, g = _single_repulsion(p, obs, scale)
            total += u
            grad = grad + g
        return total, grad
    closest = min(obstacles, key=lambda o: o.boundary_distance(p))
    return _single_repulsion(p, closest, scale)


def clamp_speed(velocity: np.ndarray, max_speed: float) -> np.ndarray:
    """Scales the vector down to max_speed if it is faster, keeping direction."""
    velocity = np.asarray(velocity, dtype=float)
    speed = float(np.linalg.norm(velocity))
    if speed <= max_speed or speed == 0.0:
        return velocity
    return velocity * (max_speed / speed)


def avoidance_velocity(p, goal, obstacles: Sequence[Obstacle], gains: ApfGains) -> np.ndarray:
    """Planar velocity command descending the combined field, speed-clamped."""
    _, grad_a = attractive_potential(p, goal, gains.attractive)
    _, grad_r = repulsive_potential(p, obstacles, gains.repulsive, gains.sum_all_obstacles)
    velocity = -gains.velocity_gain * (grad_a + grad_r)
    return clamp_speed(velocity, gains.max_speed)


def repulsive_velocity(p, obstacles: Sequence[Obstacle], gains: ApfGains) -> np.ndarray:
    """Planar velocity from the repulsive term alone, speed-clamped.

    This is what the simulator folds into drone goals each tick; attraction
    toward the goal is already what the position controller provides.
    """
    _, grad_r = repulsive_potential(p, obstacles, gains.repulsive, gains.sum_all_obstacles)
    velocity = -gains.velocity_gain * grad_r
    return clamp_speed(velocity, gains.max_speed)
