"""Virtual mass-spring-damper interlinks, stepped in exact discrete time.

One interlink simulates ``M x'' + D x' + K x = F(t)`` per spatial axis.
The continuous system is discretized with a zero-order hold, so stepping
at the sample time is exact for piecewise-constant forcing: no integration
drift, no stability constraint on the sample time.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import expm

# |zeta - 1| at or below this counts as critically damped.
CRITICAL_ZETA_TOL = 1e-6

DEFAULT_SAMPLE_TIME = 1.0 / 60.0  # 60 Hz update rate


class ParameterError(ValueError):
    """Invalid physical parameter; message names the offending field."""


class DampingClass(Enum):
    UNDAMPED = "undamped"
    UNDERDAMPED = "underdamped"
    CRITICAL = "critical"
    OVERDAMPED = "overdamped"


@dataclass(frozen=True)
class ImpedanceParams:
    """Validated mass-spring-damper coefficients with derived spectrum.

    mass [kg], damping [N*s/m], stiffness [N/m] define the oscillator;
    natural_frequency, damping_ratio, and the eigenvalues of the state
    matrix are derived once at construction.
    """

    mass: float
    damping: float
    stiffness: float
    natural_frequency: float
    damping_ratio: float
    eigenvalues: tuple[complex, complex]
    damping_class: DampingClass

    @property
    def a(self) -> float:
        """State-matrix entry -damping/mass."""
        return -self.damping / self.mass

    @property
    def b(self) -> float:
        """State-matrix entry -stiffness/mass."""
        return -self.stiffness / self.mass

    @property
    def c(self) -> float:
        """Input-matrix entry 1/mass."""
        return 1.0 / self.mass

    def state_matrix(self) -> np.ndarray:
        """Continuous state matrix A = [[0, 1], [b, a]]."""
        return np.array([[0.0, 1.0], [self.b, self.a]])

    def input_matrix(self) -> np.ndarray:
        """Continuous input matrix B = [0, 1/mass]^T."""
        return np.array([0.0, self.c])


@dataclass(frozen=True)
class ImpedanceState:
    """Displacement [m] and velocity [m/s] of one link along one axis."""

    displacement: float = 0.0
    velocity: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.displacement, self.velocity])


@dataclass(frozen=True)
class SaturationLimits:
    """Per-axis nonnegative clamp [m] on the emitted correction."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ParameterError(f"saturation limit {name} must be >= 0, got {v!r}")

    def as_vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class StateTransition:
    """Exact one-step transition: x[k+1] = a_d @ x[k] + b_d * force."""

    a_d: np.ndarray
    b_d: np.ndarray
    sample_time: float

    def __post_init__(self):
        self.a_d.setflags(write=False)
        self.b_d.setflags(write=False)


def make_impedance_params(mass: float, damping: float, stiffness: float) -> ImpedanceParams:
    """Validate coefficients and derive frequency, damping ratio, eigenvalues.

    Raises ParameterError unless mass > 0, stiffness > 0, damping >= 0.
    """
    if not (math.isfinite(mass) and mass > 0.0):
        raise ParameterError(f"mass must be positive, got {mass!r}")
    if not (math.isfinite(stiffness) and stiffness > 0.0):
        raise ParameterError(f"stiffness must be positive, got {stiffness!r}")
    if not (math.isfinite(damping) and damping >= 0.0):
        raise ParameterError(f"damping must be nonnegative, got {damping!r}")

    omega_n = math.sqrt(stiffness / mass)
    zeta = damping / (2.0 * math.sqrt(mass * stiffness))

    if zeta == 0.0:
        klass = DampingClass.UNDAMPED
    elif abs(zeta - 1.0) <= CRITICAL_ZETA_TOL:
        klass = DampingClass.CRITICAL
    elif zeta < 1.0:
        klass = DampingClass.UNDERDAMPED
    else:
        klass = DampingClass.OVERDAMPED

    a = -damping / mass
    b = -stiffness / mass
    # Roots of s^2 - a s - b: real pair, repeated, or conjugate pair.
    disc = a * a + 4.0 * b
    if disc >= 0.0:
        root = math.sqrt(disc)
        lam1 = complex((a + root) / 2.0)
        lam2 = complex((a - root) / 2.0)
    else:
        root = cmath.sqrt(complex(disc))
        lam1 = (a + root) / 2.0
        lam2 = (a - root) / 2.0

    return ImpedanceParams(
        mass=mass,
        damping=damping,
        stiffness=stiffness,
        natural_frequency=omega_n,
        damping_ratio=zeta,
        eigenvalues=(lam1, lam2),
        damping_class=klass,
    )


def discretize(params: ImpedanceParams, sample_time: float) -> StateTransition:
    """Zero-order-hold transition matrices for one sample interval.

    Uses the closed form e^(lam*T) * (I + T*(A - lam*I)) for a repeated real
    eigenvalue, spectral decomposition for distinct real eigenvalues, and a
    numeric matrix exponential for a complex pair. In all cases
    b_d = (a_d - I) A^-1 B, which is well defined because stiffness > 0.
    """
    if not (math.isfinite(sample_time) and sample_time > 0.0):
        raise ParameterError(f"sample_time must be positive, got {sample_time!r}")

    a_mat = params.state_matrix()
    lam1, lam2 = params.eigenvalues
    eye = np.eye(2)

    if lam1.imag == 0.0 and lam2.imag == 0.0:
        l1, l2 = lam1.real, lam2.real
        if l1 == l2:
            a_d = math.exp(l1 * sample_time) * (eye + sample_time * (a_mat - l1 * eye))
        else:
            e1 = math.exp(l1 * sample_time)
            e2 = math.exp(l2 * sample_time)
            a_d = (e1 * (a_mat - l2 * eye) - e2 * (a_mat - l1 * eye)) / (l1 - l2)
    else:
        a_d = expm(a_mat * sample_time)

    # A^-1 B = [-1/stiffness, 0]^T for this A, B structure.
    ainv_b = np.array([-1.0 / params.stiffness, 0.0])
    b_d = (a_d - eye) @ ainv_b
    return StateTransition(a_d=a_d, b_d=b_d, sample_time=sample_time)


def external_force(hand_velocity: float, velocity_gain: float) -> float:
    """Force applied to the virtual mass, proportional to hand velocity.

    A negative gain makes the link displace opposite to the hand's motion.
    """
    return velocity_gain * hand_velocity


def step(state: ImpedanceState, force: float, transition: StateTransition) -> ImpedanceState:
    """Advance one sample under constant force; exact for the held force."""
    a_d, b_d = transition.a_d, transition.b_d
    x, v = state.displacement, state.velocity
    nx = a_d[0, 0] * x + a_d[0, 1] * v + b_d[0] * force
    nv = a_d[1, 0] * x + a_d[1, 1] * v + b_d[1] * force
    return ImpedanceState(displacement=nx, velocity=nv)


def saturate(correction: np.ndarray, limits: SaturationLimits) -> np.ndarray:
    """Clamp each axis of the emitted correction to [-limit, +limit].

    Only the emitted value is clamped; callers keep the internal link state
    untouched so release from saturation stays continuous.
    """
    bounds = limits.as_vector()
    return np.clip(np.asarray(correction, dtype=float), -bounds, bounds)
