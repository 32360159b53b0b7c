"""
Anatomy of one impedance interlink
==================================

A single hand-to-drone link is a virtual mass-spring-damper driven by a
force proportional to the hand's velocity. This walkthrough discretizes
the link exactly, drives it with a drag-and-stop velocity profile, and
shows where the equilibrium and the saturation clamp sit.
"""

import os

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from swarmguide.impedance import (
    ImpedanceState,
    SaturationLimits,
    discretize,
    external_force,
    make_impedance_params,
    saturate,
    step,
)

# the tuned link: nearly critically damped, so it follows without ringing
params = make_impedance_params(mass=1.9, damping=12.6, stiffness=21.0)
print(f"damping ratio: {params.damping_ratio:.5f} (1.0 would be exactly critical)")

# discretize once for a 60 Hz loop; the transition is exact for held forces
DT = 1.0 / 60.0
transition = discretize(params, DT)

# hand velocity profile: accelerate to 0.5 m/s, hold, then stop dead
n = 600  # 10 s
hand_velocity = np.zeros(n)
hand_velocity[30:240] = 0.5
hand_velocity[240:300] = np.linspace(0.5, 1.5, 60)  # an over-fast excursion
hand_velocity[300:420] = 1.5
# everything after tick 420 is a hard stop

# run the link: each tick converts hand velocity to a force, steps the
# spring, and clamps what the goal composer is allowed to see
limits = SaturationLimits(0.25, 0.25, 0.25)
raw = np.zeros(n)
emitted = np.zeros(n)
state = ImpedanceState()
for k in range(n):
    force = external_force(hand_velocity[k], velocity_gain=-7.0)
    state = step(state, force, transition)
    raw[k] = state.displacement
    emitted[k] = saturate(np.array([0.0, state.displacement, 0.0]), limits)[1]

t = np.arange(n) * DT
equilibrium = external_force(0.5, -7.0) / params.stiffness
print(f"0.5 m/s equilibrium: {equilibrium:+.4f} m, reached {raw[230]:+.4f} m")
print(f"1.5 m/s would settle at {external_force(1.5, -7.0) / params.stiffness:+.4f} m, "
      f"emitted correction pinned at {emitted[410]:+.4f} m")

# plot: the raw spring state vs. the clamped correction the swarm acts on
fig, (ax_v, ax_x) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
ax_v.plot(t, hand_velocity, color="tab:gray")
ax_v.set_ylabel("hand speed [m/s]")
ax_v.set_title("drag, over-fast excursion, hard stop")

ax_x.plot(t, raw, label="link displacement", color="tab:blue")
ax_x.plot(t, emitted, label="emitted correction (clamped)", color="tab:red")
ax_x.axhline(equilibrium, ls=":", color="tab:blue", lw=1)
ax_x.axhline(-0.25, ls=":", color="tab:red", lw=1)
ax_x.set_xlabel("time [s]")
ax_x.set_ylabel("correction [m]")
ax_x.legend(loc="lower right")

os.makedirs(os.path.join(os.path.dirname(__file__), "out"), exist_ok=True)
out = os.path.join(os.path.dirname(__file__), "out", "link_response.png")
fig.tight_layout()
fig.savefig(out, dpi=120)
print(f"wrote {out}")
