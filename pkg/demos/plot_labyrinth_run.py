"""
Guiding a triangle through two pillars
======================================

A straight hand drive would march the formation through both obstacles.
The repulsive field bends each drone's goal just enough to slip past,
and the run log records clearances, events, and the finish marker.
"""

import os

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from swarmguide.scenario import load_preset
from swarmguide.sim import run_scenario

scenario = load_preset("triangle-3-labyrinth")
print(f"scenario: {scenario.name} with {len(scenario.obstacles)} obstacles")

# the operator just drags the hand straight down the corridor at 0.5 m/s
samples = [(0.0, (0.0, 0.0, 0.0)), (12.0, (6.0, 0.0, 0.0))]
trace = run_scenario(scenario, samples)

# clearance bookkeeping: distance from every drone to every safety boundary
clearance = np.full(len(trace.rows), np.inf)
for i, row in enumerate(trace.rows):
    for obstacle in scenario.obstacles:
        d = np.hypot(*(row.positions[:, :2] - np.asarray(obstacle.center)).T)
        clearance[i] = min(clearance[i], float(d.min()) - obstacle.radius)
print(f"worst clearance over the run: {clearance.min():+.3f} m")

for event in trace.events:
    if event.kind in ("marker", "collision"):
        print(f"t={event.t:6.2f} s  {event.kind}: {event.data}")

# plot: drone paths, pillars with their influence rings, and the finish pad
fig, (ax_xy, ax_c) = plt.subplots(
    2, 1, figsize=(9, 7), gridspec_kw={"height_ratios": [3, 1]})
paths = np.array([row.positions for row in trace.rows])  # (ticks, drones, 3)
for d in range(paths.shape[1]):
    ax_xy.plot(paths[:, d, 0], paths[:, d, 1], lw=1.2, label=f"drone {d}")
hand = np.array([row.hand for row in trace.rows])
ax_xy.plot(hand[:, 0], hand[:, 1], color="k", ls="--", lw=1, label="hand")

for obstacle in scenario.obstacles:
    ax_xy.add_patch(plt.Circle(obstacle.center, obstacle.radius,
                               color="tab:red", alpha=0.6))
    ax_xy.add_patch(plt.Circle(obstacle.center, obstacle.radius + obstacle.influence,
                               color="tab:red", alpha=0.12))
if scenario.finish is not None:
    ax_xy.add_patch(plt.Circle(scenario.finish.center, scenario.finish.radius,
                               color="tab:green", alpha=0.25))
ax_xy.set_aspect("equal")
ax_xy.set_xlabel("x [m]")
ax_xy.set_ylabel("y [m]")
ax_xy.legend(loc="upper right", fontsize=8)
ax_xy.set_title("straight drive, bent goals: nobody touches a pillar")

times = np.array([row.t for row in trace.rows])
ax_c.plot(times, clearance, color="tab:red")
ax_c.axhline(0.0, color="k", lw=1)
ax_c.set_xlabel("time [s]")
ax_c.set_ylabel("worst clearance [m]")

os.makedirs(os.path.join(os.path.dirname(__file__), "out"), exist_ok=True)
out = os.path.join(os.path.dirname(__file__), "out", "labyrinth_run.png")
fig.tight_layout()
fig.savefig(out, dpi=120)
print(f"wrote {out}")
