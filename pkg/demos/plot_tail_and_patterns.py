"""
Tail stretch, formation states, and glove patterns
==================================================

Dragging the rhombus fast elongates it link by link — the tail lags the
most. Turning while stretched leaves the old trail hanging off to one
side, which is exactly what the glove reports: the formation state plus
the side the swarm hangs on picks a fingertip pattern.
"""

import os

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from swarmguide.scenario import load_preset
from swarmguide.sim import run_scenario
from swarmguide.tactile import encode_pattern

DT = 1.0 / 60.0
scenario = load_preset("rhombus-4")

# hand path: fast drag along -Y for 2 s, then a sharp turn onto -X
samples = [(0.0, np.zeros(3))]
pos = np.zeros(3)
for k in range(1, 121):
    pos = pos + np.array([0.0, -1.2 * DT, 0.0])
    samples.append((k * DT, pos.copy()))
for k in range(121, 241):
    pos = pos + np.array([-1.2 * DT, 0.0, 0.0])
    samples.append((k * DT, pos.copy()))
samples.append((6.0, pos.copy()))

trace = run_scenario(scenario, samples)
starts = [e for e in trace.events if e.kind == "pattern_start"]
print("patterns fired:")
for event in starts:
    print(f"  t={event.t:5.2f} s  {event.data['pattern']} "
          f"(state {event.data['label']}, side {event.data['sign']:+.0f})")

# panel 1: per-drone Y tracks show the cascade opening and closing
fig, (ax_y, ax_p) = plt.subplots(2, 1, figsize=(9, 7),
                                 gridspec_kw={"height_ratios": [2, 1]})
times = np.array([row.t for row in trace.rows])
ys = np.array([row.positions[:, 1] for row in trace.rows])
for d in range(ys.shape[1]):
    ax_y.plot(times, ys[:, d], label=f"drone {d}")
ax_y.plot(times, [row.hand[1] for row in trace.rows], "k--", lw=1, label="hand")

# shade the ticks where the classifier left the Regular band
labels = [row.label for row in trace.rows]
in_band = None
for i, label in enumerate(labels + ["Regular"]):
    if label != "Regular" and in_band is None:
        in_band = i
    elif label == "Regular" and in_band is not None:
        ax_y.axvspan(times[in_band], times[min(i, len(times) - 1)],
                     color="tab:orange", alpha=0.15)
        in_band = None
ax_y.set_ylabel("y [m]")
ax_y.legend(loc="upper right", fontsize=8)
ax_y.set_title("shaded: formation classified away from Regular")

# panel 2: the first fired pattern as a finger-by-finger timeline
if starts:
    pattern = encode_pattern(starts[0].data["pattern"])
    edges = np.cumsum([0] + [f.duration_ms for f in pattern.frames])
    grid = np.zeros((5, len(pattern.frames)))
    for j, frame in enumerate(pattern.frames):
        grid[:, j] = frame.levels
    mesh = ax_p.pcolormesh(edges, np.arange(6), grid, cmap="inferno",
                           vmin=0, vmax=250)
    fig.colorbar(mesh, ax=ax_p, label="frequency [Hz]")
    ax_p.set_yticks(np.arange(5) + 0.5,
                    [f"finger {i}" for i in range(1, 6)])
    ax_p.set_xlabel("time within pattern [ms]")
    ax_p.set_title(f"pattern {pattern.id}: {pattern.total_duration_ms} ms")

os.makedirs(os.path.join(os.path.dirname(__file__), "out"), exist_ok=True)
out = os.path.join(os.path.dirname(__file__), "out", "tail_and_patterns.png")
fig.tight_layout()
fig.savefig(out, dpi=120)
print(f"wrote {out}")
