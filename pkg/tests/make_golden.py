"""Builds the committed golden trace fixture.

The fixture pins the byte-exact output of a short canonical run: the tick
pipeline's stage order, the estimator, link, goal, PID, and integration
numerics, and the trace serialization all feed into these bytes. Regenerate
only for an intentional, documented behavior change:

    python3 -m tests.make_golden
"""

from __future__ import annotations

import pathlib

from swarmguide.scenario import load_preset
from swarmguide.sim import run_scenario
from swarmguide.traces import trace_csv_text

GOLDEN_PATH = pathlib.Path(__file__).parent / "golden" / "rhombus_short.csv"
N_TICKS = 24


def golden_hand_samples() -> list:
    """Hand accelerates along -Y, reaching 0.9 m/s by the last tick."""
    samples = []
    t = 0.0
    y = 0.0
    for k in range(N_TICKS):
        t = k / 60.0
        v = 0.9 * k / (N_TICKS - 1)
        y -= v / 60.0
        samples.append((t, (0.0, y, 0.0)))
    return samples


def golden_trace_text() -> str:
    scenario = load_preset("rhombus-4")
    trace = run_scenario(scenario, golden_hand_samples(), n_ticks=N_TICKS)
    return trace_csv_text(trace)


def main():
    GOLDEN_PATH.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN_PATH.write_text(golden_trace_text())
    print(f"wrote {GOLDEN_PATH} ({GOLDEN_PATH.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
