"""Hand-guided swarm formation simulator with tactile guidance feedback.

The package is organized around a deterministic fixed-step world:

- :mod:`swarmguide.impedance` — the hand-to-drone / drone-to-drone links
  (exactly discretized mass-spring-dampers with saturation)
- :mod:`swarmguide.formation` — formation geometry, default slots, links
- :mod:`swarmguide.apf` — repulsive obstacle fields and velocity clamps
- :mod:`swarmguide.tactile` — formation classification and the glove
  pattern library/selector
- :mod:`swarmguide.sim` — PID tracking, the eight-stage tick pipeline,
  and whole-scenario runs
- :mod:`swarmguide.traces` / :mod:`swarmguide.metrics` — run logs and
  summary statistics
- :mod:`swarmguide.scenario` — validated scenario documents and presets
- :mod:`swarmguide.server` — the WebSocket session server
- :mod:`swarmguide.cli` — the ``sim`` command-line entry point
"""

__version__ = "0.1.0"
