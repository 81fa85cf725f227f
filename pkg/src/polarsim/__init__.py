"""Agent-based social-network polarization sandbox.

A seeded simulation engine grows a small directed-follow platform of
opinionated agents, a preparation pipeline freezes its final states as
experimental condition snapshots, and a REST newsfeed service lets one
human participant at a time interact with a frozen snapshot under a
configurable recommendation bias.
"""

__version__ = "0.1.0"

from .engine import SimulationConfig, SimulationState, compute_stats, replay_events, run
from .gateway import Gateway, GatewayConfig, LiveMode, StubMode
from .kernels import Rng

__all__ = [
    "Gateway",
    "GatewayConfig",
    "LiveMode",
    "Rng",
    "SimulationConfig",
    "SimulationState",
    "StubMode",
    "compute_stats",
    "replay_events",
    "run",
    "__version__",
]
