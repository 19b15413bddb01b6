"""Queue-aware dynamic base-station clustering and power allocation for
multicell network MIMO, with exact small-instance references and CSI-only
baselines."""

from .config import SCHEMES, SimConfig
from .harness import Metrics, run_episode, run_sweep
from .topology import NetworkTopology, PatternCatalog, build_hex_topology, enumerate_patterns

__all__ = [
    "SCHEMES",
    "SimConfig",
    "Metrics",
    "run_episode",
    "run_sweep",
    "NetworkTopology",
    "PatternCatalog",
    "build_hex_topology",
    "enumerate_patterns",
]

__version__ = "0.1.0"
