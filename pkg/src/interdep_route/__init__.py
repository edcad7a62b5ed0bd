"""Route reliability in interdependent (demand/supply) networks."""
from .model import (
    DemandNode,
    DisconnectedError,
    Network,
    Path,
    PathPair,
    SupplyNode,
    UnknownNodeError,
    build_network,
    line_network,
    node_failure_probability,
    reduce_redundant,
    validate_network,
)

__all__ = [
    "DemandNode",
    "DisconnectedError",
    "Network",
    "Path",
    "PathPair",
    "SupplyNode",
    "UnknownNodeError",
    "build_network",
    "line_network",
    "node_failure_probability",
    "reduce_redundant",
    "validate_network",
]
