"""Canonical benchmark instances used across tests, demos, and the CLI.

The four-node network only pins the costs between surplus stations {1, 2}
and deficit stations {3, 4}; the remaining entries are completed with the
symmetric shortest-path metric over those four undirected edges, which
leaves both optima unchanged.
"""

from __future__ import annotations

import numpy as np

from .model import DemandMatrix, StationGraph

#: tau_13=1, tau_14=3, tau_23=2, tau_24=5, completed by shortest paths
FOUR_NODE_TAU = np.array([
    [0.0, 3.0, 1.0, 3.0],
    [3.0, 0.0, 2.0, 5.0],
    [1.0, 2.0, 0.0, 4.0],
    [3.0, 5.0, 4.0, 0.0],
])


def four_node_graph() -> StationGraph:
    return StationGraph(tau=FOUR_NODE_TAU)


def four_node_demand_resilient() -> DemandMatrix:
    """O-D counts with net flow [2, 3, -4, -1]; RC = 10, spanning support."""
    counts = np.zeros((4, 4), dtype=np.int64)
    counts[0, 2] = 2
    counts[1, 2] = 2
    counts[1, 3] = 1
    return DemandMatrix(counts=counts)


def four_node_demand_affected() -> DemandMatrix:
    """O-D counts with net flow [2, 3, -3, -2]; RC = 12, two support
    components {1, 4} and {2, 3} (1-indexed)."""
    counts = np.zeros((4, 4), dtype=np.int64)
    counts[0, 2] = 2
    counts[1, 2] = 1
    counts[1, 3] = 2
    return DemandMatrix(counts=counts)


def two_node_graph(tau: float = 2.0) -> StationGraph:
    """Two stations with tau_12 = 1 and tau_21 = tau."""
    return StationGraph(tau=[[0.0, 1.0], [float(tau), 0.0]])


def two_node_demand(lam: int, mu: int) -> DemandMatrix:
    return DemandMatrix(counts=[[0, int(lam)], [int(mu), 0]])


def two_node_rc(lam: float, mu: float, tau: float) -> float:
    """Closed-form rebalancing cost max{tau (mu - lam), lam - mu}."""
    return max(tau * (mu - lam), lam - mu)


def heterogeneous_two_node():
    """Balanced two-node demand with edge-dependent market shares; the
    linear-growth coefficient is L = 6 + 12 - 0 = 18."""
    graph = two_node_graph(tau=2.0)
    demand = two_node_demand(10, 10)
    shares = np.array([[0.0, 0.8], [0.2, 0.0]])
    return graph, demand, shares
