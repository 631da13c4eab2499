"""Exact min-cost rebalancing solver.

Because the travel costs obey the triangle inequality, the circulation
problem reduces to a transportation problem shipping directly from surplus
stations (b_i > 0) to deficit stations (b_j < 0): any multi-hop rebalancing
route can be shortcut without increasing cost. The transportation problem is
solved by the primal simplex with Bland's rule (lowest-index entering and
leaving edge), which makes the returned flow, and hence the reported support,
deterministic for a given input.

Station prices are then recovered as shortest-path potentials on the residual
graph of the optimal flow, which yields duals feasible for *every* ordered
station pair (not just surplus-deficit ones) and tight on the flow support.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import (FLOW_TOL, NetFlowVector, StationGraph, ValidationError,
                    net_flow)

_MAX_PIVOTS = 100_000


@dataclass(frozen=True)
class RebalanceSolution:
    """Optimal rebalancing flows, station prices, and cost."""

    flows: np.ndarray          # n x n, x[i, j] >= 0
    duals: np.ndarray          # length n, anchored at alpha[0] = 0
    cost: float
    support: tuple             # ((i, j, flow), ...) with flow > eps, sorted

    @property
    def n(self) -> int:
        return self.flows.shape[0]

    def support_edges(self):
        return [(i, j) for i, j, _ in self.support]

    def to_json(self) -> dict:
        return {
            "cost": self.cost,
            "flows": self.flows.tolist(),
            "duals": self.duals.tolist(),
            "support": [[i, j, f] for i, j, f in self.support],
        }


def _flow_eps(b: np.ndarray) -> float:
    return FLOW_TOL * max(1.0, float(np.abs(b).sum()))


def _northwest_corner(supply, demand):
    """Initial basic feasible solution; returns (allocation, basis edges)."""
    m, k = len(supply), len(demand)
    s = supply.astype(float).copy()
    d = demand.astype(float).copy()
    x = np.zeros((m, k))
    basis = []
    i = j = 0
    while True:
        q = min(s[i], d[j])
        x[i, j] = q
        basis.append((i, j))
        s[i] -= q
        d[j] -= q
        if i == m - 1 and j == k - 1:
            break
        if i == m - 1:
            j += 1
        elif j == k - 1:
            i += 1
        elif s[i] <= d[j]:
            i += 1
        else:
            j += 1
    return x, basis


def _basis_duals(cost, basis, m, k):
    """u_i + v_j = cost[i, j] on every basis edge, u_0 = 0."""
    u = np.full(m, np.nan)
    v = np.full(k, np.nan)
    u[0] = 0.0
    row_edges = [[] for _ in range(m)]
    col_edges = [[] for _ in range(k)]
    for i, j in basis:
        row_edges[i].append(j)
        col_edges[j].append(i)
    stack = [("r", 0)]
    while stack:
        kind, idx = stack.pop()
        if kind == "r":
            for j in row_edges[idx]:
                if np.isnan(v[j]):
                    v[j] = cost[idx, j] - u[idx]
                    stack.append(("c", j))
        else:
            for i in col_edges[idx]:
                if np.isnan(u[i]):
                    u[i] = cost[i, idx] - v[idx]
                    stack.append(("r", i))
    return u, v


def _basis_cycle(basis, enter):
    """Alternating row/column cycle closed by the entering edge.

    Returns the cycle as a list of edges starting with ``enter``; odd
    positions give up flow when the entering edge is increased.
    """
    # path in the basis tree from enter's row-node to its column-node
    adj = {}
    for i, j in basis:
        adj.setdefault(("r", i), []).append((("c", j), (i, j)))
        adj.setdefault(("c", j), []).append((("r", i), (i, j)))
    start, goal = ("r", enter[0]), ("c", enter[1])
    prev = {start: (None, None)}
    queue = [start]
    while queue:
        node = queue.pop(0)
        if node == goal:
            break
        for nxt, edge in adj.get(node, ()):
            if nxt not in prev:
                prev[nxt] = (node, edge)
                queue.append(nxt)
    path = []
    node = goal
    while node != start:
        node, edge = prev[node]
        path.append(edge)
    path.reverse()
    return [enter] + path[::-1]


def _transport_simplex(cost, supply, demand):
    """Primal transportation simplex with Bland's rule.

    cost: (m, k) matrix; supply, demand: positive, equal totals.
    Returns (allocation, basis) at optimality.
    """
    m, k = cost.shape
    x, basis = _northwest_corner(supply, demand)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(cost)))) \
        * max(1.0, float(supply.sum()))
    for _ in range(_MAX_PIVOTS):
        u, v = _basis_duals(cost, basis, m, k)
        reduced = cost - u[:, None] - v[None, :]
        candidates = np.argwhere(reduced < -tol)
        if candidates.size == 0:
            return x, basis
        enter = tuple(int(c) for c in candidates[0])  # lowest (i, j): Bland
        cycle = _basis_cycle(basis, enter)
        leaving_edges = cycle[1::2]  # these decrease as enter increases
        theta = min(x[e] for e in leaving_edges)
        leave = min(e for e in leaving_edges if x[e] == theta)
        for pos, e in enumerate(cycle):
            x[e] += theta if pos % 2 == 0 else -theta
        basis.remove(leave)
        basis.append(enter)
        basis.sort()
        x[leave] = 0.0
    raise RuntimeError("transportation simplex failed to converge "
                       f"within {_MAX_PIVOTS} pivots")


def _residual_duals(tau, flows, eps):
    """Potentials alpha with alpha_i - alpha_j <= tau_ij everywhere and
    equality on the flow support, via Bellman-Ford from station 0."""
    n = tau.shape[0]
    w = tau.copy()
    pos = np.argwhere(flows > eps)
    for i, j in pos:
        w[j, i] = min(w[j, i], -tau[i, j])
    np.fill_diagonal(w, 0.0)
    dist = np.full(n, np.inf)
    dist[0] = 0.0
    for _ in range(n):
        relaxed = np.min(dist[:, None] + w, axis=0)
        new = np.minimum(dist, relaxed)
        if np.array_equal(new, dist):
            break
        dist = new
    return -dist


def min_cost_rebalance(graph: StationGraph, b) -> RebalanceSolution:
    """Solve the min-cost circulation for net flow b on the given network."""
    if isinstance(b, NetFlowVector):
        bv = b.values
    else:
        bv = np.asarray(b, dtype=float)
        tol = FLOW_TOL * max(1.0, float(np.abs(bv).sum()))
        if abs(bv.sum()) > tol:
            raise ValidationError(
                f"net flow must sum to zero, got {bv.sum():.3e}")
    if bv.shape[0] != graph.n:
        raise ValidationError(
            f"net flow length {bv.shape[0]} does not match graph size {graph.n}")

    n = graph.n
    eps = _flow_eps(bv)
    flows = np.zeros((n, n))
    surplus = np.nonzero(bv > eps)[0]
    deficit = np.nonzero(bv < -eps)[0]
    cost = 0.0
    if surplus.size:
        sub_cost = graph.tau[np.ix_(surplus, deficit)]
        x, _ = _transport_simplex(sub_cost, bv[surplus], -bv[deficit])
        flows[np.ix_(surplus, deficit)] = x
        cost = float(np.sum(sub_cost * x))
    duals = _residual_duals(graph.tau, flows, eps)
    duals = duals - duals[0]
    support = tuple(sorted((int(i), int(j), float(flows[i, j]))
                           for i, j in zip(*np.nonzero(flows > eps))))
    return RebalanceSolution(flows=flows, duals=duals, cost=cost,
                             support=support)


def rebalance_cost(graph: StationGraph, b) -> float:
    """Just the optimal cost RC(b)."""
    return min_cost_rebalance(graph, b).cost


def normalize_duals(solution: RebalanceSolution, anchor: int) -> RebalanceSolution:
    """Shift station prices so the anchor's price is zero.

    A uniform shift keeps every dual constraint and the objective unchanged
    because net flows sum to zero.
    """
    shift = solution.duals[anchor]
    return RebalanceSolution(flows=solution.flows,
                             duals=solution.duals - shift,
                             cost=solution.cost,
                             support=solution.support)


def brute_force_rc(graph: StationGraph, b) -> float:
    """Independent oracle: optimum over all spanning-tree basic solutions
    of the surplus-to-deficit transportation reformulation. n <= 6 only."""
    bv = b.values if isinstance(b, NetFlowVector) else np.asarray(b, dtype=float)
    if graph.n > 6:
        raise ValidationError(f"brute_force_rc accepts n <= 6, got n={graph.n}")
    eps = _flow_eps(bv)
    surplus = np.nonzero(bv > eps)[0]
    deficit = np.nonzero(bv < -eps)[0]
    if not surplus.size:
        return 0.0
    m, k = len(surplus), len(deficit)
    supply = bv[surplus]
    demand = -bv[deficit]
    edges = list(itertools.product(range(m), range(k)))
    best = np.inf
    for tree in itertools.combinations(edges, m + k - 1):
        flows = _solve_tree(tree, supply, demand, m, k)
        if flows is None:
            continue
        cost = sum(graph.tau[surplus[i], deficit[j]] * f
                   for (i, j), f in flows.items())
        best = min(best, cost)
    return float(best)


def _solve_tree(tree, supply, demand, m, k):
    """Unique flow on a candidate spanning tree, or None if the edge set is
    not a spanning tree or some flow goes negative."""
    deg = {}
    for i, j in tree:
        deg[("r", i)] = deg.get(("r", i), 0) + 1
        deg[("c", j)] = deg.get(("c", j), 0) + 1
    if len(deg) != m + k:
        return None
    residual_s = list(supply)
    residual_d = list(demand)
    remaining = set(tree)
    flows = {}
    # peel leaves; a spanning tree resolves completely
    while remaining:
        leaf = None
        for e in remaining:
            i, j = e
            if deg[("r", i)] == 1 or deg[("c", j)] == 1:
                leaf = e
                break
        if leaf is None:
            return None  # contains a cycle
        i, j = leaf
        if deg[("r", i)] == 1:
            f = residual_s[i]
        else:
            f = residual_d[j]
        if f < -1e-9 * max(1.0, float(sum(supply))):
            return None
        flows[leaf] = f
        residual_s[i] -= f
        residual_d[j] -= f
        deg[("r", i)] -= 1
        deg[("c", j)] -= 1
        remaining.discard(leaf)
    if any(f < -1e-9 for f in flows.values()):
        return None
    return flows


def solve_demand(graph: StationGraph, demand) -> RebalanceSolution:
    """Convenience wrapper: solve directly from a demand matrix."""
    return min_cost_rebalance(graph, net_flow(demand))
