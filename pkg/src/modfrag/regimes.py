"""Fragmentation-regime classification.

A demand instance is fragmentation-affected exactly when the rebalancing LP
is dual-degenerate (multiple optimal price vectors beyond the universal
uniform shift). Two tests are provided:

* the authoritative LP test: per-station ranges of optimal prices, and
* the fast combinatorial screen: the positive-flow support splitting into
  two or more weakly connected components over the active stations.

Heterogeneous market shares add a third regime: when the expected per-firm
demands pull the optimum to different dual corner points, the excess cost
grows linearly with a coefficient L computed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .model import (DemandMatrix, NetFlowVector, StationGraph,
                    ValidationError, net_flow)
from .solver import RebalanceSolution, min_cost_rebalance
from .splitting import share_matrices


@dataclass(frozen=True)
class DegeneracyCertificate:
    components: tuple       # tuple of frozensets over active stations
    inactive: frozenset     # stations with zero net flow and no support
    dual_ranges: np.ndarray | None  # (n, 2) [min, max] of optimal prices
    cross_demand: int       # total trips between distinct components

    @property
    def active_component_count(self) -> int:
        return len(self.components)

    @property
    def all_station_component_count(self) -> int:
        # the raw count over all of V: inactive stations are singletons
        return len(self.components) + len(self.inactive)

    def to_json(self) -> dict:
        return {
            "components": [sorted(c) for c in self.components],
            "inactive": sorted(self.inactive),
            "dual_ranges": None if self.dual_ranges is None
            else self.dual_ranges.tolist(),
            "cross_demand": self.cross_demand,
        }


@dataclass(frozen=True)
class RegimeLabel:
    kind: str               # "Resilient" | "Affected" | "LinearDivergent"
    certificate: DegeneracyCertificate | None = None
    gap: float | None = None   # L, for heterogeneous shares

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "L": self.gap,
            "certificate": None if self.certificate is None
            else self.certificate.to_json(),
        }


def flow_support_components(solution: RebalanceSolution, b,
                            demand: DemandMatrix | None = None) -> DegeneracyCertificate:
    """Weakly connected components of the flow support over active stations.

    Active stations are those with nonzero net flow or incident support
    flow; the rest are reported separately so the raw all-station component
    count stays recoverable.
    """
    bv = b.values if isinstance(b, NetFlowVector) else np.asarray(b, float)
    n = len(bv)
    eps = 1e-9 * max(1.0, float(np.abs(bv).sum()))
    active = set(np.nonzero(np.abs(bv) > eps)[0].tolist())
    adj = {i: set() for i in range(n)}
    for i, j, _ in solution.support:
        active.add(i)
        active.add(j)
        adj[i].add(j)
        adj[j].add(i)
    components = []
    seen = set()
    for start in sorted(active):
        if start in seen:
            continue
        comp = set()
        stack = [start]
        while stack:
            v = stack.pop()
            if v in comp:
                continue
            comp.add(v)
            stack.extend(adj[v] - comp)
        seen |= comp
        components.append(frozenset(comp))
    cross = 0
    if demand is not None and len(components) > 1:
        label = {}
        for ci, comp in enumerate(components):
            for v in comp:
                label[v] = ci
        for i in range(n):
            for j in range(n):
                if i in label and j in label and label[i] != label[j]:
                    cross += int(demand.counts[i, j])
    return DegeneracyCertificate(components=tuple(components),
                                 inactive=frozenset(range(n)) - seen,
                                 dual_ranges=None,
                                 cross_demand=cross)


def dual_degeneracy_oracle(graph: StationGraph, b):
    """Authoritative LP degeneracy test.

    For each station k, maximizes and minimizes alpha_k over the optimal
    face of the dual polytope (feasibility, alpha_0 = 0, objective pinned at
    RC(b)). Degenerate iff any range is wider than the tolerance.
    Returns (degenerate, ranges) with ranges of shape (n, 2).
    """
    bv = b.values if isinstance(b, NetFlowVector) else np.asarray(b, float)
    n = graph.n
    rc = min_cost_rebalance(graph, bv).cost

    rows = []
    rhs = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            row = np.zeros(n)
            row[i] = 1.0
            row[j] = -1.0
            rows.append(row)
            rhs.append(graph.tau[i, j])
    a_ub = np.array(rows)
    b_ub = np.array(rhs)
    anchor = np.zeros(n)
    anchor[0] = 1.0
    a_eq = np.vstack([anchor, bv])
    b_eq = np.array([0.0, rc])

    ranges = np.zeros((n, 2))
    ranges[0] = 0.0
    for k in range(1, n):
        c = np.zeros(n)
        c[k] = 1.0
        lo = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                     bounds=(None, None), method="highs")
        hi = linprog(-c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                     bounds=(None, None), method="highs")
        if not (lo.success and hi.success):
            raise RuntimeError(
                f"dual range LP failed at station {k}: {lo.message} / {hi.message}")
        ranges[k] = (lo.fun, -hi.fun)
    tol = 1e-6 * max(1.0, float(np.max(graph.tau)))
    degenerate = bool(np.any(ranges[:, 1] - ranges[:, 0] > tol))
    return degenerate, ranges


def heterogeneity_gap(graph: StationGraph, demand: DemandMatrix, shares) -> float:
    """Linear-growth coefficient L = sum_k RC(net(rho_k * Lambda)) - RC(net(Lambda)).

    Zero for any global scalar share split (by homogeneity of RC); strictly
    positive when the expected per-firm demands sit in different dual cones.
    """
    mats, _ = share_matrices(shares, demand.n)
    counts = demand.counts.astype(float)
    total = min_cost_rebalance(graph, net_flow(counts)).cost
    per_firm = sum(
        min_cost_rebalance(graph, net_flow(m * counts)).cost for m in mats)
    return per_firm - total


def classify_regime(graph: StationGraph, demand: DemandMatrix, shares) -> RegimeLabel:
    """Regime trichotomy for a demand instance under the given market shares.

    Homogeneous shares: Affected iff the monopolist demand is dual-degenerate,
    else Resilient. Heterogeneous shares: LinearDivergent when L exceeds
    tolerance; otherwise Affected iff any firm's expected demand is
    dual-degenerate, else Resilient.
    """
    mats, homogeneous = share_matrices(shares, demand.n)
    counts = demand.counts.astype(float)
    b = net_flow(demand)
    solution = min_cost_rebalance(graph, b)
    cert = flow_support_components(solution, b, demand)

    if homogeneous:
        degenerate, ranges = dual_degeneracy_oracle(graph, b)
        cert = DegeneracyCertificate(components=cert.components,
                                     inactive=cert.inactive,
                                     dual_ranges=ranges,
                                     cross_demand=cert.cross_demand)
        return RegimeLabel(kind="Affected" if degenerate else "Resilient",
                           certificate=cert, gap=0.0)

    gap = heterogeneity_gap(graph, demand, shares)
    eps_l = 1e-6 * max(1.0, solution.cost)
    if gap > eps_l:
        return RegimeLabel(kind="LinearDivergent", certificate=cert, gap=gap)
    for m in mats:
        degenerate, ranges = dual_degeneracy_oracle(graph, net_flow(m * counts))
        if degenerate:
            cert = DegeneracyCertificate(components=cert.components,
                                         inactive=cert.inactive,
                                         dual_ranges=ranges,
                                         cross_demand=cert.cross_demand)
            return RegimeLabel(kind="Affected", certificate=cert, gap=gap)
    return RegimeLabel(kind="Resilient", certificate=cert, gap=gap)


def fleet_lower_bound(graph: StationGraph, demand: DemandMatrix) -> float:
    """Minimum fleet-time needed to serve all demand and rebalance:
    sum_ij Lambda_ij tau_ij + RC(Lambda)."""
    service = float(np.sum(demand.counts * graph.tau))
    rc = min_cost_rebalance(graph, net_flow(demand)).cost
    return service + rc
