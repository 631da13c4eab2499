"""Worst-case demand splitting.

The adversary picks, for every positive-demand edge, which firm takes it
wholly; the excess cost f(kappa) = RC(net(kappa * Lambda)) +
RC(net((1 - kappa) * Lambda)) - RC(net(Lambda)) is convex in the split, so
the maximum over fractional splits is attained at a binary corner. Small
instances are settled exactly by corner enumeration; larger ones by a
projected-subgradient heuristic with random restarts, with no optimality
guarantee at convergence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import DemandMatrix, StationGraph, ValidationError, net_flow
from .solver import min_cost_rebalance
from .splitting import trial_rng

BRUTE_FORCE_EDGE_LIMIT = 20


def _check_kappa(kappa, demand):
    k = np.asarray(kappa, dtype=float)
    if k.shape != demand.counts.shape:
        raise ValidationError(
            f"kappa shape {k.shape} does not match demand {demand.counts.shape}")
    binary = np.isin(k, (0.0, 1.0))
    if not binary.all():
        raise ValidationError("kappa entries must be 0 or 1")
    if np.any(k[demand.counts == 0] != 0):
        raise ValidationError("kappa must be zero on zero-demand edges")
    return k


def pof_of_split(graph: StationGraph, demand: DemandMatrix, kappa) -> float:
    """Excess rebalancing cost of the split where firm a takes exactly the
    edges with kappa == 1."""
    k = _check_kappa(kappa, demand)
    counts = demand.counts.astype(float)
    rc_a = min_cost_rebalance(graph, net_flow(k * counts)).cost
    rc_b = min_cost_rebalance(graph, net_flow((1.0 - k) * counts)).cost
    rc = min_cost_rebalance(graph, net_flow(counts)).cost
    return rc_a + rc_b - rc


@dataclass(frozen=True)
class AdversarialResult:
    kappa: np.ndarray
    value: float
    iterations: int
    converged: bool           # fixed point or cycle, vs max_iters hit
    certified_optimal: bool = False

    def to_json(self) -> dict:
        return {"kappa": self.kappa.astype(int).tolist(),
                "value": self.value,
                "iterations": self.iterations,
                "converged": self.converged,
                "certified_optimal": self.certified_optimal}


def adversarial_bruteforce(graph: StationGraph,
                           demand: DemandMatrix) -> AdversarialResult:
    """Exact maximum by enumerating every binary split of the positive edges."""
    edges = list(zip(*np.nonzero(demand.counts > 0)))
    if len(edges) > BRUTE_FORCE_EDGE_LIMIT:
        raise ValidationError(
            f"{len(edges)} positive-demand edges exceed the brute-force "
            f"limit of {BRUTE_FORCE_EDGE_LIMIT}")
    counts = demand.counts.astype(float)
    rc = min_cost_rebalance(graph, net_flow(counts)).cost
    best_val = -np.inf
    best_kappa = np.zeros_like(counts)
    for bits in itertools.product((0.0, 1.0), repeat=len(edges)):
        kappa = np.zeros_like(counts)
        for (i, j), bit in zip(edges, bits):
            kappa[i, j] = bit
        rc_a = min_cost_rebalance(graph, net_flow(kappa * counts)).cost
        rc_b = min_cost_rebalance(graph, net_flow((1.0 - kappa) * counts)).cost
        val = rc_a + rc_b - rc
        if val > best_val + 1e-12:
            best_val = val
            best_kappa = kappa
    return AdversarialResult(kappa=best_kappa, value=float(best_val),
                             iterations=2 ** len(edges), converged=True,
                             certified_optimal=True)


def adversarial_subgradient(graph: StationGraph, demand: DemandMatrix,
                            init_kappa, max_iters: int = 100,
                            seed: int = 0) -> AdversarialResult:
    """Projected-subgradient ascent over the hypercube corners.

    Each iteration solves both firms' LPs, forms the supergradient
    g_ij = Lambda_ij * [(alpha^a_i - alpha^a_j) - (alpha^b_i - alpha^b_j)]
    from their optimal duals, and rounds: kappa_ij -> 1 if g_ij > 0, 0 if
    g_ij < 0, unchanged on ties. Terminates on a fixed point, on a revisited
    corner, or after max_iters; the best value seen is returned (never below
    the initialization's).
    """
    if max_iters < 1:
        raise ValidationError(f"max_iters must be >= 1, got {max_iters}")
    kappa = _check_kappa(init_kappa, demand)
    counts = demand.counts.astype(float)
    positive = demand.counts > 0
    rc = min_cost_rebalance(graph, net_flow(counts)).cost

    best_kappa = kappa.copy()
    best_val = -np.inf
    seen = set()
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        key = kappa.astype(bool).tobytes()
        if key in seen:
            converged = True
            break
        seen.add(key)
        sol_a = min_cost_rebalance(graph, net_flow(kappa * counts))
        sol_b = min_cost_rebalance(graph, net_flow((1.0 - kappa) * counts))
        val = sol_a.cost + sol_b.cost - rc
        if val > best_val:
            best_val = val
            best_kappa = kappa.copy()
        diff_a = sol_a.duals[:, None] - sol_a.duals[None, :]
        diff_b = sol_b.duals[:, None] - sol_b.duals[None, :]
        grad = counts * (diff_a - diff_b)
        nxt = np.where(grad > 0, 1.0, np.where(grad < 0, 0.0, kappa))
        nxt = np.where(positive, nxt, 0.0)
        if np.array_equal(nxt, kappa):
            converged = True
            break
        kappa = nxt
    return AdversarialResult(kappa=best_kappa, value=float(best_val),
                             iterations=iterations, converged=converged)


def adversarial_search(graph: StationGraph, demand: DemandMatrix,
                       restarts: int = 8, max_iters: int = 100,
                       seed: int = 0) -> AdversarialResult:
    """Best subgradient result over seeded random initializations.

    The first restart starts from the all-ones split; the rest start from
    independent random corners keyed by (seed, restart index).
    """
    positive = demand.counts > 0
    best = None
    for r in range(max(1, restarts)):
        if r == 0:
            init = positive.astype(float)
        else:
            rng = trial_rng(seed, r)
            init = np.where(positive, rng.integers(0, 2,
                                                   size=positive.shape), 0.0)
        res = adversarial_subgradient(graph, demand, init,
                                      max_iters=max_iters, seed=seed)
        if best is None or res.value > best.value:
            best = res
    return best
