"""Acceptance gate: one test per release criterion, each printing a
single PASS/FAIL line with its headline numbers."""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from modfrag.adversarial import adversarial_bruteforce, adversarial_search
from modfrag.ingest import (degeneracy_survey, parse_corpus_frame,
                            survey_to_csv, two_cluster_corpus)
from modfrag.instances import (four_node_demand_affected,
                               four_node_demand_resilient, four_node_graph,
                               heterogeneous_two_node, two_node_demand,
                               two_node_graph, two_node_rc)
from modfrag.model import DemandMatrix, StationGraph, net_flow
from modfrag.montecarlo import (DECAY_LABEL, estimate_pof, scaling_sweep,
                                two_node_closed_form)
from modfrag.regimes import (classify_regime, dual_degeneracy_oracle,
                             flow_support_components)
from modfrag.solver import (brute_force_rc, min_cost_rebalance, solve_demand)
from modfrag.splitting import SplitSpec

HALF = SplitSpec(family="binomial", shares=0.5, firms=2)
THIRDS = SplitSpec(family="binomial", shares=[1 / 3, 1 / 3, 1 / 3], firms=3)
SWEEP_GRID = [100, 316, 1000, 3162, 10000]
SWEEP_TRIALS = 500
SWEEP_SEED = 7

_cache = {}


def cached(key, build):
    if key not in _cache:
        _cache[key] = build()
    return _cache[key]


@pytest.fixture
def verdict(capfd):
    """Context manager printing one PASS/FAIL line per criterion, bypassing
    output capture so the verdict always reaches the console."""

    @contextmanager
    def criterion(number, summary):
        try:
            yield
        except BaseException:
            with capfd.disabled():
                print(f"[criterion {number}] FAIL: {summary}", flush=True)
            raise
        with capfd.disabled():
            print(f"[criterion {number}] PASS: {summary}", flush=True)

    return criterion


def random_instance(rng, n_max):
    n = int(rng.integers(2, n_max + 1))
    pts = rng.uniform(0.0, 10.0, (n, 2))
    tau = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
    np.fill_diagonal(tau, 0.0)
    b = rng.integers(-4, 5, n).astype(float)
    b[-1] -= b.sum()
    return StationGraph(tau=tau), b


def test_criterion_1_golden_lp_values(verdict):
    with verdict(1, "RC = 4 / 10 / 12 exactly, each solve < 1 ms"):
        g2 = two_node_graph(tau=2.0)
        b2 = net_flow(two_node_demand(3, 5))
        g4 = four_node_graph()
        cases = [
            (g2, b2.values, 4.0),
            (g4, net_flow(four_node_demand_resilient()).values, 10.0),
            (g4, net_flow(four_node_demand_affected()).values, 12.0),
        ]
        assert two_node_rc(3, 5, 2.0) == pytest.approx(4.0, abs=1e-9)
        for graph, b, expected in cases:
            min_cost_rebalance(graph, b)  # warm-up outside the clock
            t0 = time.perf_counter()
            cost = min_cost_rebalance(graph, b).cost
            elapsed = time.perf_counter() - t0
            assert cost == pytest.approx(expected, abs=1e-9)
            assert elapsed < 1e-3, f"solve took {elapsed * 1e3:.3f} ms"


def test_criterion_2_duality_and_structure_suite(verdict):
    with verdict(2, "duality/structure on 200 random instances + oracle"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(2024)
        oracle_checked = 0
        for _ in range(200):
            graph, b = random_instance(rng, n_max=6)
            sol = min_cost_rebalance(graph, b)
            x, alpha, tau = sol.flows, sol.duals, graph.tau
            np.testing.assert_allclose(x.sum(axis=1) - x.sum(axis=0), b,
                                       atol=1e-9)
            assert (x >= -1e-12).all()
            gap = abs(sol.cost - alpha @ b)
            assert gap <= 1e-6 * max(1.0, abs(sol.cost))
            for i, j, _ in sol.support:
                assert abs(alpha[i] - alpha[j] - tau[i, j]) <= 1e-7
            # acyclic support via union-find
            parent = {}

            def find(v):
                parent.setdefault(v, v)
                while parent[v] != v:
                    parent[v] = parent.setdefault(parent[v], parent[v])
                    v = parent[v]
                return v

            for i, j, _ in sol.support:
                ri, rj = find(i), find(j)
                assert ri != rj
                parent[ri] = rj
            # homogeneity and midpoint convexity
            for theta in (3.0,):
                scaled = min_cost_rebalance(graph, theta * b).cost
                assert scaled == pytest.approx(
                    theta * sol.cost, abs=1e-9 * max(1.0, abs(scaled)))
            b2 = np.roll(b, 1)
            mid = min_cost_rebalance(graph, (b + b2) / 2.0).cost
            bound = (sol.cost + min_cost_rebalance(graph, b2).cost) / 2.0
            assert mid <= bound + 1e-9 * max(1.0, abs(bound))
            if graph.n <= 5:
                assert sol.cost == pytest.approx(brute_force_rc(graph, b),
                                                 abs=1e-7)
                oracle_checked += 1
        elapsed = time.perf_counter() - t0
        assert oracle_checked > 50
        assert elapsed < 10.0, f"suite took {elapsed:.1f} s"


def test_criterion_3_regime_trichotomy(verdict):
    with verdict(3, "Resilient / Affected(2 comps, width 1) / "
                      "LinearDivergent L=18; 100/100 oracle agreements"):
        g = four_node_graph()
        assert classify_regime(g, four_node_demand_resilient(), 0.5).kind \
            == "Resilient"
        label = classify_regime(g, four_node_demand_affected(), 0.5)
        assert label.kind == "Affected"
        assert label.certificate.active_component_count == 2
        ranges = np.asarray(label.certificate.dual_ranges)
        widths = ranges[:, 1] - ranges[:, 0]
        assert widths.max() == pytest.approx(1.0, abs=1e-6)

        gh, dh, shares = heterogeneous_two_node()
        het = classify_regime(gh, dh, shares)
        assert het.kind == "LinearDivergent"
        assert het.gap == pytest.approx(18.0, abs=1e-6)

        # perturbed random instances with generic costs and every station
        # active: the combinatorial screen must match the LP oracle
        rng = np.random.default_rng(99)
        agreements = 0
        while agreements < 100:
            n = int(rng.integers(3, 7))
            tau = rng.uniform(1.01, 1.99, (n, n))
            np.fill_diagonal(tau, 0.0)
            counts = rng.integers(0, 4, (n, n))
            np.fill_diagonal(counts, 0)
            d = DemandMatrix(counts=counts)
            b = net_flow(d)
            if np.any(b.values == 0):
                continue
            graph = StationGraph(tau=tau)
            sol = min_cost_rebalance(graph, b)
            comb = flow_support_components(sol, b, d) \
                .active_component_count >= 2
            lp, _ = dual_degeneracy_oracle(graph, b)
            assert comb == lp, "combinatorial and LP degeneracy tests differ"
            agreements += 1


def _crit4_estimate(threads=1):
    g = two_node_graph(tau=1.0)
    d = two_node_demand(8, 8)
    return estimate_pof(g, d, HALF, theta=100, trials=10_000,
                        master_seed=42, threads=threads)


def test_criterion_4_balanced_closed_form(verdict):
    with verdict(4, "two-node Monte Carlo gamma within 5% of 31.9"):
        t0 = time.perf_counter()
        est = cached("crit4", _crit4_estimate)
        elapsed = time.perf_counter() - t0
        pred = two_node_closed_form(8, 8, 1.0, 0.5, 100)
        assert pred.gamma == pytest.approx(31.9, abs=0.1)
        assert est.gamma_mean == pytest.approx(pred.gamma, rel=0.05)
        assert elapsed < 30.0, f"estimate took {elapsed:.1f} s"


def _sweep(which, spec, threads=1):
    g = four_node_graph()
    demand = {"affected": four_node_demand_affected(),
              "resilient": four_node_demand_resilient()}[which]
    return scaling_sweep(g, demand, spec, theta_grid=SWEEP_GRID,
                         trials_per_theta=SWEEP_TRIALS,
                         master_seed=SWEEP_SEED, threads=threads)


def test_criterion_5_scaling_contrast(verdict):
    with verdict(5, "affected slope in [-0.6, -0.4]; resilient decays "
                      "below threshold"):
        t0 = time.perf_counter()
        affected = cached("sweep-affected", lambda: _sweep("affected", HALF))
        resilient = cached("sweep-resilient",
                           lambda: _sweep("resilient", HALF))
        elapsed = time.perf_counter() - t0
        assert -0.6 <= affected.fit.slope <= -0.4
        ratio_a = affected.estimates[-1].gamma_over_theta
        ratio_r = resilient.estimates[-1].gamma_over_theta
        assert ratio_r <= ratio_a / 10.0
        assert resilient.fit.indeterminate
        assert resilient.fit.note == DECAY_LABEL
        assert elapsed < 300.0, f"sweeps took {elapsed:.1f} s"


def test_criterion_6_linear_regime_and_three_firms(verdict):
    with verdict(6, "heterogeneous gamma/theta within 5% of 18; 3-firm "
                      "sweep preserves both labels"):
        gh, dh, shares = heterogeneous_two_node()
        spec = SplitSpec(family="binomial", shares=shares, firms=2)
        est = estimate_pof(gh, dh, spec, theta=10_000, trials=500,
                           master_seed=11)
        assert est.gamma_over_theta == pytest.approx(18.0, rel=0.05)

        affected3 = _sweep("affected", THIRDS)
        resilient3 = _sweep("resilient", THIRDS)
        assert affected3.regime_hint.startswith("affected")
        assert -0.6 <= affected3.fit.slope <= -0.4
        assert resilient3.regime_hint.startswith("resilient")
        assert resilient3.fit.note == DECAY_LABEL


def test_criterion_7_adversarial(verdict):
    with verdict(7, "two-node f*=3 certified; heuristic matches brute "
                      "force on all small bundled instances"):
        g2 = two_node_graph(tau=2.0)
        exact = adversarial_bruteforce(g2, two_node_demand(1, 1))
        assert exact.value == pytest.approx(3.0, abs=1e-9)
        assert exact.certified_optimal

        gh, dh, _ = heterogeneous_two_node()
        g4 = four_node_graph()
        bundled = [
            (g2, two_node_demand(1, 1)),
            (g2, two_node_demand(3, 5)),
            (gh, dh),
            (g4, four_node_demand_resilient()),
            (g4, four_node_demand_affected()),
        ]
        for graph, demand in bundled:
            assert int((demand.counts > 0).sum()) <= 12
            best = adversarial_bruteforce(graph, demand)
            heur = adversarial_search(graph, demand, restarts=8)
            assert heur.value == pytest.approx(best.value, abs=1e-9)
            # nonnegativity of the optimum (empty split achieves 0)
            assert best.value >= -1e-9


def _corpus_trips():
    frame = two_cluster_corpus(seed=2024, hours=48)
    trips, report = parse_corpus_frame(frame)
    assert report.rows_kept == report.rows_read
    return trips


def _survey_rows():
    return degeneracy_survey(cached("trips", _corpus_trips),
                             [10, 20, 40], [60.0], seed=5)


def test_criterion_8_pipeline_property_run(verdict):
    with verdict(8, "engineered corpus >= 90% affected, non-decreasing "
                      "in K over {10, 20, 40}"):
        t0 = time.perf_counter()
        rows = cached("survey", _survey_rows)
        elapsed = time.perf_counter() - t0
        assert [r.stations for r in rows] == [10, 20, 40]
        for row in rows:
            assert row.n_windows >= 40
            assert row.p_affected >= 0.90
        probs = [r.p_affected for r in rows]
        assert all(a <= b + 1e-12 for a, b in zip(probs, probs[1:]))
        assert elapsed < 120.0, f"survey took {elapsed:.1f} s"


def test_criterion_9_byte_identical_determinism(verdict):
    with verdict(9, "criteria 4/5/8 outputs byte-identical on rerun with "
                      "different thread counts"):
        est1 = cached("crit4", _crit4_estimate)
        est2 = _crit4_estimate(threads=4)
        fmt = lambda e: ",".join(format(v, ".12g") for v in
                                 (e.gamma_mean, e.gamma_stderr,
                                  e.gamma_over_theta))
        assert fmt(est1).encode() == fmt(est2).encode()

        sweep1 = cached("sweep-affected", lambda: _sweep("affected", HALF))
        sweep2 = _sweep("affected", HALF, threads=4)
        assert sweep1.to_csv().encode() == sweep2.to_csv().encode()

        rows1 = cached("survey", _survey_rows)
        rows2 = _survey_rows()
        assert survey_to_csv(rows1).encode() == survey_to_csv(rows2).encode()
