import numpy as np
import pytest

from modfrag.instances import (four_node_demand_affected,
                               four_node_demand_resilient, four_node_graph,
                               heterogeneous_two_node, two_node_demand,
                               two_node_graph)
from modfrag.model import DemandMatrix, StationGraph, net_flow
from modfrag.regimes import (classify_regime, dual_degeneracy_oracle,
                             fleet_lower_bound, flow_support_components,
                             heterogeneity_gap)
from modfrag.solver import min_cost_rebalance, solve_demand


def test_resilient_instance_has_unique_duals():
    g = four_node_graph()
    b = net_flow(four_node_demand_resilient())
    degenerate, ranges = dual_degeneracy_oracle(g, b)
    assert not degenerate
    np.testing.assert_allclose(ranges[:, 0], ranges[:, 1], atol=1e-7)
    np.testing.assert_allclose(ranges[:, 0], [0.0, 1.0, -1.0, -3.0],
                               atol=1e-7)


def test_affected_instance_dual_ranges():
    g = four_node_graph()
    b = net_flow(four_node_demand_affected())
    degenerate, ranges = dual_degeneracy_oracle(g, b)
    assert degenerate
    widths = ranges[:, 1] - ranges[:, 0]
    # the free component {1, 2} can translate by exactly one cost unit
    np.testing.assert_allclose(widths, [0.0, 1.0, 1.0, 0.0], atol=1e-7)


def test_support_component_certificate():
    g = four_node_graph()
    d = four_node_demand_affected()
    b = net_flow(d)
    cert = flow_support_components(solve_demand(g, d), b, d)
    assert cert.active_component_count == 2
    assert set(map(frozenset, cert.components)) == {frozenset({0, 3}),
                                                    frozenset({1, 2})}
    assert cert.cross_demand > 0


def test_classify_regime_trichotomy():
    g = four_node_graph()
    assert classify_regime(g, four_node_demand_resilient(), 0.5).kind \
        == "Resilient"
    assert classify_regime(g, four_node_demand_affected(), 0.5).kind \
        == "Affected"
    gh, dh, shares = heterogeneous_two_node()
    label = classify_regime(gh, dh, shares)
    assert label.kind == "LinearDivergent"
    assert label.gap == pytest.approx(18.0, abs=1e-6)


def test_heterogeneity_gap_zero_for_scalar_shares():
    g = four_node_graph()
    d = four_node_demand_affected()
    assert heterogeneity_gap(g, d, 0.3) == pytest.approx(0.0, abs=1e-9)
    assert heterogeneity_gap(g, d, [0.2, 0.3, 0.5]) == pytest.approx(
        0.0, abs=1e-9)


def test_heterogeneous_fixture_gap_value():
    g, d, shares = heterogeneous_two_node()
    assert heterogeneity_gap(g, d, shares) == pytest.approx(18.0, abs=1e-9)


def test_fleet_lower_bound_two_node():
    # service time lam * tau_01 + mu * tau_10 plus the rebalancing cost
    g = two_node_graph(tau=2.0)
    d = two_node_demand(3, 5)
    assert fleet_lower_bound(g, d) == pytest.approx(3 * 1 + 5 * 2 + 4.0,
                                                    abs=1e-9)


def test_combinatorial_screen_matches_lp_oracle():
    # generic costs and fully active stations: the support-component screen
    # and the dual-range LP must agree on every instance
    rng = np.random.default_rng(123)
    checked = 0
    while checked < 100:
        n = int(rng.integers(3, 7))
        tau = rng.uniform(1.01, 1.99, (n, n))
        np.fill_diagonal(tau, 0.0)
        counts = rng.integers(0, 4, (n, n))
        np.fill_diagonal(counts, 0)
        d = DemandMatrix(counts=counts)
        b = net_flow(d)
        if np.any(b.values == 0):
            continue
        g = StationGraph(tau=tau)
        sol = min_cost_rebalance(g, b)
        comb = flow_support_components(sol, b, d).active_component_count >= 2
        lp, _ = dual_degeneracy_oracle(g, b)
        assert comb == lp
        checked += 1
    assert checked == 100
