"""Two four-node demand patterns, one cost unit apart, in different regimes.

Both instances live on the same station graph and need almost the same
rebalancing effort, but moving a single trip from the 1->2 lane to the 1->3
lane splits the optimal flow support into two islands. That split is the
combinatorial fingerprint of dual degeneracy: the second instance tolerates
a one-unit translation of the prices on the {1, 2} island, and under random
market splitting its fragmentation cost will grow like sqrt(theta) instead
of vanishing.
"""

import numpy as np

from modfrag import classify_regime, net_flow, solve_demand
from modfrag.instances import (four_node_demand_affected,
                               four_node_demand_resilient, four_node_graph)


def describe(name, graph, demand):
    solution = solve_demand(graph, demand)
    label = classify_regime(graph, demand, 0.5)
    print(f"=== {name} ===")
    print("net flows b :", net_flow(demand).values)
    print("cost RC     :", solution.cost)
    print("support     :", solution.support)
    print("duals alpha :", solution.duals)
    print("regime      :", label.kind)
    cert = label.certificate
    if cert is not None and cert.dual_ranges is not None:
        ranges = np.asarray(cert.dual_ranges)
        print("components  :", [sorted(c) for c in cert.components])
        print("dual ranges :")
        for k, (lo, hi) in enumerate(ranges):
            marker = "  <- free to translate" if hi - lo > 1e-9 else ""
            print(f"  station {k}: [{lo:+.3f}, {hi:+.3f}]{marker}")
    print()


def main():
    graph = four_node_graph()
    describe("single support tree (resilient)", graph,
             four_node_demand_resilient())
    describe("split support (affected)", graph,
             four_node_demand_affected())


if __name__ == "__main__":
    main()
