"""Monte Carlo fragmentation cost against the two-node closed form.

For a balanced two-station market (lam = mu) split 50/50 between two firms,
the expected excess rebalancing cost has an explicit asymptotic value:
(tau + 1) * sqrt(2 theta rho (1 - rho) (lam + mu) / pi). The simulation
tracks it within a couple of percent already at theta = 100. Unbalancing the
demand (lam != mu) pushes the instance strictly inside a dual cone and the
same estimator collapses to zero exponentially fast.
"""

from modfrag import estimate_pof, two_node_closed_form
from modfrag.instances import two_node_demand, two_node_graph
from modfrag.splitting import SplitSpec

HALF = SplitSpec(family="binomial", shares=0.5, firms=2)


def main():
    graph = two_node_graph(tau=1.0)
    balanced = two_node_demand(8, 8)
    print("balanced lam = mu = 8, tau = 1, rho = 1/2")
    print(f"{'theta':>7} {'simulated':>12} {'predicted':>12} {'rel err':>8}")
    for theta in (50, 100, 200, 400):
        est = estimate_pof(graph, balanced, HALF, theta=theta, trials=4000,
                           master_seed=42)
        pred = two_node_closed_form(8, 8, 1.0, 0.5, theta)
        rel = abs(est.gamma_mean / pred.gamma - 1.0)
        print(f"{theta:>7} {est.gamma_mean:>12.3f} {pred.gamma:>12.3f} "
              f"{rel:>8.2%}")

    print()
    print("unbalanced lam = 9, mu = 4: exponential decay")
    skew = two_node_demand(9, 4)
    pred = two_node_closed_form(9, 4, 1.0, 0.5, 100)
    print(f"decay exponent r = {pred.decay_rate:.4f}")
    for theta in (10, 30, 100):
        est = estimate_pof(graph, skew, HALF, theta=theta, trials=4000,
                           master_seed=42)
        print(f"theta {theta:>4}: gamma = {est.gamma_mean:.4f}"
              f" (stderr {est.gamma_stderr:.4f})")


if __name__ == "__main__":
    main()
