import numpy as np
import pytest

from modfrag.instances import four_node_demand_affected, two_node_demand
from modfrag.model import ValidationError
from modfrag.splitting import (SplitSpec, expected_split, sample_split,
                               share_matrices, trial_rng)


def test_share_matrices_scalar():
    mats, homogeneous = share_matrices(0.3, 3)
    assert homogeneous
    assert len(mats) == 2
    np.testing.assert_allclose(mats[0] + mats[1], np.ones((3, 3)))
    np.testing.assert_allclose(mats[0], 0.3)


def test_share_matrices_list_and_matrix():
    mats, homogeneous = share_matrices([0.2, 0.3, 0.5], 2)
    assert homogeneous
    assert len(mats) == 3
    np.testing.assert_allclose(sum(mats), np.ones((2, 2)))

    rho = [[0.0, 0.8], [0.2, 0.0]]
    mats, homogeneous = share_matrices(rho, 2)
    assert not homogeneous
    np.testing.assert_allclose(mats[0], rho)
    np.testing.assert_allclose(mats[0] + mats[1], np.ones((2, 2)))


def test_share_matrices_rejects_bad_input():
    with pytest.raises(ValidationError):
        share_matrices(1.5, 2)
    with pytest.raises(ValidationError):
        share_matrices([0.5, 0.6], 2)  # does not sum to 1


def test_trial_rng_independent_streams():
    a = trial_rng(42, 0).integers(0, 1 << 30, 8)
    b = trial_rng(42, 1).integers(0, 1 << 30, 8)
    a2 = trial_rng(42, 0).integers(0, 1 << 30, 8)
    np.testing.assert_array_equal(a, a2)
    assert not np.array_equal(a, b)


def test_binomial_split_partitions_exactly():
    d = four_node_demand_affected()
    spec = SplitSpec(family="binomial", shares=0.5, firms=2)
    for trial in range(20):
        s = sample_split(d, spec, theta=37, seed=trial_rng(7, trial))
        np.testing.assert_array_equal(s.realized_total, 37 * d.counts)
        for firm in s.firms:
            assert (firm.counts >= 0).all()


def test_binomial_three_firm_partition():
    d = four_node_demand_affected()
    spec = SplitSpec(family="binomial", shares=[0.2, 0.3, 0.5], firms=3)
    s = sample_split(d, spec, theta=50, seed=trial_rng(7, 0))
    assert len(s.firms) == 3
    np.testing.assert_array_equal(s.realized_total, 50 * d.counts)


def test_poisson_split_means():
    d = two_node_demand(6, 6)
    spec = SplitSpec(family="poisson", shares=0.5, firms=2)
    theta = 200
    totals = np.zeros((2, 2))
    reps = 400
    for trial in range(reps):
        s = sample_split(d, spec, theta=theta, seed=trial_rng(11, trial))
        totals += s.firms[0].counts
    mean = totals / reps
    expected = 0.5 * theta * d.counts
    # Poisson relative sd at these scales is ~4%, allow 5 sigma
    np.testing.assert_allclose(mean, expected, rtol=0.1)


def test_fluctuation_scaling():
    d = two_node_demand(8, 8)
    spec = SplitSpec(family="binomial", shares=0.5, firms=2)
    zs = []
    for trial in range(300):
        s = sample_split(d, spec, theta=400, seed=trial_rng(5, trial))
        zs.append(s.fluctuation[0, 1])
    # Z = (firm_a - theta rho Lambda)/sqrt(theta) has variance
    # rho (1-rho) Lambda = 2 on the lam edge
    assert np.std(zs) == pytest.approx(np.sqrt(2.0), rel=0.2)
    assert abs(np.mean(zs)) < 0.3


def test_expected_split_net_flows():
    d = four_node_demand_affected()
    spec = SplitSpec(family="binomial", shares=0.5, firms=2)
    nets = expected_split(d, spec, theta=10)
    assert len(nets) == 2
    np.testing.assert_allclose(nets[0].values, nets[1].values)
    np.testing.assert_allclose(nets[0].values, [10.0, 15.0, -15.0, -10.0])


def test_sample_split_rejects_bad_theta():
    d = two_node_demand(1, 1)
    spec = SplitSpec(family="binomial", shares=0.5, firms=2)
    with pytest.raises(ValidationError):
        sample_split(d, spec, theta=0, seed=0)
