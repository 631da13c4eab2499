import json

import numpy as np
import pytest

from modfrag.model import (DemandMatrix, NetFlowVector, StationGraph,
                           ValidationError, load_json_file, net_flow,
                           scale_demand, validate_graph)


def test_station_graph_rejects_bad_tau():
    with pytest.raises(ValidationError):
        StationGraph(tau=np.array([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(ValidationError):
        StationGraph(tau=np.array([[0.5, 1.0], [1.0, 0.0]]))  # diagonal
    with pytest.raises(ValidationError):
        StationGraph(tau=np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0]]))


def test_triangle_inequality_check():
    # tau[0,2] = 5 > tau[0,1] + tau[1,2] = 3 violates the shortcut bound
    tau = np.array([[0.0, 1.0, 5.0],
                    [1.0, 0.0, 2.0],
                    [5.0, 2.0, 0.0]])
    report = validate_graph(tau)
    assert not report.ok
    assert any(v[:3] == (0, 1, 2) for v in report.triangle_violations)
    with pytest.raises(ValidationError):
        StationGraph(tau=tau)


def test_graph_json_round_trip():
    g = StationGraph(tau=np.array([[0.0, 1.0], [2.0, 0.0]]))
    obj = g.to_json()
    assert set(obj) == {"n", "tau"}
    g2 = StationGraph.from_json(json.loads(json.dumps(obj)))
    np.testing.assert_allclose(g2.tau, g.tau)


def test_demand_matrix_drops_diagonal_and_counts_it():
    counts = np.array([[3, 2], [1, 0]])
    d = DemandMatrix(counts=counts)
    assert d.counts[0, 0] == 0
    assert d.dropped_diagonal == 3
    assert d.total_trips == 3


def test_demand_matrix_rejects_negative_and_fractional():
    with pytest.raises(ValidationError):
        DemandMatrix(counts=np.array([[0, -1], [0, 0]]))
    with pytest.raises(ValidationError):
        DemandMatrix(counts=np.array([[0.0, 1.5], [0.0, 0.0]]))


def test_demand_json_round_trip():
    d = DemandMatrix(counts=np.array([[0, 2], [1, 0]]))
    obj = d.to_json()
    assert set(obj) >= {"n", "counts"}
    d2 = DemandMatrix.from_json(obj)
    np.testing.assert_array_equal(d2.counts, d.counts)


def test_net_flow_orientation_and_sum_zero():
    # b_i = sum_j (out - in): station 0 sends 2, receives 1
    d = DemandMatrix(counts=np.array([[0, 2], [1, 0]]))
    b = net_flow(d)
    np.testing.assert_allclose(b.values, [1.0, -1.0])
    with pytest.raises(ValidationError):
        NetFlowVector(values=np.array([1.0, 0.5]))


def test_scale_demand():
    d = DemandMatrix(counts=np.array([[0, 2], [1, 0]]))
    scaled = scale_demand(d, 10)
    np.testing.assert_array_equal(scaled.counts, [[0, 20], [10, 0]])
    with pytest.raises(ValidationError):
        scale_demand(d, 0)


def test_load_json_file_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"n": 2, "tau": [[0, 1], [1, 0]]')
    with pytest.raises(ValidationError):
        load_json_file(path)
