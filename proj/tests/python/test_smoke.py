import math

import pytest

import cfverse


def test_path_length_and_normalization():
    pts = [[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]]
    assert cfverse.path_length(pts) == pytest.approx(7.0)
    q = cfverse.normalize_path(pts, 7)
    assert len(q) == 7
    assert q[2] == pytest.approx([3.0, 0.0])
    assert q[-1] == [3.0, 4.0]


def test_branching_and_direction():
    red = [[0.0, 0.0], [1.0, 0.0]]
    yellow = [[0.0, 0.0], [0.3, 0.0], [1.0, 0.4]]
    assert cfverse.branching_point(red, red, 0.1) is None
    assert cfverse.branching_point(yellow, red, 0.1) is not None
    assert cfverse.direction_difference(red, red) == 0.0


def test_vector_opportunity():
    f = [0.0, 0.0]
    assert cfverse.vector_opportunity(f, [1.0, 1.0], [1.0, 1.0]) == 1.0
    assert cfverse.vector_opportunity(f, [2.0, 0.0], [1.0, 5.0]) == pytest.approx(0.5)
    values, means = cfverse.opportunity_matrix(f, [[1.0, 0.0], [0.0, 1.0]])
    assert values == [[1.0, 0.0], [0.0, 1.0]]
    assert means == pytest.approx([0.5, 0.5])


def test_weighted_distance():
    assert cfverse.weighted_distance([0.0], [1.0], 1.1) == pytest.approx(1.1)
    assert cfverse.weighted_distance([1.0], [0.0], 1.1) == pytest.approx(1.0)


def test_graph_functions():
    arcs = [(0, 1, 1.0), (0, 4, 4.0), (4, 5, 3.0), (5, 6, 0.5), (6, 3, 0.5),
            (4, 7, 1.5), (7, 2, 1.5), (5, 2, 2.0)]
    vertices, length = cfverse.shortest_path(8, arcs, 0, 3)
    assert vertices == [0, 4, 5, 6, 3]
    assert length == pytest.approx(8.0)
    assert cfverse.shortest_path(8, arcs, 3, 0) is None
    assert cfverse.graph_opportunity(8, arcs, 0, 3, 2) == pytest.approx(7 / 8)
    assert cfverse.graph_opportunity(8, arcs, 0, 2, 3) == pytest.approx(4 / 7)


def test_bsp_path_moves_closer():
    data = [[0.5, 0.0], [5.0, 5.0]]
    rows = cfverse.bsp_path([0.0, 0.0], [1.0, 0.0], data, tau=0.5)
    assert rows == [0]


def test_errors_raise_value_error():
    with pytest.raises(ValueError):
        cfverse.path_length([[0.0, 0.0]])


def test_explain(tmp_path):
    csv = tmp_path / "line.csv"
    csv.write_text("x,label\n0.0,0\n0.1,0\n0.2,0\n0.3,0\n0.4,0\n0.5,1\n")
    doc = cfverse.explain(csv, 0.5, 0, top_c=1, k=2, k_model=1, alt_separation=0.0)
    assert doc["selected"]["target"] == 5
    assert doc["selected"]["path"]["vertices"] == [0, 1, 2, 3, 4, 5]
    assert math.isclose(doc["selected"]["distance"], 1.0)
