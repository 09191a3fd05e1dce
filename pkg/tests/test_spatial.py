import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from pbcrowd import spatial


def brute(positions, i, radius):
    d = np.linalg.norm(positions - positions[i], axis=1)
    return [j for j in range(len(positions)) if j != i and d[j] <= radius]


def test_single_agent_cell():
    g = spatial.build(np.array([[0.0, 0.0]]), 2.0)
    assert g.table == {(0, 0): [0]}
    assert spatial.query(g, np.array([[0.0, 0.0]]), 0, 1.0) == []


def test_floor_division_cells():
    pos = np.array([[0.0, 0.0], [3.0, 0.0]])
    assert spatial.build(pos, 2.0).table == {(0, 0): [0], (1, 0): [1]}


def test_negative_coordinates_floor():
    pos = np.array([[-0.1, -2.0], [-2.1, 1.9]])
    assert spatial.build(pos, 2.0).table == {(-1, -1): [0], (-2, 0): [1]}


def test_boundary_goes_to_higher_cell():
    pos = np.array([[2.0, 4.0]])
    assert spatial.build(pos, 2.0).table == {(1, 2): [0]}


def test_query_example():
    pos = np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]])
    g = spatial.build(pos, 2.0)
    assert spatial.query(g, pos, 0, 2.0) == [1]


def test_query_radius_is_inclusive():
    pos = np.array([[0.0, 0.0], [2.0, 0.0]])
    g = spatial.build(pos, 1.0)
    assert spatial.query(g, pos, 0, 2.0) == [1]


def test_every_agent_in_exactly_its_cell():
    rng = np.random.default_rng(3)
    pos = rng.uniform(-50, 50, size=(500, 2))
    g = spatial.build(pos, 2.1)
    seen = []
    for cell, members in g.table.items():
        for k in members:
            assert tuple(np.floor(pos[k] / 2.1).astype(int)) == cell
        seen += members
    assert sorted(seen) == list(range(500))


@pytest.mark.parametrize("radius_factor", [0.5, 1.0, 2.0, 3.5])
def test_random_configuration_matches_brute_force(radius_factor):
    rng = np.random.default_rng(int(radius_factor * 10))
    pos = rng.uniform(0, 40, size=(500, 2))
    cell = 2.1
    g = spatial.build(pos, cell)
    radius = radius_factor * cell
    nl = spatial.neighbor_lists(g, pos, radius)
    for i in range(len(pos)):
        expected = brute(pos, i, radius)
        assert spatial.query(g, pos, i, radius) == expected
        assert nl[i].tolist() == expected


@given(
    hnp.arrays(np.float64, st.tuples(st.integers(1, 60), st.just(2)),
               elements=st.floats(-20, 20, allow_nan=False)),
    st.floats(0.3, 5.0),
    st.floats(0.1, 8.0),
)
def test_neighbor_lists_equal_brute_force(pos, cell, radius):
    g = spatial.build(pos, cell)
    nl = spatial.neighbor_lists(g, pos, radius)
    for i in range(len(pos)):
        got = nl[i].tolist()
        assert got == brute(pos, i, radius)
        assert i not in got
        assert got == sorted(got)


def test_rounded_distance_across_two_cells():
    # exact distance is a hair over 1, the rounded one is exactly 1, and the
    # partner sits two cells over from the query point's cell
    pos = np.array([[-1.94485752e-123, 1.0], [1.0, 1.0]])
    g = spatial.build(pos, 1.0)
    assert brute(pos, 0, 1.0) == [1]
    assert spatial.neighbor_lists(g, pos, 1.0)[0].tolist() == [1]
    assert spatial.query(g, pos, 0, 1.0) == [1]


def test_per_agent_radius():
    rng = np.random.default_rng(9)
    pos = rng.uniform(0, 20, size=(200, 2))
    radii = rng.uniform(0.5, 3.0, size=200)
    nl = spatial.neighbor_lists(spatial.build(pos, 2.0), pos, radii)
    for i in range(200):
        assert nl[i].tolist() == brute(pos, i, radii[i])
    assert nl.pair_count == sum(len(brute(pos, i, radii[i])) for i in range(200))


def test_query_point_excludes():
    pos = np.array([[0.0, 0.0], [1.0, 0.0]])
    g = spatial.build(pos, 2.0)
    assert spatial.query_point(g, pos, (0.5, 0.0), 1.0) == [0, 1]
    assert spatial.query_point(g, pos, (0.5, 0.0), 1.0, exclude=0) == [1]


def test_invalid_cell_size():
    with pytest.raises(ValueError):
        spatial.build(np.zeros((1, 2)), 0.0)
