import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.distance import pdist

from pbcrowd import scenario
from pbcrowd.core import AvoidanceMode, Circle, Segment
from pbcrowd.planner import GoalSets, jitter, preferred_velocity
from pbcrowd.scenario import Ellipse, Grid, ParseError, ValidationError, formation_points


def minimal(**changes):
    doc = {
        "schema_version": 1,
        "name": "tiny",
        "goals": [{"kind": "points", "points": [[10.0, 0.0]]}],
        "groups": [{"formation": {"type": "grid", "rows": 2, "cols": 2, "spacing": 2.5}}],
    }
    doc.update(changes)
    return doc


def parse(doc):
    return scenario.parse_scenario(json.dumps(doc))


def test_minimal_grid_document():
    s = parse(minimal())
    assert s.agent_count == 4
    agents, params, goals = scenario.instantiate(s)
    assert sorted(map(tuple, agents.position)) == [(0, 0), (0, 2.5), (2.5, 0), (2.5, 2.5)]
    assert params.avoidance_mode is AvoidanceMode.LONG_RANGE
    assert len(goals) == 1


def test_grid_positions_follow_origin():
    pts = formation_points(Grid(2, 3, 1.5)) + np.array([-1.0, 4.0])
    assert pts.tolist() == [[-1, 4], [0.5, 4], [2, 4], [-1, 5.5], [0.5, 5.5], [2, 5.5]]


def test_malformed_json_reports_line():
    with pytest.raises(ParseError) as err:
        scenario.parse_scenario('{\n "name": "x",\n oops}')
    assert err.value.line == 3


@pytest.mark.parametrize("doc, path", [
    ({k: v for k, v in minimal().items() if k != "goals"}, "goals"),
    (minimal(goals=[]), "goals"),
    (minimal(groups=[]), "groups"),
    (minimal(schema_version=2), "schema_version"),
    (minimal(extra=1), "extra"),
    (minimal(groups=[{"formation": {"type": "grid", "rows": 0, "cols": 2, "spacing": 1}}]),
     "groups[0].formation.rows"),
    (minimal(groups=[{"formation": {"type": "grid", "rows": 2, "cols": 2, "spacing": -1}}]),
     "groups[0].formation.spacing"),
    (minimal(groups=[{"formation": {"type": "grid", "rows": 2, "cols": 2, "spacing": 1},
                      "goal": 3}]), "groups[0].goal"),
    (minimal(groups=[{"formation": {"type": "grid", "rows": 2, "cols": 2, "spacing": 1},
                      "mass": 0}]), "groups[0].mass"),
    (minimal(groups=[{"formation": {"type": "grid", "rows": 2, "cols": 2, "spacing": 1},
                      "radius": [0.6, 0.4]}]), "groups[0].radius"),
    (minimal(obstacles=[{"type": "segment", "a": [0, 0], "b": [0, 0]}]), "obstacles[0]"),
    (minimal(obstacles=[{"type": "blob"}]), "obstacles[0].type"),
    (minimal(params={"dt": -1.0}), "params.dt"),
    (minimal(params={"dt": "fast"}), "params.dt"),
    (minimal(params={"solve_iters": 2.5}), "params.solve_iters"),
    (minimal(params={"xsph_same_species": 1}), "params.xsph_same_species"),
    (minimal(params={"avoidance_mode": "sideways"}), "params.avoidance_mode"),
    (minimal(params={"nonsense": 1}), "params.nonsense"),
])
def test_validation_errors_name_the_field(doc, path):
    with pytest.raises(ValidationError) as err:
        parse(doc)
    assert err.value.path == path


def test_bears_and_rabbits_mass_ratio():
    s = scenario.load_bundled("bears_and_rabbits")
    assert len(s.groups) == 2 and s.agent_count == 1152
    agents, _, _ = scenario.instantiate(s)
    w = {sp: set(agents.inv_mass[agents.species == k]) for k, sp in enumerate(s.species)}
    assert w["rabbit"] == {1.0}
    assert len(w["bear"]) == 1 and 1.0 / w["bear"].pop() == pytest.approx(30.0)
    bears = agents.radius[agents.species == s.species.index("bear")]
    assert bears.min() >= 1.25 and bears.max() <= 2.0


@given(st.floats(3.3, 40), st.floats(3.3, 40), st.floats(1.0, 5.0))
def test_ellipse_spacing(a, b, spacing):
    pts = formation_points(Ellipse((a, b), spacing))
    assert np.all(((pts[:, 0] / a) ** 2 + (pts[:, 1] / b) ** 2) <= 1 + 1e-9)
    if len(pts) > 1:
        assert pdist(pts).min() >= spacing * (1 - 1e-6)


def test_bundled_ellipse_spacing():
    pts = formation_points(Ellipse((20.0, 9.9), 3.3))
    assert pdist(pts).min() >= 3.3 * (1 - 1e-6)


def test_instantiate_is_deterministic():
    s = scenario.load_bundled("target_locomotion")
    a1, p1, g1 = scenario.instantiate(s, 9)
    a2, p2, g2 = scenario.instantiate(s, 9)
    for name in ("position", "radius", "pref_speed", "goal", "species", "inv_mass"):
        np.testing.assert_array_equal(getattr(a1, name), getattr(a2, name))
    np.testing.assert_array_equal(g1.points, g2.points)
    assert p1 == p2
    a3, _, _ = scenario.instantiate(s, 10)
    assert not np.array_equal(a1.pref_speed, a3.pref_speed)


def test_coincident_agents_rejected():
    doc = minimal(groups=[
        {"formation": {"type": "grid", "rows": 2, "cols": 2, "spacing": 1.0}},
        {"formation": {"type": "explicit", "points": [[1.0, 1.0]]}},
    ])
    with pytest.raises(scenario.OverlapError):
        scenario.instantiate(parse(doc))


@pytest.mark.parametrize("name", scenario.bundled_names())
def test_bundled_round_trip(name):
    s = scenario.load_bundled(name)
    assert scenario.parse_scenario(scenario.serialize(s)) == s


def test_bundled_counts():
    counts = {n: scenario.load_bundled(n).agent_count for n in scenario.bundled_names()}
    assert counts["sparse_passing"] == 1600
    assert counts["dense_low"] == 1600
    assert counts["dense_high"] == 10032
    assert counts["bears_and_rabbits"] == 1152
    assert counts["dense_ellipsoid"] == 1920
    assert counts["proximal_longrange"] == 100
    assert counts["target_locomotion"] == 192
    assert counts["bottleneck"] == 480
    assert counts["bottleneck_large"] == 3600
    assert counts["sparse_passing_small"] == 200
    assert counts["dense_passing_small"] == 800


def test_round_trip_with_every_feature():
    doc = minimal(
        goals=[{"kind": "points", "points": [[1, 2], [3, 4]]},
               {"kind": "offset", "offset": [5, 0], "noise": 0.5},
               {"kind": "formation", "formation": {"type": "ellipse", "semi_axes": [4, 3],
                                                    "spacing": 1.0},
                "origin": [9, 9], "assign": "each"}],
        groups=[{"formation": {"type": "grid", "rows": 2, "cols": 2, "spacing": 2.0},
                 "radius": [0.4, 0.6], "goal": 2, "species": "a"},
                {"formation": {"type": "explicit", "points": [[20, 20]]}, "goal": 1}],
        obstacles=[{"type": "segment", "a": [0, -5], "b": [10, -5]},
                   {"type": "circle", "center": [30, 0], "radius": 2}],
        params={"avoidance_mode": "avoidance", "jitter": 0, "solve_iters": 4},
    )
    s = parse(doc)
    assert scenario.parse_scenario(scenario.serialize(s)) == s
    assert isinstance(s.obstacles[0], Segment) and isinstance(s.obstacles[1], Circle)
    p = s.sim_params()
    assert p.avoidance_mode is AvoidanceMode.AVOIDANCE and p.solve_iters == 4 and p.jitter == 0.0


def test_per_agent_goals():
    doc = minimal(goals=[{"kind": "offset", "offset": [7.0, -1.0]}])
    agents, _, goals = scenario.instantiate(parse(doc))
    assert len(goals) == 4
    for i in range(4):
        np.testing.assert_array_equal(goals[agents.goal[i]][0], agents.position[i] + [7, -1])


def test_mirrored_reflects_x():
    s = scenario.load_bundled("proximal_avoidance")
    a, _, ga = scenario.instantiate(s, 3)
    b, _, gb = scenario.instantiate(scenario.mirrored(s), 3)
    np.testing.assert_array_equal(b.position[:, 0], -a.position[:, 0])
    np.testing.assert_array_equal(b.position[:, 1], a.position[:, 1])
    np.testing.assert_array_equal(b.radius, a.radius)
    np.testing.assert_array_equal(b.pref_speed, a.pref_speed)
    np.testing.assert_array_equal(gb.points[:, 0], -ga.points[:, 0])


# -- preferred velocity -----------------------------------------------------------

def test_nearer_goal_wins():
    v = preferred_velocity((0, 0), 1.4, 0.5, [(10, 0), (0, 20)])
    np.testing.assert_allclose(v, [1.4, 0])


def test_at_goal_is_zero():
    assert preferred_velocity((3, 4), 1.4, 0.5, [(3, 4)]).tolist() == [0, 0]
    assert preferred_velocity((3, 4.5), 1.4, 0.5, [(3, 4)]).tolist() == [0, 0]


def test_tie_goes_to_lower_index():
    np.testing.assert_allclose(preferred_velocity((0, 0), 2.0, 0.5, [(0, 5), (5, 0)]), [0, 2])
    np.testing.assert_allclose(preferred_velocity((0, 0), 2.0, 0.5, [(5, 0), (0, 5)]), [2, 0])


def test_needs_a_goal():
    with pytest.raises(ValueError):
        preferred_velocity((0, 0), 1.4, 0.5, np.zeros((0, 2)))


@given(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), st.floats(0, 3), st.floats(0.1, 2),
       st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=1, max_size=5))
def test_preferred_speed_or_zero(pos, speed, radius, goals):
    v = preferred_velocity(pos, speed, radius, goals)
    d = np.min(np.hypot(*(np.array(goals) - pos).T))
    if d <= radius:
        assert v.tolist() == [0, 0]
    else:
        assert math.hypot(*v) == pytest.approx(speed, rel=1e-12)


def test_goal_sets_validate():
    with pytest.raises(ValueError):
        GoalSets(np.array([0, 0]), np.zeros((0, 2)))


def test_jitter_is_counter_based():
    a = jitter(7, 12, 100, 0.5)
    np.testing.assert_array_equal(a, jitter(7, 12, 100, 0.5))
    np.testing.assert_array_equal(a[:40], jitter(7, 12, 40, 0.5))
    assert not np.array_equal(a, jitter(7, 13, 100, 0.5))
    assert np.all(np.linalg.norm(a, axis=1) <= 0.5)
    assert jitter(-1, 0, 3, 1.0).shape == (3, 2)
