import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_penetration
from pbcrowd import metrics, scenario, solver
from pbcrowd.metrics import StepMetrics
from pbcrowd.planner import GoalSets


def test_penetration_examples():
    assert metrics.max_penetration([(0, 0), (3, 0)], [0.5, 0.5]) == 0.0
    assert metrics.max_penetration([(0, 0), (0.9, 0)], [0.5, 0.5]) == pytest.approx(0.1)
    assert metrics.max_penetration([(0, 0)], [0.5]) == 0.0
    assert metrics.max_penetration(np.zeros((0, 2)), np.zeros(0)) == 0.0


def test_penetration_uses_mixed_radii():
    assert metrics.max_penetration([(0, 0), (2.5, 0)], [0.5, 2.25]) == pytest.approx(0.25)


@given(st.integers(0, 2**32 - 1), st.integers(2, 120), st.floats(2.0, 20.0))
def test_penetration_matches_brute_force(seed, n, extent):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0, extent, (n, 2))
    radii = rng.uniform(0.2, 1.5, n)
    assert metrics.max_penetration(pos, radii) == pytest.approx(brute_penetration(pos, radii),
                                                                 abs=1e-12)


def test_progress_examples():
    goals = GoalSets.from_lists([[(10, 0)]])
    assert metrics.mean_progress_speed([(10, 0)], [(0, 0)], [0], goals, radii=[0.5]) == 0.0
    assert metrics.mean_progress_speed([(0, 0)], [(1.4, 0)], [0], goals) == pytest.approx(1.4)
    assert metrics.mean_progress_speed([(0, 0)], [(0, 1.4)], [0], goals) == 0.0
    v = metrics.mean_progress_speed([(0, 0), (0, 5), (10, 0.1)], [(1, 0), (0, 2), (-5, 0)],
                                    [0, 0, 0], goals, radii=[0.5, 0.5, 0.5])
    assert v == pytest.approx((1 + 2 * -5 / np.hypot(10, 5)) / 2)


def test_progress_explicit_arrival_mask():
    goals = GoalSets.from_lists([[(10, 0)]])
    v = metrics.mean_progress_speed([(0, 0), (1, 0)], [(1, 0), (3, 0)], [0, 0], goals,
                                    arrived=[False, True])
    assert v == 1.0


def synthetic(k, clock, pen=0.0, arrived=0.0):
    return StepMetrics(k, pen, 1.0, 1.0, arrived, clock)


def test_report_single_step():
    r = metrics.run_report([synthetic(1, 4.0, 0.02, 0.5)], 7, "x")
    assert r["wall_clock_ms_mean"] == r["wall_clock_ms_p95"] == 4.0
    assert r["ms_per_frame_mean"] == 8.0
    assert r["peak_max_penetration"] == 0.02
    assert r["final_arrived_fraction"] == 0.5
    assert r["agents"] == 7 and r["steps"] == 1


def test_report_percentiles():
    # clock 1..20 ms; linear-interpolated 95th percentile sits at rank 0.95 * 19 = 18.05
    series = [synthetic(k, float(k + 1), pen=0.01 * (k % 4), arrived=k / 19) for k in range(20)]
    r = metrics.run_report(series)
    assert r["wall_clock_ms_mean"] == pytest.approx(10.5)
    assert r["wall_clock_ms_p95"] == pytest.approx(19.05)
    assert r["peak_max_penetration"] == pytest.approx(0.03)
    assert r["final_arrived_fraction"] == pytest.approx(1.0)


def test_report_needs_steps():
    with pytest.raises(metrics.EmptySeries):
        metrics.run_report([])


def test_sliding_means():
    np.testing.assert_allclose(metrics.sliding_means([1, 2, 3, 4, 5], 2), [1.5, 2.5, 3.5, 4.5])
    assert metrics.sliding_means([1, 2], 3).size == 0


def test_collect_is_pure():
    s = scenario.build_state(scenario.load_bundled("proximal_longrange"), 0)
    for _ in range(5):
        solver.step(s)
    before = s.agents.copy()
    a = metrics.collect(s)
    b = metrics.collect(s)
    assert a == b
    np.testing.assert_array_equal(s.agents.position, before.position)
    assert a.step == 5 and 0 <= a.arrived_fraction <= 1 and a.max_penetration >= 0


def test_dense_high_report_counts_agents():
    s = scenario.build_state(scenario.load_bundled("dense_high"), 0)
    r = metrics.run_report([metrics.collect(s)], s.n_agents, "dense_high")
    assert r["agents"] == 10032
