"""Snapshot diagnostics and per-run summaries."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from . import planner, spatial


class EmptySeries(ValueError):
    pass


@dataclass
class StepMetrics:
    step: int
    max_penetration: float
    mean_speed: float
    progress_speed: float
    arrived_fraction: float
    wall_clock: float  # milliseconds spent in the solver step

    def as_dict(self) -> dict:
        return asdict(self)


def max_penetration(positions, radii) -> float:
    """Deepest pairwise overlap ``max(0, r_i + r_j - |x_i - x_j|)`` over all pairs."""
    pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 2)
    radii = np.asarray(radii, dtype=np.float64)
    if len(pos) < 2:
        return 0.0
    rmax = float(radii.max())
    grid = spatial.build(pos, 4.0 * rmax)
    nl = spatial.neighbor_lists(grid, pos, radii + rmax)
    if nl.pair_count == 0:
        return 0.0
    i = np.repeat(np.arange(len(pos)), np.diff(nl.offset))
    j = nl.index
    gap = np.hypot(*(pos[i] - pos[j]).T) - (radii[i] + radii[j])
    return float(max(0.0, -gap.min()))


def mean_progress_speed(positions, velocities, goal, goals: planner.GoalSets,
                        arrived: Optional[np.ndarray] = None, radii=None) -> float:
    """Mean velocity component toward the current goal over agents still travelling.

    ``arrived`` defaults to "centre within its own radius of the goal"; with no
    one left travelling the result is 0.
    """
    pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 2)
    vel = np.asarray(velocities, dtype=np.float64).reshape(-1, 2)
    goal = np.ascontiguousarray(goal, dtype=np.int64)
    if arrived is None:
        r = np.zeros(len(pos)) if radii is None else np.asarray(radii, dtype=np.float64)
        arrived = planner.goal_distances(pos, goal, goals) <= r
    travelling = ~np.asarray(arrived, dtype=bool)
    if not travelling.any():
        return 0.0
    dirs = planner.goal_directions(pos, goal, goals)
    along = np.einsum("ij,ij->i", vel[travelling], dirs[travelling])
    return float(along.mean())


def collect(state, wall_clock_ms: float = 0.0) -> StepMetrics:
    """Metrics for the current snapshot of a :class:`~pbcrowd.solver.SimState`."""
    a = state.agents
    n = len(a)
    if n == 0:
        return StepMetrics(state.step_index, 0.0, 0.0, 0.0, 1.0, wall_clock_ms)
    return StepMetrics(
        step=state.step_index,
        max_penetration=max_penetration(a.position, a.radius),
        mean_speed=float(np.linalg.norm(a.velocity, axis=1).mean()),
        progress_speed=mean_progress_speed(a.position, a.velocity, a.goal, state.goals,
                                           arrived=state.arrived),
        arrived_fraction=float(state.arrived.mean()),
        wall_clock=wall_clock_ms,
    )


def run_report(series: Sequence[StepMetrics], agent_count: Optional[int] = None,
               scenario: str = "", steps_per_frame: int = 2) -> dict:
    """Aggregate a run: timing mean/p95, peak penetration, final arrivals."""
    if not series:
        raise EmptySeries("run_report needs at least one StepMetrics")
    clock = np.array([m.wall_clock for m in series], dtype=np.float64)
    report = {
        "scenario": scenario,
        "agents": agent_count,
        "steps": len(series),
        "wall_clock_ms_mean": float(clock.mean()),
        "wall_clock_ms_p95": float(np.percentile(clock, 95)),
        "ms_per_frame_mean": float(clock.mean()) * steps_per_frame,
        "peak_max_penetration": float(max(m.max_penetration for m in series)),
        "final_arrived_fraction": float(series[-1].arrived_fraction),
        "min_progress_speed": float(min(m.progress_speed for m in series)),
    }
    return report


def sliding_means(values, window: int) -> np.ndarray:
    """Means over every contiguous window of ``window`` samples."""
    v = np.asarray(values, dtype=np.float64)
    if len(v) < window:
        return np.zeros(0)
    c = np.concatenate([[0.0], np.cumsum(v)])
    return (c[window:] - c[:-window]) / window
