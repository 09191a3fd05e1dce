"""Closest-goal preferred velocity planner."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange


@dataclass
class GoalSets:
    """Goal point sets in compressed form: set ``g`` is ``points[offset[g]:offset[g+1]]``.

    An agent heads for the nearest point of the set named by its goal index.
    """

    offset: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        self.offset = np.ascontiguousarray(self.offset, dtype=np.int64)
        self.points = np.ascontiguousarray(self.points, dtype=np.float64).reshape(-1, 2)
        if len(self.offset) < 1 or self.offset[0] != 0 or self.offset[-1] != len(self.points):
            raise ValueError("malformed goal offsets")
        if np.any(np.diff(self.offset) < 1):
            raise ValueError("every goal set needs at least one point")

    @classmethod
    def from_lists(cls, sets) -> "GoalSets":
        sets = [np.asarray(s, dtype=np.float64).reshape(-1, 2) for s in sets]
        offset = np.zeros(len(sets) + 1, dtype=np.int64)
        offset[1:] = np.cumsum([len(s) for s in sets])
        points = np.concatenate(sets) if sets else np.zeros((0, 2))
        return cls(offset, points)

    def __len__(self) -> int:
        return len(self.offset) - 1

    def __getitem__(self, g: int) -> np.ndarray:
        return self.points[self.offset[g]:self.offset[g + 1]]


def preferred_velocity(position, pref_speed, radius, goals) -> np.ndarray:
    """Velocity of magnitude ``pref_speed`` toward the nearest of ``goals``.

    Zero once the agent centre is within ``radius`` of that goal. Equidistant
    goals resolve to the lower index.
    """
    goals = np.ascontiguousarray(goals, dtype=np.float64).reshape(-1, 2)
    if len(goals) == 0:
        raise ValueError("need at least one goal")
    vx, vy = _toward_nearest(float(position[0]), float(position[1]), float(pref_speed),
                             float(radius), goals, 0, len(goals))
    return np.array([vx, vy])


def nearest_goal(position, goals) -> tuple[int, float]:
    goals = np.asarray(goals, dtype=np.float64).reshape(-1, 2)
    d = np.hypot(goals[:, 0] - position[0], goals[:, 1] - position[1])
    k = int(np.argmin(d))
    return k, float(d[k])


@njit(cache=True)
def _nearest(px, py, points, start, stop):
    best = start
    best_d2 = np.inf
    for g in range(start, stop):
        dx = points[g, 0] - px
        dy = points[g, 1] - py
        d2 = dx * dx + dy * dy
        if d2 < best_d2:
            best_d2 = d2
            best = g
    return best, best_d2


@njit(cache=True)
def _toward_nearest(px, py, speed, radius, points, start, stop):
    g, d2 = _nearest(px, py, points, start, stop)
    if d2 <= radius * radius:
        return 0.0, 0.0
    d = math.sqrt(d2)
    return speed * (points[g, 0] - px) / d, speed * (points[g, 1] - py) / d


@njit(parallel=True, cache=True)
def _all_preferred(pos, speed, radius, goal, offset, points, out):
    for i in prange(pos.shape[0]):
        g = goal[i]
        out[i, 0], out[i, 1] = _toward_nearest(pos[i, 0], pos[i, 1], speed[i], radius[i],
                                               points, offset[g], offset[g + 1])


@njit(parallel=True, cache=True)
def _all_goal_distances(pos, goal, offset, points, out):
    for i in prange(pos.shape[0]):
        g = goal[i]
        _, d2 = _nearest(pos[i, 0], pos[i, 1], points, offset[g], offset[g + 1])
        out[i] = math.sqrt(d2)


def preferred_velocities(positions, pref_speed, radius, goal, goals: GoalSets) -> np.ndarray:
    out = np.empty((len(positions), 2))
    _all_preferred(positions, pref_speed, radius, goal, goals.offset, goals.points, out)
    return out


def goal_distances(positions, goal, goals: GoalSets) -> np.ndarray:
    out = np.empty(len(positions))
    _all_goal_distances(positions, goal, goals.offset, goals.points, out)
    return out


def goal_directions(positions, goal, goals: GoalSets) -> np.ndarray:
    """Unit vectors toward each agent's nearest goal point (zero on top of it)."""
    out = np.empty((len(positions), 2))
    ones = np.ones(len(positions))
    zeros = np.zeros(len(positions))
    _all_preferred(positions, ones, zeros, goal, goals.offset, goals.points, out)
    return out


def jitter(seed: int, step: int, n: int, scale) -> np.ndarray:
    """Per-agent perturbation, uniform in a disk of radius ``scale``.

    Counter-based (Philox keyed on the seed, counter on the step) so the draw
    for agent i at step t never depends on evaluation order.
    """
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed % 2**64), counter=np.uint64(step)))
    u = gen.random((n, 2))
    radius = np.sqrt(u[:, 0]) * scale
    theta = 2.0 * np.pi * u[:, 1]
    return np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
