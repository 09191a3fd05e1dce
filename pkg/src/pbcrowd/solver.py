"""The predict / project / update loop.

One call to :func:`step` advances every agent by ``params.dt``:

1. preferred velocity from the planner, blended with the current velocity
2. predicted positions x* from the blended velocity
3. short- and long-range neighbor lists from the two hash grids
4. stability pass: leftover contacts fixed on both x^n and x*
5. Jacobi constraint iterations on x* with delta averaging
6. velocities from the position change, XSPH smoothing, speed/accel clamps
7. commit x^{n+1} = x*

All parallel loops are per-agent gathers over ascending neighbor lists: each
agent sums its own corrections in a fixed order and nobody writes into another
agent's slot, so the result is bit-identical for any thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numba import njit, prange

from . import planner, spatial
from .constraints import _avoidance, _contact, _friction, _longrange, _wall_circle, _wall_segment
from .core import AgentState, AvoidanceMode, SimParams, effective_radius, pack_obstacles, validate_params
from .planner import GoalSets


@dataclass
class Neighbors:
    short: spatial.NeighborList
    long: Optional[spatial.NeighborList]
    short_grid: spatial.HashGrid
    long_grid: Optional[spatial.HashGrid]


@dataclass
class SimState:
    agents: AgentState
    goals: GoalSets
    params: SimParams
    obstacles: list = field(default_factory=list)
    step_index: int = 0
    arrived: np.ndarray = None
    # largest |delta . n| / |delta| seen over avoidance projections of the last step
    tangential_residual: float = 0.0

    def __post_init__(self):
        validate_params(self.params)
        n = len(self.agents)
        if n and (self.agents.goal.min() < 0 or self.agents.goal.max() >= len(self.goals)):
            raise ValueError("agent goal index out of range")
        if self.arrived is None:
            self.arrived = np.zeros(n, dtype=bool)
            if n:
                self.arrived |= planner.goal_distances(self.agents.position, self.agents.goal,
                                                       self.goals) <= self.agents.radius
        self._segments, self._circles = pack_obstacles(self.obstacles)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def time(self) -> float:
        return self.step_index * self.params.dt

    def effective_radii(self) -> np.ndarray:
        return effective_radius(self.agents.radius, self.params.radius_expansion)


# -- elementwise pieces ------------------------------------------------------

def blend_velocity(v_current, v_preferred, alpha):
    """``(1 - alpha) v_current + alpha v_preferred``."""
    return (1.0 - alpha) * np.asarray(v_current, dtype=np.float64) + alpha * np.asarray(v_preferred, dtype=np.float64)


def predict(x, v_blend, dt):
    return np.asarray(x, dtype=np.float64) + dt * np.asarray(v_blend, dtype=np.float64)


def poly6(r, h):
    """3D-normalised Poly6 smoothing kernel, zero outside ``[0, h]``."""
    r = np.asarray(r, dtype=np.float64)
    w = 315.0 / (64.0 * np.pi * h ** 9) * (h * h - r * r) ** 3
    out = np.where((r >= 0) & (r <= h), w, 0.0)
    return out if out.ndim else float(out)


def clamp_velocity(v_new, v_prev, v_max, a_max, dt):
    """Limit acceleration to ``a_max`` (about ``v_prev``), then speed to ``v_max``.

    Accepts single vectors or ``(N, 2)`` arrays.
    """
    v_new = np.asarray(v_new, dtype=np.float64)
    v_prev = np.asarray(v_prev, dtype=np.float64)
    dv = v_new - v_prev
    dv_len = np.linalg.norm(dv, axis=-1, keepdims=True)
    dv_cap = a_max * dt
    with np.errstate(divide="ignore", invalid="ignore"):
        shrink = np.where(dv_len > dv_cap, dv_cap / dv_len, 1.0)
    v = v_prev + dv * shrink
    speed = np.linalg.norm(v, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        shrink = np.where(speed > v_max, v_max / speed, 1.0)
    return v * shrink


# -- numba passes ------------------------------------------------------------

@njit(parallel=True, cache=True)
def _stability_deltas(xn, reff, w, s_off, s_idx, segs, circs, out):
    for i in prange(xn.shape[0]):
        ax = 0.0
        ay = 0.0
        count = 0
        for k in range(s_off[i], s_off[i + 1]):
            j = s_idx[k]
            hit, dix, diy, _, _, _, _, _ = _contact(xn[i, 0], xn[i, 1], xn[j, 0], xn[j, 1],
                                                    reff[i] + reff[j], w[i], w[j], i, j)
            if hit:
                ax += dix
                ay += diy
                count += 1
        if w[i] > 0.0:
            for s in range(segs.shape[0]):
                hit, dx, dy = _wall_segment(xn[i, 0], xn[i, 1], xn[i, 0], xn[i, 1], reff[i],
                                            segs[s, 0], segs[s, 1], segs[s, 2], segs[s, 3], 0.0, 0.0)
                if hit:
                    ax += dx
                    ay += dy
                    count += 1
            for c in range(circs.shape[0]):
                hit, dx, dy = _wall_circle(xn[i, 0], xn[i, 1], xn[i, 0], xn[i, 1], reff[i],
                                           circs[c, 0], circs[c, 1], circs[c, 2], 0.0, 0.0)
                if hit:
                    ax += dx
                    ay += dy
                    count += 1
        if count > 0:
            out[i, 0] = ax / count
            out[i, 1] = ay / count
        else:
            out[i, 0] = 0.0
            out[i, 1] = 0.0


@njit(parallel=True, cache=True)
def _solve_deltas(xn, xs, reff, w, s_off, s_idx, l_off, l_idx, segs, circs, mode,
                  dt, tau0, k, mu_s, mu_k, omega, out, residual):
    for i in prange(xn.shape[0]):
        ax = 0.0
        ay = 0.0
        count = 0
        worst = 0.0
        for q in range(s_off[i], s_off[i + 1]):
            j = s_idx[q]
            hit, dix, diy, _, _, nx, ny, pen = _contact(xs[i, 0], xs[i, 1], xs[j, 0], xs[j, 1],
                                                        reff[i] + reff[j], w[i], w[j], i, j)
            if hit:
                rx = (xs[i, 0] - xn[i, 0]) - (xs[j, 0] - xn[j, 0])
                ry = (xs[i, 1] - xn[i, 1]) - (xs[j, 1] - xn[j, 1])
                fx, fy, _, _ = _friction(rx, ry, nx, ny, pen, w[i], w[j], mu_s, mu_k)
                ax += dix + fx
                ay += diy + fy
                count += 1
        if mode == 1:
            for q in range(l_off[i], l_off[i + 1]):
                j = l_idx[q]
                hit, dix, diy, _, _ = _longrange(xn[i, 0], xn[i, 1], xn[j, 0], xn[j, 1],
                                                 xs[i, 0], xs[i, 1], xs[j, 0], xs[j, 1],
                                                 reff[i] + reff[j], w[i], w[j], dt, tau0, k, i, j)
                if hit:
                    ax += dix
                    ay += diy
                    count += 1
        elif mode == 2:
            for q in range(l_off[i], l_off[i + 1]):
                j = l_idx[q]
                hit, dix, diy, _, _, nx, ny = _avoidance(xn[i, 0], xn[i, 1], xn[j, 0], xn[j, 1],
                                                         xs[i, 0], xs[i, 1], xs[j, 0], xs[j, 1],
                                                         reff[i] + reff[j], w[i], w[j], dt, tau0,
                                                         k, i, j)
                if hit:
                    ax += dix
                    ay += diy
                    count += 1
                    mag = math.sqrt(dix * dix + diy * diy)
                    if mag > 0.0:
                        ratio = abs(dix * nx + diy * ny) / mag
                        if ratio > worst:
                            worst = ratio
        if w[i] > 0.0:
            for s in range(segs.shape[0]):
                hit, dx, dy = _wall_segment(xs[i, 0], xs[i, 1], xn[i, 0], xn[i, 1], reff[i],
                                            segs[s, 0], segs[s, 1], segs[s, 2], segs[s, 3],
                                            mu_s, mu_k)
                if hit:
                    ax += dx
                    ay += dy
                    count += 1
            for c in range(circs.shape[0]):
                hit, dx, dy = _wall_circle(xs[i, 0], xs[i, 1], xn[i, 0], xn[i, 1], reff[i],
                                           circs[c, 0], circs[c, 1], circs[c, 2], mu_s, mu_k)
                if hit:
                    ax += dx
                    ay += dy
                    count += 1
        if count > 0:
            out[i, 0] = omega * ax / count
            out[i, 1] = omega * ay / count
        else:
            out[i, 0] = 0.0
            out[i, 1] = 0.0
        residual[i] = worst


@njit(parallel=True, cache=True)
def _xsph(x, v, species, same_species, off, idx, c, h, out):
    norm = 315.0 / (64.0 * math.pi * h ** 9)
    h2 = h * h
    for i in prange(x.shape[0]):
        sx = 0.0
        sy = 0.0
        wsum = 0.0
        for q in range(off[i], off[i + 1]):
            j = idx[q]
            if same_species and species[j] != species[i]:
                continue
            dx = x[i, 0] - x[j, 0]
            dy = x[i, 1] - x[j, 1]
            r2 = dx * dx + dy * dy
            if r2 > h2:
                continue
            wk = norm * (h2 - r2) ** 3
            sx += (v[j, 0] - v[i, 0]) * wk
            sy += (v[j, 1] - v[i, 1]) * wk
            wsum += wk
        # a total weight c * sum(W) above one would overshoot the neighbour mean
        gain = c / max(1.0, c * wsum)
        out[i, 0] = v[i, 0] + gain * sx
        out[i, 1] = v[i, 1] + gain * sy


# -- passes on a state ---------------------------------------------------------

def short_cell_size(state: SimState) -> float:
    """Twice the largest effective diameter in the scene."""
    return 4.0 * float(state.effective_radii().max())


def find_neighbors(state: SimState) -> Neighbors:
    """Build both grids on x^n and gather candidate lists for this step."""
    p = state.params
    x = state.agents.position
    reff = state.effective_radii()
    rmax = float(reff.max())
    margin = 2.0 * p.v_max * p.dt
    short_grid = spatial.build(x, short_cell_size(state))
    short = spatial.neighbor_lists(short_grid, x, reff + rmax + margin)
    long_grid = long = None
    if p.avoidance_mode != AvoidanceMode.NONE:
        long_grid = spatial.build(x, p.longrange_radius)
        long = spatial.neighbor_lists(long_grid, x, p.longrange_radius)
    return Neighbors(short, long, short_grid, long_grid)


def stability_pass(state: SimState, nbrs: Neighbors) -> SimState:
    """Resolve overlaps left in x^n, moving x^n and x* together."""
    a = state.agents
    reff = state.effective_radii()
    delta = np.empty_like(a.position)
    for _ in range(state.params.stability_iters):
        _stability_deltas(a.position, reff, a.inv_mass, nbrs.short.offset, nbrs.short.index,
                          state._segments, state._circles, delta)
        a.position += delta
        a.predicted += delta
    return state


def solve_pass(state: SimState, nbrs: Neighbors) -> SimState:
    """Jacobi iterations on x*: contact with friction, anticipatory kernel, walls."""
    p = state.params
    a = state.agents
    reff = state.effective_radii()
    mode = int(p.avoidance_mode)
    if nbrs.long is None:
        l_off = np.zeros(len(a) + 1, dtype=np.int64)
        l_idx = np.zeros(0, dtype=np.int64)
    else:
        l_off, l_idx = nbrs.long.offset, nbrs.long.index
    delta = np.empty_like(a.position)
    residual = np.zeros(len(a))
    worst = 0.0
    for _ in range(p.solve_iters):
        _solve_deltas(a.position, a.predicted, reff, a.inv_mass, nbrs.short.offset,
                      nbrs.short.index, l_off, l_idx, state._segments, state._circles, mode,
                      p.dt, p.tau0, p.k_longrange, p.mu_static, p.mu_kinetic, p.omega,
                      delta, residual)
        a.predicted += delta
        if len(residual):
            worst = max(worst, float(residual.max()))
    state.tangential_residual = worst
    return state


def xsph(state: SimState, velocity: np.ndarray) -> np.ndarray:
    """XSPH-smoothed copy of ``velocity`` using neighbours of x* within ``h``.

    With ``params.xsph_same_species`` only agents of the same species smooth
    each other, so opposing groups do not average their velocities away.
    """
    p = state.params
    x = state.agents.predicted
    if p.xsph_c == 0 or len(x) < 2:
        return velocity.copy()
    grid = spatial.build(x, max(p.xsph_h, short_cell_size(state)))
    nl = spatial.neighbor_lists(grid, x, p.xsph_h)
    out = np.empty_like(velocity)
    _xsph(x, velocity, state.agents.species, p.xsph_same_species, nl.offset, nl.index,
          p.xsph_c, p.xsph_h, out)
    return out


def update_velocities(state: SimState, v_prev: np.ndarray) -> SimState:
    """Velocity from displacement, then XSPH, clamping, and the x^{n+1} commit."""
    p = state.params
    a = state.agents
    v = (a.predicted - a.position) / p.dt
    v = xsph(state, v)
    a.velocity = clamp_velocity(v, v_prev, p.v_max, p.a_max, p.dt)
    a.prev_position = a.position
    a.position = a.predicted.copy()
    return state


def step(state: SimState) -> SimState:
    """Advance the whole crowd by one time step."""
    p = state.params
    a = state.agents
    n = len(a)
    if n == 0:
        state.step_index += 1
        return state
    v_pref = planner.preferred_velocities(a.position, a.pref_speed, a.radius, a.goal, state.goals)
    if p.jitter > 0:
        moving = np.any(v_pref != 0.0, axis=1)
        noise = planner.jitter(p.rng_seed, state.step_index, n, p.jitter * a.pref_speed)
        v_pref[moving] += noise[moving]
    v_prev = a.velocity.copy()
    a.predicted = predict(a.position, blend_velocity(a.velocity, v_pref, p.alpha), p.dt)
    nbrs = find_neighbors(state)
    stability_pass(state, nbrs)
    solve_pass(state, nbrs)
    update_velocities(state, v_prev)
    state.step_index += 1
    state.arrived |= planner.goal_distances(a.position, a.goal, state.goals) <= a.radius
    if not (np.all(np.isfinite(a.position)) and np.all(np.isfinite(a.velocity))):
        raise FloatingPointError(f"non-finite agent state after step {state.step_index}")
    return state


def run(state: SimState, steps: int,
        callback: Optional[Callable[[SimState], object]] = None) -> SimState:
    """Call :func:`step` ``steps`` times, invoking ``callback(state)`` after each."""
    for _ in range(steps):
        step(state)
        if callback is not None:
            callback(state)
    return state
