"""Pairwise and wall constraint projections.

Every kernel is a pure function of its arguments and returns position
corrections only; summing and averaging them is the solver's business. The
``_``-prefixed versions are numba scalar kernels shared with the solver loops;
the public wrappers take 2-vectors and return :class:`PairCorrection` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .core import Circle, Segment

A_EPS = 1e-9          # (m/s)^2, below this relative speed ttc is undefined
DEGENERATE_DIST = 1e-9
_TAU_SNAP = 1e-9


@dataclass
class PairCorrection:
    delta_i: np.ndarray
    delta_j: np.ndarray
    # contact normal used by the avoidance kernel, pointing from j to i
    normal: Optional[np.ndarray] = None


# -- numba kernels -----------------------------------------------------------

@njit(cache=True)
def _pair_direction(i, j):
    """Deterministic unit vector for coincident centers, antisymmetric in (i, j)."""
    lo = min(i, j)
    hi = max(i, j)
    h = math.sin(lo * 12.9898 + hi * 78.233 + 0.5) * 43758.5453
    theta = 2.0 * math.pi * (h - math.floor(h))
    ux = math.cos(theta)
    uy = math.sin(theta)
    if i == lo and i != j:
        return ux, uy
    if i == j:
        return ux, uy
    return -ux, -uy


@njit(cache=True)
def _contact(xi, yi, xj, yj, reach, wi, wj, i, j):
    """Project ``|x_i - x_j| >= reach``.

    Returns ``(hit, dix, diy, djx, djy, nx, ny, penetration)``; n points from j to i.
    """
    wsum = wi + wj
    dx = xi - xj
    dy = yi - yj
    d2 = dx * dx + dy * dy
    if wsum <= 0.0 or d2 >= reach * reach:
        return False, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    dist = math.sqrt(d2)
    if dist < DEGENERATE_DIST:
        nx, ny = _pair_direction(i, j)
    else:
        nx = dx / dist
        ny = dy / dist
    pen = reach - dist
    si = pen * wi / wsum
    sj = pen * wj / wsum
    return True, si * nx, si * ny, -sj * nx, -sj * ny, nx, ny, pen


@njit(cache=True)
def _friction(rx, ry, nx, ny, pen, wi, wj, mu_s, mu_k):
    """Remove (static) or damp (kinetic) the tangential part of relative displacement (rx, ry)."""
    wsum = wi + wj
    dn = rx * nx + ry * ny
    tx = rx - dn * nx
    ty = ry - dn * ny
    tl = math.sqrt(tx * tx + ty * ty)
    if wsum <= 0.0 or tl == 0.0:
        return 0.0, 0.0, 0.0, 0.0
    if tl < mu_s * pen:
        scale = 1.0
    else:
        scale = min(mu_k * pen / tl, 1.0)
    cx = tx * scale
    cy = ty * scale
    return -wi / wsum * cx, -wi / wsum * cy, wj / wsum * cx, wj / wsum * cy


@njit(cache=True)
def _ttc(px, py, vx, vy, reach, tau0):
    """Time until the gap (px, py) closing at relative velocity (vx, vy) shrinks to ``reach``.

    -1.0 stands for "no valid collision". The smaller root of a t^2 - 2 b t + c = 0
    is evaluated as c / (b + sqrt(b^2 - a c)), the same value as (b - sqrt(.)) / a
    without the cancellation near contact.
    """
    a = vx * vx + vy * vy
    b = -(px * vx + py * vy)
    c = px * px + py * py - reach * reach
    if a <= A_EPS or c < 0.0 or b <= 0.0:
        return -1.0
    disc = b * b - a * c
    if disc < 0.0:
        return -1.0
    tau = c / (b + math.sqrt(disc))
    if tau > 0.0 and tau < tau0:
        return tau
    return -1.0


@njit(cache=True)
def _discretize(tau, dt):
    q = tau / dt
    k = math.floor(q)
    if q - k > 1.0 - _TAU_SNAP:
        k += 1.0
    return min(k * dt, tau)


@njit(cache=True)
def _stiffness(tau_hat, tau0, k):
    return k * math.exp(-tau_hat * tau_hat / tau0)


@njit(cache=True)
def _future_contact(xni, yni, xnj, ynj, xsi, ysi, xsj, ysj, reach, wi, wj, dt, tau0, i, j):
    """Shared front half of the long-range and avoidance kernels.

    Returns ``(hit, tau_hat, tau_tilde, xhat_i, yhat_i, xhat_j, yhat_j,
    xtil_i, ytil_i, xtil_j, ytil_j, contact...)``.
    """
    vxi = (xsi - xni) / dt
    vyi = (ysi - yni) / dt
    vxj = (xsj - xnj) / dt
    vyj = (ysj - ynj) / dt
    tau = _ttc(xni - xnj, yni - ynj, vxi - vxj, vyi - vyj, reach, tau0)
    if tau < 0.0:
        return (False, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    th = _discretize(tau, dt)
    tt = dt + th
    hxi = xni + th * vxi
    hyi = yni + th * vyi
    hxj = xnj + th * vxj
    hyj = ynj + th * vyj
    txi = xni + tt * vxi
    tyi = yni + tt * vyi
    txj = xnj + tt * vxj
    tyj = ynj + tt * vyj
    hit, dix, diy, djx, djy, nx, ny, pen = _contact(txi, tyi, txj, tyj, reach, wi, wj, i, j)
    return (hit, th, tt, hxi, hyi, hxj, hyj, txi, tyi, txj, tyj,
            dix, diy, djx, djy, nx, ny)


@njit(cache=True)
def _longrange(xni, yni, xnj, ynj, xsi, ysi, xsj, ysj, reach, wi, wj, dt, tau0, k, i, j):
    (hit, th, tt, hxi, hyi, hxj, hyj, txi, tyi, txj, tyj,
     dix, diy, djx, djy, nx, ny) = _future_contact(
        xni, yni, xnj, ynj, xsi, ysi, xsj, ysj, reach, wi, wj, dt, tau0, i, j)
    if not hit:
        return False, 0.0, 0.0, 0.0, 0.0
    # future positions move tt/dt times as far as x*, so map the correction back
    scale = _stiffness(th, tau0, k) * dt / tt
    return True, scale * dix, scale * diy, scale * djx, scale * djy


@njit(cache=True)
def _avoidance(xni, yni, xnj, ynj, xsi, ysi, xsj, ysj, reach, wi, wj, dt, tau0, k, i, j):
    """Returns ``(hit, dix, diy, djx, djy, nx, ny)``; corrections are tangential to n."""
    (hit, th, tt, hxi, hyi, hxj, hyj, txi, tyi, txj, tyj,
     dix, diy, djx, djy, nx, ny) = _future_contact(
        xni, yni, xnj, ynj, xsi, ysi, xsj, ysj, reach, wi, wj, dt, tau0, i, j)
    if not hit:
        return False, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    cxi = txi + dix
    cyi = tyi + diy
    cxj = txj + djx
    cyj = tyj + djy
    ex = cxi - cxj
    ey = cyi - cyj
    el = math.sqrt(ex * ex + ey * ey)
    if el > DEGENERATE_DIST:
        nx = ex / el
        ny = ey / el
    dx = (cxi - hxi) - (cxj - hxj)
    dy = (cyi - hyi) - (cyj - hyj)
    dn = dx * nx + dy * ny
    tx = dx - dn * nx
    ty = dy - dn * ny
    # one more pass strips the rounding residue of the first projection
    rn = tx * nx + ty * ny
    tx -= rn * nx
    ty -= rn * ny
    wsum = wi + wj
    s = _stiffness(th, tau0, k)
    ai = s * wi / wsum
    aj = s * wj / wsum
    return True, ai * tx, ai * ty, -aj * tx, -aj * ty, nx, ny


@njit(cache=True)
def _closest_on_segment(px, py, ax, ay, bx, by):
    ex = bx - ax
    ey = by - ay
    t = ((px - ax) * ex + (py - ay) * ey) / (ex * ex + ey * ey)
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return ax + t * ex, ay + t * ey


@njit(cache=True)
def _wall_segment(xs, ys, xn, yn, r, ax, ay, bx, by, mu_s, mu_k):
    qx, qy = _closest_on_segment(xs, ys, ax, ay, bx, by)
    dx = xs - qx
    dy = ys - qy
    d2 = dx * dx + dy * dy
    if d2 >= r * r:
        return False, 0.0, 0.0
    dist = math.sqrt(d2)
    if dist < DEGENERATE_DIST:
        # centre on the wall line: push out on the side the agent came from
        ex = bx - ax
        ey = by - ay
        el = math.sqrt(ex * ex + ey * ey)
        nx = -ey / el
        ny = ex / el
        if (xn - ax) * nx + (yn - ay) * ny < 0.0:
            nx = -nx
            ny = -ny
    else:
        nx = dx / dist
        ny = dy / dist
    pen = r - dist
    fx, fy, _, _ = _friction(xs - xn, ys - yn, nx, ny, pen, 1.0, 0.0, mu_s, mu_k)
    return True, pen * nx + fx, pen * ny + fy


@njit(cache=True)
def _wall_circle(xs, ys, xn, yn, r, cx, cy, cr, mu_s, mu_k):
    dx = xs - cx
    dy = ys - cy
    reach = r + cr
    d2 = dx * dx + dy * dy
    if d2 >= reach * reach:
        return False, 0.0, 0.0
    dist = math.sqrt(d2)
    if dist < DEGENERATE_DIST:
        nx = 1.0
        ny = 0.0
    else:
        nx = dx / dist
        ny = dy / dist
    pen = reach - dist
    fx, fy, _, _ = _friction(xs - xn, ys - yn, nx, ny, pen, 1.0, 0.0, mu_s, mu_k)
    return True, pen * nx + fx, pen * ny + fy


# -- Python API --------------------------------------------------------------

def _vec(v) -> tuple[float, float]:
    return float(v[0]), float(v[1])


def _pair(dix, diy, djx, djy, normal=None) -> PairCorrection:
    return PairCorrection(np.array([dix, diy]), np.array([djx, djy]),
                          None if normal is None else np.array(normal))


def contact_project(xi, xj, ri, rj, wi, wj, i=0, j=1) -> Optional[PairCorrection]:
    """Non-penetration projection of two disks; ``None`` when they do not overlap.

    ``i`` and ``j`` only matter for coincident centres, where they seed the
    separation direction.
    """
    if not wi + wj > 0:
        raise ValueError("at least one of the two inverse masses must be positive")
    hit, dix, diy, djx, djy, nx, ny, _ = _contact(*_vec(xi), *_vec(xj), float(ri + rj),
                                                  float(wi), float(wj), int(i), int(j))
    if not hit:
        return None
    return _pair(dix, diy, djx, djy, (nx, ny))


def friction_project(xi, xj, xni, xnj, d, n, wi, wj, mu_s, mu_k) -> PairCorrection:
    """Position-based Coulomb friction for a contact of penetration ``d`` along normal ``n``."""
    rx = (float(xi[0]) - float(xni[0])) - (float(xj[0]) - float(xnj[0]))
    ry = (float(xi[1]) - float(xni[1])) - (float(xj[1]) - float(xnj[1]))
    out = _friction(rx, ry, *_vec(n), float(d), float(wi), float(wj), float(mu_s), float(mu_k))
    return _pair(*out)


def time_to_collision(xni, xnj, vi, vj, reach, tau0) -> Optional[float]:
    """Earliest ``t`` in ``(0, tau0)`` at which the disks touch, else ``None``."""
    tau = _ttc(float(xni[0]) - float(xnj[0]), float(xni[1]) - float(xnj[1]),
               float(vi[0]) - float(vj[0]), float(vi[1]) - float(vj[1]),
               float(reach), float(tau0))
    return None if tau < 0 else tau


def discretize_tau(tau: float, dt: float) -> float:
    """Largest multiple of ``dt`` not exceeding ``tau``."""
    return _discretize(float(tau), float(dt))


def longrange_stiffness(tau_hat, tau0, k):
    return k * np.exp(-np.square(tau_hat) / tau0)


def _future_args(xni, xnj, xsi, xsj, ri, rj, wi, wj, dt, tau0, k):
    return (*_vec(xni), *_vec(xnj), *_vec(xsi), *_vec(xsj), float(ri + rj),
            float(wi), float(wj), float(dt), float(tau0), float(k), 0, 1)


def longrange_project(xni, xnj, xsi, xsj, ri, rj, wi, wj, dt, tau0, k) -> Optional[PairCorrection]:
    """Anticipatory non-penetration at the first discrete step past the predicted contact."""
    hit, dix, diy, djx, djy = _longrange(*_future_args(xni, xnj, xsi, xsj, ri, rj, wi, wj,
                                                       dt, tau0, k))
    return _pair(dix, diy, djx, djy) if hit else None


def avoidance_project(xni, xnj, xsi, xsj, ri, rj, wi, wj, dt, tau0, k) -> Optional[PairCorrection]:
    """Tangential-only response to a predicted collision (sidestep instead of brake)."""
    hit, dix, diy, djx, djy, nx, ny = _avoidance(*_future_args(xni, xnj, xsi, xsj, ri, rj,
                                                               wi, wj, dt, tau0, k))
    return _pair(dix, diy, djx, djy, (nx, ny)) if hit else None


def closest_point_on_obstacle(p, obs) -> np.ndarray:
    px, py = _vec(p)
    if isinstance(obs, Segment):
        return np.array(_closest_on_segment(px, py, *obs.a, *obs.b))
    if isinstance(obs, Circle):
        cx, cy = obs.center
        dx, dy = px - cx, py - cy
        dist = math.hypot(dx, dy)
        if dist < DEGENERATE_DIST:
            return np.array([cx + obs.radius, cy])
        return np.array([cx + obs.radius * dx / dist, cy + obs.radius * dy / dist])
    raise TypeError(f"not an obstacle: {obs!r}")


def wall_project(xs, xn, r, obs, mu_s, mu_k) -> np.ndarray:
    """Correction pushing an agent of radius ``r`` out of an immovable obstacle."""
    if isinstance(obs, Segment):
        _, dx, dy = _wall_segment(*_vec(xs), *_vec(xn), float(r), *obs.a, *obs.b,
                                  float(mu_s), float(mu_k))
    elif isinstance(obs, Circle):
        _, dx, dy = _wall_circle(*_vec(xs), *_vec(xn), float(r), *obs.center, obs.radius,
                                 float(mu_s), float(mu_k))
    else:
        raise TypeError(f"not an obstacle: {obs!r}")
    return np.array([dx, dy])
