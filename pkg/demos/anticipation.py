"""
Two agents on a collision course
================================

Walks through the anticipatory constraint on a single pair: the time to
collision, the discretised projection time and the correction each kernel
produces.
"""

import numpy as np

from pbcrowd import constraints
from pbcrowd.core import SimParams

p = SimParams()

# head-on: 10 m apart, closing at 2 m/s, radii 0.5 (effective 0.525)
xi, xj = np.array([0.0, 0.0]), np.array([10.0, 0.0])
vi, vj = np.array([1.0, 0.0]), np.array([-1.0, 0.0])
reach = 2 * 0.5 * (1 + p.radius_expansion)

tau = constraints.time_to_collision(xi, xj, vi, vj, reach, p.tau0)
print(f"time to collision   {tau:.4f} s")
tau_hat = constraints.discretize_tau(tau, p.dt)
print(f"on the step grid    {tau_hat:.4f} s  ({tau_hat / p.dt:.0f} steps)")
print(f"stiffness           {constraints.longrange_stiffness(tau_hat, p.tau0, p.k_longrange):.4f}")

# predicted positions one step ahead
xsi, xsj = xi + p.dt * vi, xj + p.dt * vj
lr = constraints.longrange_project(xi, xj, xsi, xsj, 0.525, 0.525, 1, 1, p.dt, p.tau0,
                                   p.k_longrange)
print("long-range push     ", np.round(lr.delta_i, 6), np.round(lr.delta_j, 6))

# the avoidance kernel keeps only the sideways part; head-on there is none
av = constraints.avoidance_project(xi, xj, xsi, xsj, 0.525, 0.525, 1, 1, p.dt, p.tau0,
                                   p.k_longrange)
print("avoidance, head-on  ", None if av is None else np.round(av.delta_i, 6))

# offset the second agent by half a metre and the sideways part appears
xj_off = xj + [0.0, 0.5]
av = constraints.avoidance_project(xi, xj_off, xsi, xj_off + p.dt * vj, 0.525, 0.525, 1, 1,
                                   p.dt, p.tau0, p.k_longrange)
print("avoidance, offset   ", np.round(av.delta_i, 6), np.round(av.delta_j, 6))
