"""
Timing table
============

Steps each bundled scenario for a short while and reports solver cost per
step and per 24 fps frame (two steps per frame). Numbers depend on the
machine and the thread count.
"""

import time

import numba

from pbcrowd import scenario, solver

STEPS = 24

print(f"{numba.get_num_threads()} solver thread(s)\n")
print(f"{'scenario':28s} {'agents':>7s} {'ms/step':>8s} {'ms/frame':>9s}")
for name in scenario.bundled_names():
    state = scenario.build_state(scenario.load_bundled(name), seed=0)
    solver.run(state, 2)  # compile and warm caches
    t0 = time.perf_counter()
    solver.run(state, STEPS)
    ms = (time.perf_counter() - t0) / STEPS * 1e3
    print(f"{name:28s} {state.n_agents:7d} {ms:8.1f} {2 * ms:9.1f}")
