"""
Flow through a bottleneck
=========================

480 agents leave a room through a funnel into a short corridor. Prints
the exit curve; an agent has exited once its centre passes the corridor end.
"""

import numpy as np

from pbcrowd import scenario, solver

sc = scenario.load_bundled("bottleneck")
corridor_end = max(max(o.a[0], o.b[0]) for o in sc.obstacles)
state = scenario.build_state(sc, seed=0)

print("  time  exited")
first = {}
while state.time < 300.0:
    solver.run(state, 480)  # ten seconds
    out = state.agents.position[:, 0] > corridor_end
    print(f"  {state.time:4.0f}  {out.mean():6.1%}")
    for q in (0.5, 0.95):
        if q not in first and out.mean() >= q:
            first[q] = state.time
    if out.all():
        break

for q, t in first.items():
    print(f"{q:.0%} out after {t:.0f} s")

# flow rate through the door once the queue has formed
if 0.5 in first and 0.95 in first:
    rate = 0.45 * len(state.agents) / (first[0.95] - first[0.5])
    print(f"steady flow about {rate:.1f} agents/s ({rate / 7.0:.2f} per metre of door)")
