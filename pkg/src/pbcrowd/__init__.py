"""Position-based multi-agent crowd dynamics."""

import os
import sys

_USER_LAYERS = "NUMBA_THREADING_LAYER_PRIORITY" in os.environ
if "numba" not in sys.modules:
    # numba's TBB layer warns on older TBB builds; prefer OpenMP, then workqueue
    os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")
    # the pool size is fixed when numba loads; make room for up to 8 solver
    # threads even on small machines, while the default below stays at the core count
    os.environ.setdefault("NUMBA_NUM_THREADS", str(max(os.cpu_count() or 1, 8)))

import numba  # noqa: E402

if not _USER_LAYERS:
    # read when the pool launches, so this still applies if numba was imported first
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
numba.set_num_threads(min(os.cpu_count() or 1, numba.config.NUMBA_NUM_THREADS))

from .core import (  # noqa: E402
    AgentState,
    AvoidanceMode,
    Circle,
    Segment,
    SimParams,
    effective_radius,
    validate_params,
)
from .planner import GoalSets, preferred_velocity  # noqa: E402
from .scenario import build_state, instantiate, load_bundled, load_scenario, parse_scenario  # noqa: E402
from .solver import SimState, run, step  # noqa: E402

__all__ = [
    "AgentState",
    "AvoidanceMode",
    "Circle",
    "GoalSets",
    "Segment",
    "SimParams",
    "SimState",
    "build_state",
    "effective_radius",
    "instantiate",
    "load_bundled",
    "load_scenario",
    "parse_scenario",
    "preferred_velocity",
    "run",
    "step",
    "validate_params",
]
