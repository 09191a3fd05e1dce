"""Command-line runner: scenario in, trajectories and metrics out.

    pbcrowd --scenario scen.json --out runs/a --steps 480 --seed 7 --mode avoidance --stride 2

Writes ``trajectory.csv`` (one row per agent per emitted step), ``steps.csv``
(per-step metrics, deterministic) and ``report.json`` (run summary including
wall-clock timing).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, TextIO

import numba
import numpy as np

from . import metrics, scenario, solver
from .core import AvoidanceMode

TRAJECTORY_HEADER = "step,agent,x,y,vx,vy,radius"
STEPS_PER_FRAME = 2  # 48 Hz solver, 24 fps frames


@dataclass
class RunConfig:
    scenario: Path
    out: Path
    steps: Optional[int] = None
    seed: int = 0
    mode: Optional[str] = None
    threads: Optional[int] = None
    stride: int = 1

    def __post_init__(self):
        self.scenario = Path(self.scenario)
        self.out = Path(self.out)
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.steps is not None and self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be >= 1")


def fmt(value: float) -> str:
    """Fixed 9-significant-digit positional decimal."""
    return np.format_float_positional(value, precision=9, unique=False, fractional=False, trim="-")


def trajectory_rows(step: int, state) -> Iterable[str]:
    a = state.agents
    for k in range(len(a)):
        x, y = a.position[k]
        vx, vy = a.velocity[k]
        yield f"{step},{k},{fmt(x)},{fmt(y)},{fmt(vx)},{fmt(vy)},{fmt(a.radius[k])}\n"


class TrajectoryWriter:
    """Streams snapshots to CSV, keeping every ``stride``-th step."""

    def __init__(self, stream: TextIO, stride: int = 1):
        self.stream = stream
        self.stride = stride
        stream.write(TRAJECTORY_HEADER + "\n")

    def emit(self, step: int, state) -> bool:
        if step % self.stride:
            return False
        self.stream.writelines(trajectory_rows(step, state))
        return True


def export_trajectories(snapshots: Iterable, path, stride: int = 1) -> None:
    """Write ``(step, state)`` pairs to ``path``."""
    with open(path, "w", newline="") as fh:
        writer = TrajectoryWriter(fh, stride)
        for step, state in snapshots:
            writer.emit(step, state)


def read_trajectories(path) -> np.ndarray:
    """Load a trajectory file as a structured array."""
    return np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="ascii")


def _set_threads(threads: Optional[int]) -> None:
    if threads is None:
        return
    limit = numba.config.NUMBA_NUM_THREADS
    if threads > limit:
        raise RuntimeError(f"--threads {threads} exceeds the thread pool size {limit}; "
                           f"set NUMBA_NUM_THREADS={threads} in the environment")
    numba.set_num_threads(threads)


def run(config: RunConfig, log: TextIO = sys.stdout) -> int:
    try:
        scen = scenario.load_scenario(config.scenario)
    except FileNotFoundError:
        print(f"error: scenario file not found: {config.scenario}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read {config.scenario}: {exc}", file=sys.stderr)
        return 2
    except scenario.ScenarioError as exc:
        print(f"error: {config.scenario}: {exc}", file=sys.stderr)
        return 3
    try:
        _set_threads(config.threads)
        overrides = {}
        if config.mode is not None:
            overrides["avoidance_mode"] = AvoidanceMode.parse(config.mode)
        state = scenario.build_state(scen, config.seed, **overrides)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    steps = config.steps or scen.duration
    try:
        config.out.mkdir(parents=True, exist_ok=True)
        traj = open(config.out / "trajectory.csv", "w", newline="")
        table = open(config.out / "steps.csv", "w", newline="")
    except OSError as exc:
        print(f"error: cannot write to {config.out}: {exc}", file=sys.stderr)
        return 4

    series = []
    with traj, table:
        writer = TrajectoryWriter(traj, config.stride)
        table.write("step,max_penetration,mean_speed,progress_speed,arrived_fraction\n")
        for k in range(steps):
            writer.emit(k, state)
            t0 = time.perf_counter()
            solver.step(state)
            elapsed = (time.perf_counter() - t0) * 1e3
            m = metrics.collect(state, elapsed)
            series.append(m)
            table.write(f"{m.step},{fmt(m.max_penetration)},{fmt(m.mean_speed)},"
                        f"{fmt(m.progress_speed)},{fmt(m.arrived_fraction)}\n")

    report = metrics.run_report(series, state.n_agents, scen.name, STEPS_PER_FRAME)
    report.update(seed=config.seed, mode=state.params.avoidance_mode.label,
                  threads=numba.get_num_threads(), stride=config.stride)
    (config.out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"{scen.name}: {state.n_agents} agents, {steps} steps, "
          f"{report['wall_clock_ms_mean']:.2f} ms/step (p95 {report['wall_clock_ms_p95']:.2f}), "
          f"{report['ms_per_frame_mean']:.2f} ms/frame at {STEPS_PER_FRAME} steps/frame; "
          f"peak penetration {report['peak_max_penetration']:.4f} m, "
          f"arrived {report['final_arrived_fraction']:.1%}", file=log)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pbcrowd", description="Run a position-based crowd scenario.")
    p.add_argument("--scenario", required=True, type=Path, help="scenario JSON file")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--steps", type=int, help="solver steps (default: scenario duration)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["longrange", "avoidance", "none"])
    p.add_argument("--threads", type=int, help="solver threads (default: numba's)")
    p.add_argument("--stride", type=int, default=1, help="emit every k-th step")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(args.scenario, args.out, args.steps, args.seed, args.mode,
                           args.threads, args.stride)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
