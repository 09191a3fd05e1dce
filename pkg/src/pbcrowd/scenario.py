"""Declarative crowd scenarios.

A scenario is a JSON document (``schema_version`` 1)::

    {
      "schema_version": 1,
      "name": "dense_passing",
      "description": "free text",
      "duration": 2400,
      "goals": [
        {"kind": "offset", "offset": [49.0, 0.0]},
        {"kind": "points", "points": [[50.0, 0.0]]},
        {"kind": "formation", "formation": {...}, "origin": [0, 0], "assign": "each", "noise": 0.5}
      ],
      "groups": [
        {"formation": {"type": "grid", "rows": 10, "cols": 40, "spacing": 2.5},
         "origin": [-25.0, -48.75], "radius": 0.5, "mass": 1.0, "speed": 1.4,
         "goal": 0, "species": "pedestrian"}
      ],
      "obstacles": [{"type": "segment", "a": [0, 1.5], "b": [4, 1.5]},
                    {"type": "circle", "center": [10, 0], "radius": 2}],
      "params": {"avoidance_mode": "avoidance"}
    }

Goal kinds: ``points`` is a shared set (each agent walks to the nearest point),
``offset`` gives every agent its own target at start + offset, and
``formation`` lays points out with a formation generator and either shares
them (``assign: nearest``) or hands point k to the k-th agent of each group
using the goal (``assign: each``). ``noise`` adds a uniform perturbation in
``[-noise, noise]`` per axis to per-agent targets.

Formations: ``grid`` (rows along y, cols along x, row-major from the origin),
``ellipse`` (square lattice clipped to an ellipse centred on the origin) and
``explicit`` (points relative to the origin). ``radius`` is a number or a
``[lo, hi]`` range sampled uniformly per agent.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import spatial
from .core import AgentState, AvoidanceMode, Circle, PARAM_FIELDS, Segment, SimParams, validate_params
from .planner import GoalSets, preferred_velocity  # noqa: F401  (re-exported)

SCHEMA_VERSION = 1
SPEED_SPREAD = 0.1


class ScenarioError(ValueError):
    pass


class ParseError(ScenarioError):
    """The document is not well-formed JSON."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}" if line else message)
        self.line = line
        self.column = column


class ValidationError(ScenarioError):
    """Well-formed document with a bad field; ``path`` locates it, e.g. ``groups[1].mass``."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class OverlapError(ScenarioError):
    pass


Vec = tuple[float, float]


@dataclass(frozen=True)
class Grid:
    rows: int
    cols: int
    spacing: float


@dataclass(frozen=True)
class Ellipse:
    semi_axes: Vec
    spacing: float


@dataclass(frozen=True)
class Explicit:
    points: tuple[Vec, ...]


Formation = Union[Grid, Ellipse, Explicit]


@dataclass(frozen=True)
class GoalSpec:
    kind: str                          # "points" | "offset" | "formation"
    points: tuple[Vec, ...] = ()
    offset: Vec = (0.0, 0.0)
    formation: Optional[Formation] = None
    origin: Vec = (0.0, 0.0)
    assign: str = "nearest"            # "nearest" | "each"
    noise: float = 0.0

    @property
    def per_agent(self) -> bool:
        return self.kind == "offset" or (self.kind == "formation" and self.assign == "each")


@dataclass(frozen=True)
class GroupSpec:
    formation: Formation
    origin: Vec = (0.0, 0.0)
    radius: Union[float, Vec] = 0.5
    mass: float = 1.0
    speed: float = 1.4
    goal: int = 0
    species: str = "pedestrian"


@dataclass(frozen=True)
class Scenario:
    name: str
    groups: tuple[GroupSpec, ...]
    goals: tuple[GoalSpec, ...]
    obstacles: tuple = ()
    params: tuple[tuple[str, object], ...] = ()
    duration: int = 1000
    description: str = ""

    @property
    def param_overrides(self) -> dict:
        return dict(self.params)

    def sim_params(self, **extra) -> SimParams:
        overrides = {**self.param_overrides, **extra}
        return validate_params(SimParams().replace(**overrides))

    @property
    def agent_count(self) -> int:
        return sum(len(formation_points(g.formation)) for g in self.groups)

    @property
    def species(self) -> list[str]:
        names = []
        for g in self.groups:
            if g.species not in names:
                names.append(g.species)
        return names


# -- formation generators ------------------------------------------------------

def formation_points(f: Formation) -> np.ndarray:
    """Points of a formation relative to its origin."""
    if isinstance(f, Grid):
        r, c = np.meshgrid(np.arange(f.rows), np.arange(f.cols), indexing="ij")
        return np.column_stack([c.ravel() * f.spacing, r.ravel() * f.spacing]).astype(np.float64)
    if isinstance(f, Ellipse):
        a, b = f.semi_axes
        nx = int(math.floor(a / f.spacing))
        ny = int(math.floor(b / f.spacing))
        ys, xs = np.meshgrid(np.arange(-ny, ny + 1), np.arange(-nx, nx + 1), indexing="ij")
        pts = np.column_stack([xs.ravel() * f.spacing, ys.ravel() * f.spacing])
        inside = (pts[:, 0] / a) ** 2 + (pts[:, 1] / b) ** 2 <= 1.0 + 1e-12
        return pts[inside].astype(np.float64)
    if isinstance(f, Explicit):
        return np.array(f.points, dtype=np.float64).reshape(-1, 2)
    raise TypeError(f"not a formation: {f!r}")


# -- parsing -------------------------------------------------------------------

def parse_scenario(document: str) -> Scenario:
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return from_dict(raw)


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def bundled_names() -> list[str]:
    files = resources.files("pbcrowd") / "scenarios"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_bundled(name: str) -> Scenario:
    path = resources.files("pbcrowd") / "scenarios" / f"{name}.json"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled scenario {name!r}; have {bundled_names()}")
    return parse_scenario(path.read_text())


class _Fields:
    """Pops fields off a mapping, rejecting leftovers, with a path for errors."""

    def __init__(self, raw, path: str):
        if not isinstance(raw, dict):
            raise ValidationError(path or "<root>", f"expected an object, got {type(raw).__name__}")
        self.raw = dict(raw)
        self.path = path

    def at(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def take(self, key, check=None, default=dataclasses.MISSING):
        if key not in self.raw:
            if default is dataclasses.MISSING:
                raise ValidationError(self.at(key), "required field missing")
            return default
        value = self.raw.pop(key)
        return check(value, self.at(key)) if check else value

    def done(self):
        if self.raw:
            raise ValidationError(self.at(sorted(self.raw)[0]), "unknown field")


def _number(v, path, positive=False, nonneg=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(path, f"expected a finite number, got {v!r}")
    if positive and not v > 0:
        raise ValidationError(path, f"must be > 0, got {v}")
    if nonneg and v < 0:
        raise ValidationError(path, f"must be >= 0, got {v}")
    return float(v)


def _positive(v, path):
    return _number(v, path, positive=True)


def _nonneg(v, path):
    return _number(v, path, nonneg=True)


def _count(v, path):
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ValidationError(path, f"expected a positive integer, got {v!r}")
    return v


def _index(v, path):
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ValidationError(path, f"expected a non-negative integer, got {v!r}")
    return v


def _text(v, path):
    if not isinstance(v, str):
        raise ValidationError(path, f"expected a string, got {v!r}")
    return v


def _vec(v, path) -> Vec:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ValidationError(path, f"expected [x, y], got {v!r}")
    return (_number(v[0], f"{path}[0]"), _number(v[1], f"{path}[1]"))


def _points(v, path) -> tuple[Vec, ...]:
    if not isinstance(v, list) or not v:
        raise ValidationError(path, "expected a non-empty list of [x, y]")
    return tuple(_vec(p, f"{path}[{k}]") for k, p in enumerate(v))


def _formation(raw, path) -> Formation:
    f = _Fields(raw, path)
    kind = f.take("type", _text)
    if kind == "grid":
        out = Grid(f.take("rows", _count), f.take("cols", _count), f.take("spacing", _positive))
    elif kind == "ellipse":
        axes = f.take("semi_axes", _vec)
        if min(axes) <= 0:
            raise ValidationError(f.at("semi_axes"), "semi-axes must be > 0")
        out = Ellipse(axes, f.take("spacing", _positive))
        if len(formation_points(out)) == 0:
            raise ValidationError(path, "ellipse holds no lattice points")
    elif kind == "explicit":
        out = Explicit(f.take("points", _points))
    else:
        raise ValidationError(f.at("type"), f"unknown formation type {kind!r}")
    f.done()
    return out


def _radius(v, path):
    if isinstance(v, (list, tuple)):
        lo, hi = _vec(v, path)
        if not 0 < lo <= hi:
            raise ValidationError(path, f"need 0 < lo <= hi, got {v!r}")
        return (lo, hi)
    return _positive(v, path)


def _group(raw, path) -> GroupSpec:
    f = _Fields(raw, path)
    g = GroupSpec(
        formation=f.take("formation", _formation),
        origin=f.take("origin", _vec, (0.0, 0.0)),
        radius=f.take("radius", _radius, 0.5),
        mass=f.take("mass", _positive, 1.0),
        speed=f.take("speed", _nonneg, 1.4),
        goal=f.take("goal", _index, 0),
        species=f.take("species", _text, "pedestrian"),
    )
    f.done()
    return g


def _goal(raw, path) -> GoalSpec:
    f = _Fields(raw, path)
    kind = f.take("kind", _text)
    if kind == "points":
        g = GoalSpec(kind, points=f.take("points", _points))
    elif kind == "offset":
        g = GoalSpec(kind, offset=f.take("offset", _vec), noise=f.take("noise", _nonneg, 0.0))
    elif kind == "formation":
        assign = f.take("assign", _text, "nearest")
        if assign not in ("nearest", "each"):
            raise ValidationError(f.at("assign"), f"expected 'nearest' or 'each', got {assign!r}")
        g = GoalSpec(kind, formation=f.take("formation", _formation),
                     origin=f.take("origin", _vec, (0.0, 0.0)), assign=assign,
                     noise=f.take("noise", _nonneg, 0.0))
    else:
        raise ValidationError(f.at("kind"), f"unknown goal kind {kind!r}")
    f.done()
    return g


def _obstacle(raw, path):
    f = _Fields(raw, path)
    kind = f.take("type", _text)
    try:
        if kind == "segment":
            out = Segment(f.take("a", _vec), f.take("b", _vec))
        elif kind == "circle":
            out = Circle(f.take("center", _vec), f.take("radius", _positive))
        else:
            raise ValidationError(f.at("type"), f"unknown obstacle type {kind!r}")
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(path, str(exc)) from None
    f.done()
    return out


_DEFAULTS = SimParams()


def _param_value(v, default, path):
    """Check ``v`` against the type of the field's default value."""
    if isinstance(default, bool):
        if not isinstance(v, bool):
            raise ValidationError(path, "expected true or false")
        return v
    if isinstance(default, int):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValidationError(path, "expected an integer")
        return v
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(path, "expected a number")
    return float(v)


def _params(raw, path) -> tuple[tuple[str, object], ...]:
    if not isinstance(raw, dict):
        raise ValidationError(path, "expected an object")
    out = []
    for key in sorted(raw):
        if key not in PARAM_FIELDS:
            raise ValidationError(f"{path}.{key}", "unknown parameter")
        value = raw[key]
        if key == "avoidance_mode":
            try:
                value = AvoidanceMode.parse(value).label
            except ValueError as exc:
                raise ValidationError(f"{path}.{key}", str(exc)) from None
        else:
            value = _param_value(value, getattr(_DEFAULTS, key), f"{path}.{key}")
        out.append((key, value))
    try:
        validate_params(SimParams().replace(**dict(out)))
    except (ValueError, TypeError) as exc:
        field_name = getattr(exc, "field", "")
        raise ValidationError(f"{path}.{field_name}" if field_name else path, str(exc)) from None
    return tuple(out)


def _list(v, path, item):
    if not isinstance(v, list):
        raise ValidationError(path, "expected a list")
    return tuple(item(x, f"{path}[{k}]") for k, x in enumerate(v))


def from_dict(raw) -> Scenario:
    f = _Fields(raw, "")
    version = f.take("schema_version", _index)
    if version != SCHEMA_VERSION:
        raise ValidationError("schema_version", f"unsupported version {version}")
    name = f.take("name", _text)
    description = f.take("description", _text, "")
    duration = f.take("duration", _count, 1000)
    goals = f.take("goals", lambda v, p: _list(v, p, _goal))
    groups = f.take("groups", lambda v, p: _list(v, p, _group))
    obstacles = f.take("obstacles", lambda v, p: _list(v, p, _obstacle), ())
    params = f.take("params", _params, ())
    f.done()
    if not groups:
        raise ValidationError("groups", "at least one group is required")
    if not goals:
        raise ValidationError("goals", "at least one goal is required")
    for k, g in enumerate(groups):
        if g.goal >= len(goals):
            raise ValidationError(f"groups[{k}].goal", f"no goal {g.goal} (have {len(goals)})")
        spec = goals[g.goal]
        if spec.kind == "formation" and spec.assign == "each":
            need = len(formation_points(g.formation))
            have = len(formation_points(spec.formation))
            if have < need:
                raise ValidationError(f"groups[{k}].goal",
                                      f"goal {g.goal} has {have} targets for {need} agents")
    return Scenario(name, groups, goals, obstacles, params, duration, description)


# -- serialisation ---------------------------------------------------------------

def _formation_dict(f: Formation) -> dict:
    if isinstance(f, Grid):
        return {"type": "grid", "rows": f.rows, "cols": f.cols, "spacing": f.spacing}
    if isinstance(f, Ellipse):
        return {"type": "ellipse", "semi_axes": list(f.semi_axes), "spacing": f.spacing}
    return {"type": "explicit", "points": [list(p) for p in f.points]}


def _goal_dict(g: GoalSpec) -> dict:
    if g.kind == "points":
        return {"kind": "points", "points": [list(p) for p in g.points]}
    if g.kind == "offset":
        return {"kind": "offset", "offset": list(g.offset), "noise": g.noise}
    return {"kind": "formation", "formation": _formation_dict(g.formation),
            "origin": list(g.origin), "assign": g.assign, "noise": g.noise}


def _obstacle_dict(o) -> dict:
    if isinstance(o, Segment):
        return {"type": "segment", "a": list(o.a), "b": list(o.b)}
    return {"type": "circle", "center": list(o.center), "radius": o.radius}


def to_dict(s: Scenario) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": s.name,
        "description": s.description,
        "duration": s.duration,
        "goals": [_goal_dict(g) for g in s.goals],
        "groups": [
            {"formation": _formation_dict(g.formation), "origin": list(g.origin),
             "radius": list(g.radius) if isinstance(g.radius, tuple) else g.radius,
             "mass": g.mass, "speed": g.speed, "goal": g.goal, "species": g.species}
            for g in s.groups
        ],
        "obstacles": [_obstacle_dict(o) for o in s.obstacles],
        "params": dict(s.params),
    }


def serialize(s: Scenario) -> str:
    return json.dumps(to_dict(s), indent=2) + "\n"


# -- instantiation ---------------------------------------------------------------

def instantiate(s: Scenario, seed: int = 0) -> tuple[AgentState, SimParams, GoalSets]:
    """Place agents, sample per-agent radius and speed, and resolve goals."""
    rng = np.random.default_rng(seed)
    species_ids = {name: k for k, name in enumerate(s.species)}
    shared = {}
    goal_sets = []

    def shared_set(g_idx):
        if g_idx not in shared:
            spec = s.goals[g_idx]
            if spec.kind == "points":
                pts = np.array(spec.points, dtype=np.float64)
            else:
                pts = formation_points(spec.formation) + np.array(spec.origin)
            shared[g_idx] = len(goal_sets)
            goal_sets.append(pts)
        return shared[g_idx]

    positions, radii, inv_mass, speeds, goal_idx, species = [], [], [], [], [], []
    for g in s.groups:
        pts = formation_points(g.formation) + np.array(g.origin)
        n = len(pts)
        positions.append(pts)
        if isinstance(g.radius, tuple):
            radii.append(rng.uniform(g.radius[0], g.radius[1], n))
        else:
            radii.append(np.full(n, g.radius))
        inv_mass.append(np.full(n, 1.0 / g.mass))
        speeds.append(g.speed * rng.uniform(1.0 - SPEED_SPREAD, 1.0 + SPEED_SPREAD, n))
        species.append(np.full(n, species_ids[g.species]))
        spec = s.goals[g.goal]
        if spec.per_agent:
            if spec.kind == "offset":
                targets = pts + np.array(spec.offset)
            else:
                targets = formation_points(spec.formation)[:n] + np.array(spec.origin)
            if spec.noise > 0:
                targets = targets + rng.uniform(-spec.noise, spec.noise, targets.shape)
            first = len(goal_sets)
            goal_sets.extend(t[None, :] for t in targets)
            goal_idx.append(np.arange(first, first + n))
        else:
            goal_idx.append(np.full(n, shared_set(g.goal)))

    agents = AgentState(
        position=np.concatenate(positions),
        velocity=np.zeros((sum(len(p) for p in positions), 2)),
        radius=np.concatenate(radii),
        inv_mass=np.concatenate(inv_mass),
        pref_speed=np.concatenate(speeds),
        goal=np.concatenate(goal_idx),
        species=np.concatenate(species),
    )
    _check_distinct(agents.position)
    params = s.sim_params(rng_seed=int(seed))
    return agents, params, GoalSets.from_lists(goal_sets)


def _check_distinct(pos: np.ndarray, tol: float = 1e-6):
    if len(pos) < 2:
        return
    grid = spatial.build(pos, 1.0)
    close = spatial.neighbor_lists(grid, pos, tol)
    if close.pair_count:
        i = int(np.flatnonzero(np.diff(close.offset))[0])
        raise OverlapError(f"agents {i} and {int(close[i][0])} start closer than {tol} m")


def build_state(s: Scenario, seed: int = 0, **param_overrides):
    """Instantiate a scenario straight into a :class:`~pbcrowd.solver.SimState`."""
    from .solver import SimState

    agents, params, goals = instantiate(s, seed)
    if param_overrides:
        params = validate_params(params.replace(**param_overrides))
    return SimState(agents=agents, goals=goals, params=params, obstacles=list(s.obstacles))


def mirrored(s: Scenario) -> Scenario:
    """Reflect every coordinate across the y axis (x -> -x), keeping agent order."""

    def fx(v):
        return (-v[0], v[1])

    def explicit(f, origin):
        pts = formation_points(f) + np.array(origin)
        return Explicit(tuple((-float(x), float(y)) for x, y in pts))

    def fgroup(g):
        return dataclasses.replace(g, formation=explicit(g.formation, g.origin), origin=(0.0, 0.0))

    def fgoal(g):
        if g.kind == "points":
            return dataclasses.replace(g, points=tuple(fx(p) for p in g.points))
        if g.kind == "offset":
            return dataclasses.replace(g, offset=fx(g.offset))
        return dataclasses.replace(g, formation=explicit(g.formation, g.origin), origin=(0.0, 0.0))

    def fobs(o):
        if isinstance(o, Segment):
            return Segment(fx(o.a), fx(o.b))
        return Circle(fx(o.center), o.radius)

    return dataclasses.replace(
        s,
        name=s.name + "_mirrored",
        groups=tuple(fgroup(g) for g in s.groups),
        goals=tuple(fgoal(g) for g in s.goals),
        obstacles=tuple(fobs(o) for o in s.obstacles),
    )
