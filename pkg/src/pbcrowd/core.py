"""Shared domain types: solver parameters, agent arrays and static obstacles."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np


class AvoidanceMode(enum.IntEnum):
    """Which anticipatory kernel runs over the long-range neighbor list."""

    NONE = 0
    LONG_RANGE = 1
    AVOIDANCE = 2

    @classmethod
    def parse(cls, value: Union[str, int, "AvoidanceMode"]) -> "AvoidanceMode":
        if isinstance(value, cls):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "none": cls.NONE,
            "longrange": cls.LONG_RANGE,
            "lr": cls.LONG_RANGE,
            "avoidance": cls.AVOIDANCE,
            "a": cls.AVOIDANCE,
        }
        if key not in aliases:
            raise ValueError(f"unknown avoidance mode {value!r}")
        return aliases[key]

    @property
    def label(self) -> str:
        return {0: "none", 1: "longrange", 2: "avoidance"}[int(self)]


class InvalidParameter(ValueError):
    """A SimParams field violates its invariant. ``field`` names it."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class NonPositiveDt(InvalidParameter):
    pass


class AlphaOutOfRange(InvalidParameter):
    pass


class ZeroIterations(InvalidParameter):
    pass


class NegativeFriction(InvalidParameter):
    pass


@dataclass(frozen=True)
class SimParams:
    dt: float = 1.0 / 48.0
    alpha: float = 0.0385
    stability_iters: int = 1
    solve_iters: int = 6
    omega: float = 1.2
    tau0: float = 20.0
    k_longrange: float = 0.24
    xsph_c: float = 217.0
    xsph_h: float = 7.0
    mu_static: float = 0.2
    mu_kinetic: float = 0.2
    v_max: float = 3.0
    a_max: float = 20.0
    radius_expansion: float = 0.05
    longrange_radius: float = 6.0
    avoidance_mode: AvoidanceMode = AvoidanceMode.LONG_RANGE
    rng_seed: int = 0
    # cohesion only between agents of the same species
    xsph_same_species: bool = True
    # per-agent preferred-velocity jitter, as a fraction of preferred speed; 0 disables
    jitter: float = 0.01

    def replace(self, **changes) -> "SimParams":
        if "avoidance_mode" in changes:
            changes["avoidance_mode"] = AvoidanceMode.parse(changes["avoidance_mode"])
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["avoidance_mode"] = self.avoidance_mode.label
        return out


PARAM_FIELDS = tuple(f.name for f in dataclasses.fields(SimParams))


def validate_params(p: SimParams) -> SimParams:
    """Return ``p`` unchanged, or raise for the first field that breaks an invariant."""
    for name in PARAM_FIELDS:
        value = getattr(p, name)
        if isinstance(value, float) and not math.isfinite(value):
            raise InvalidParameter(name, f"must be finite, got {value}")
    if not p.dt > 0:
        raise NonPositiveDt("dt", f"must be > 0, got {p.dt}")
    if not 0.0 <= p.alpha <= 1.0:
        raise AlphaOutOfRange("alpha", f"must lie in [0, 1], got {p.alpha}")
    if p.stability_iters < 0:
        raise ZeroIterations("stability_iters", f"must be >= 0, got {p.stability_iters}")
    if p.solve_iters < 1:
        raise ZeroIterations("solve_iters", f"must be >= 1, got {p.solve_iters}")
    if not p.omega > 0:
        raise InvalidParameter("omega", f"must be > 0, got {p.omega}")
    if not p.tau0 > 0:
        raise InvalidParameter("tau0", f"must be > 0, got {p.tau0}")
    if not 0.0 < p.k_longrange <= 1.0:
        raise InvalidParameter("k_longrange", f"must lie in (0, 1], got {p.k_longrange}")
    if p.xsph_c < 0:
        raise InvalidParameter("xsph_c", f"must be >= 0, got {p.xsph_c}")
    if not p.xsph_h > 0:
        raise InvalidParameter("xsph_h", f"must be > 0, got {p.xsph_h}")
    if p.mu_static < 0:
        raise NegativeFriction("mu_static", f"must be >= 0, got {p.mu_static}")
    if p.mu_kinetic < 0:
        raise NegativeFriction("mu_kinetic", f"must be >= 0, got {p.mu_kinetic}")
    if not p.v_max > 0:
        raise InvalidParameter("v_max", f"must be > 0, got {p.v_max}")
    if not p.a_max > 0:
        raise InvalidParameter("a_max", f"must be > 0, got {p.a_max}")
    if p.radius_expansion < 0:
        raise InvalidParameter("radius_expansion", f"must be >= 0, got {p.radius_expansion}")
    if not p.longrange_radius > 0:
        raise InvalidParameter("longrange_radius", f"must be > 0, got {p.longrange_radius}")
    if not isinstance(p.avoidance_mode, AvoidanceMode):
        raise InvalidParameter("avoidance_mode", f"not an AvoidanceMode: {p.avoidance_mode!r}")
    if p.jitter < 0:
        raise InvalidParameter("jitter", f"must be >= 0, got {p.jitter}")
    return p


def effective_radius(r, expansion):
    """Collision-check radius ``r * (1 + expansion)``. Works on scalars and arrays."""
    return r * (1.0 + expansion)


@dataclass(frozen=True)
class Segment:
    a: tuple[float, float]
    b: tuple[float, float]

    def __post_init__(self):
        a = tuple(float(c) for c in self.a)
        b = tuple(float(c) for c in self.b)
        if not all(math.isfinite(c) for c in a + b):
            raise ValueError("segment endpoints must be finite")
        if a == b:
            raise ValueError("segment endpoints must be distinct")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if not all(math.isfinite(v) for v in c):
            raise ValueError("circle center must be finite")
        if not self.radius > 0:
            raise ValueError(f"circle radius must be > 0, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))


Obstacle = Union[Segment, Circle]


def pack_obstacles(obstacles) -> tuple[np.ndarray, np.ndarray]:
    """Split obstacles into ``(segments[S, 4], circles[C, 3])`` float arrays for the kernels."""
    segs = [o.a + o.b for o in obstacles if isinstance(o, Segment)]
    circs = [o.center + (o.radius,) for o in obstacles if isinstance(o, Circle)]
    segs_arr = np.array(segs, dtype=np.float64).reshape(-1, 4)
    circs_arr = np.array(circs, dtype=np.float64).reshape(-1, 3)
    return segs_arr, circs_arr


@dataclass
class AgentState:
    """Structure-of-arrays agent storage.

    ``position`` is the committed position x^n, ``predicted`` the working
    position x* and ``prev_position`` the committed position one step back.
    """

    position: np.ndarray
    velocity: np.ndarray
    radius: np.ndarray
    inv_mass: np.ndarray
    pref_speed: np.ndarray
    goal: np.ndarray
    species: np.ndarray
    predicted: np.ndarray = field(default=None)
    prev_position: np.ndarray = field(default=None)

    def __post_init__(self):
        self.position = np.ascontiguousarray(self.position, dtype=np.float64).reshape(-1, 2)
        n = len(self.position)
        self.velocity = np.ascontiguousarray(self.velocity, dtype=np.float64).reshape(n, 2)
        self.radius = _column(self.radius, n, np.float64)
        self.inv_mass = _column(self.inv_mass, n, np.float64)
        self.pref_speed = _column(self.pref_speed, n, np.float64)
        self.goal = _column(self.goal, n, np.int64)
        self.species = _column(self.species, n, np.int64)
        if self.predicted is None:
            self.predicted = self.position.copy()
        if self.prev_position is None:
            self.prev_position = self.position.copy()
        self.predicted = np.ascontiguousarray(self.predicted, dtype=np.float64).reshape(n, 2)
        self.prev_position = np.ascontiguousarray(self.prev_position, dtype=np.float64).reshape(n, 2)
        self.check()

    def __len__(self) -> int:
        return len(self.position)

    @classmethod
    def create(cls, positions, radius=0.5, mass=1.0, pref_speed=1.4, velocity=None,
               goal=0, species=0) -> "AgentState":
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
        n = len(positions)
        mass = np.broadcast_to(np.asarray(mass, dtype=np.float64), (n,))
        with np.errstate(divide="ignore"):
            inv_mass = np.where(np.isinf(mass), 0.0, 1.0 / mass)
        return cls(
            position=positions,
            velocity=np.zeros((n, 2)) if velocity is None else velocity,
            radius=radius,
            inv_mass=inv_mass,
            pref_speed=pref_speed,
            goal=goal,
            species=species,
        )

    def check(self) -> None:
        if np.any(self.radius <= 0):
            raise ValueError("agent radii must be > 0")
        if np.any(self.inv_mass < 0):
            raise ValueError("inverse masses must be >= 0")
        if np.any(self.pref_speed < 0):
            raise ValueError("preferred speeds must be >= 0")
        for name in ("position", "velocity", "predicted", "prev_position", "radius",
                     "inv_mass", "pref_speed"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise FloatingPointError(f"non-finite value in agent {name}")

    def copy(self) -> "AgentState":
        return dataclasses.replace(self, **{
            f.name: getattr(self, f.name).copy() for f in dataclasses.fields(self)
        })


def _column(value, n, dtype):
    arr = np.asarray(value, dtype=dtype)
    return np.ascontiguousarray(np.broadcast_to(arr, (n,)), dtype=dtype).copy()
