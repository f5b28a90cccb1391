"""Domains, potentials, distance to the boundary and quadrature grids.

Every geometry here is one-dimensional, radial, a product of intervals or a
disjoint union of balls, so all integrals reduce to one-dimensional ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.special import gammaln

DEFAULT_NODES = 4096


class DomainError(ValueError):
    """Invalid geometry, potential, or a point outside its domain."""


def unit_ball_volume(m: int) -> float:
    """Volume of the unit ball in R^m, pi^(m/2) / Gamma(m/2 + 1)."""
    if m < 1:
        raise DomainError(f"dimension must be >= 1, got {m}")
    return math.exp(0.5 * m * math.log(math.pi) - gammaln(0.5 * m + 1.0))


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise DomainError(f"interval needs a < b, got ({self.a}, {self.b})")

    @property
    def m(self) -> int:
        return 1

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class Ball:
    m: int
    R: float
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"dimension must be >= 1, got {self.m}")
        if not self.R > 0:
            raise DomainError(f"radius must be positive, got {self.R}")
        if self.center is not None and len(self.center) != self.m:
            raise DomainError("center has the wrong dimension")

    @property
    def centre(self) -> np.ndarray:
        if self.center is None:
            return np.zeros(self.m)
        return np.asarray(self.center, dtype=float)


@dataclass(frozen=True)
class Annulus:
    m: int
    r_in: float
    r_out: float

    def __post_init__(self):
        if self.m < 2:
            raise DomainError("annulus needs m >= 2")
        if not 0 < self.r_in < self.r_out:
            raise DomainError(f"annulus needs 0 < r_in < r_out, got {self.r_in}, {self.r_out}")


@dataclass(frozen=True)
class BallUnion:
    m: int
    balls: tuple[Ball, ...]

    def __post_init__(self):
        if not self.balls:
            raise DomainError("ball union needs at least one ball")
        for b in self.balls:
            if b.m != self.m:
                raise DomainError("all balls must share the union's dimension")
        centres = np.array([b.centre for b in self.balls])
        radii = np.array([b.R for b in self.balls])
        for i in range(len(self.balls) - 1):
            gap = np.linalg.norm(centres[i + 1:] - centres[i], axis=1)
            bad = np.flatnonzero(~(gap > radii[i + 1:] + radii[i]))
            if bad.size:
                raise DomainError(f"balls {i} and {i + 1 + bad[0]} overlap or touch")

    @classmethod
    def from_pairs(cls, m: int, pairs: Sequence[tuple[Sequence[float], float]]) -> "BallUnion":
        return cls(m, tuple(Ball(m, float(r), tuple(float(c) for c in ctr)) for ctr, r in pairs))


@dataclass(frozen=True)
class Box:
    """The box (0, L_1) x ... x (0, L_m)."""

    m: int
    sides: tuple[float, ...]

    def __post_init__(self):
        if len(self.sides) != self.m:
            raise DomainError("box needs one side length per dimension")
        if any(not s > 0 for s in self.sides):
            raise DomainError("box sides must be positive")


DomainSpec = Interval | Ball | Annulus | BallUnion | Box


def measure(d: DomainSpec) -> float:
    """Lebesgue measure of ``d``."""
    if isinstance(d, Interval):
        return d.length
    if isinstance(d, Ball):
        return unit_ball_volume(d.m) * d.R**d.m
    if isinstance(d, Annulus):
        return unit_ball_volume(d.m) * (d.r_out**d.m - d.r_in**d.m)
    if isinstance(d, BallUnion):
        return sum(measure(b) for b in d.balls)
    if isinstance(d, Box):
        return float(np.prod(d.sides))
    raise DomainError(f"unknown domain {d!r}")


def is_connected(d: DomainSpec) -> bool:
    return not (isinstance(d, BallUnion) and len(d.balls) > 1)


def distance_to_boundary(d: DomainSpec, x) -> float:
    """Distance from ``x`` to the complement of ``d``; raises if ``x`` is outside."""
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(d, Interval):
        dist = min(p[0] - d.a, d.b - p[0])
    elif isinstance(d, Ball):
        dist = d.R - float(np.linalg.norm(p - d.centre))
    elif isinstance(d, Annulus):
        r = float(np.linalg.norm(p))
        dist = min(r - d.r_in, d.r_out - r)
    elif isinstance(d, BallUnion):
        dist = max(b.R - float(np.linalg.norm(p - b.centre)) for b in d.balls)
    elif isinstance(d, Box):
        sides = np.asarray(d.sides)
        dist = float(np.min(np.minimum(p, sides - p)))
    else:
        raise DomainError(f"unknown domain {d!r}")
    if not dist > 0:
        raise DomainError(f"point {x} is not inside {d}")
    return float(dist)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Zero:
    def sup(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Constant:
    c: float

    def __post_init__(self):
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise DomainError(f"constant potential must be finite and >= 0, got {self.c}")

    def sup(self) -> float:
        return float(self.c)


@dataclass(frozen=True)
class PiecewiseConstant1D:
    """V = values[j] on (breakpoints[j-1], breakpoints[j]), with +-inf at the ends."""

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) + 1:
            raise DomainError("need exactly one more value than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        if any(not (v >= 0 and math.isfinite(v)) for v in self.values):
            raise DomainError("potential values must be finite and >= 0")

    def sup(self) -> float:
        return float(max(self.values))


@dataclass(frozen=True)
class SymmetricWell:
    """nu^2 outside (-eps, eps) and 0 inside, on (-1, 1)."""

    nu: float
    eps: float

    def __post_init__(self):
        if not self.nu > 1:
            raise DomainError(f"well needs nu > 1, got {self.nu}")
        if not 0 < self.eps < 1:
            raise DomainError(f"well needs 0 < eps < 1, got {self.eps}")

    def as_piecewise(self) -> PiecewiseConstant1D:
        v = self.nu**2
        return PiecewiseConstant1D((-self.eps, self.eps), (v, 0.0, v))

    def sup(self) -> float:
        return float(self.nu**2)


PotentialSpec = Zero | Constant | PiecewiseConstant1D | SymmetricWell


def potential_values(V: PotentialSpec, x: np.ndarray) -> np.ndarray:
    """Pointwise values of V at ``x`` (right-continuous at breakpoints)."""
    x = np.asarray(x, dtype=float)
    if isinstance(V, Zero):
        return np.zeros_like(x)
    if isinstance(V, Constant):
        return np.full_like(x, V.c)
    if isinstance(V, SymmetricWell):
        V = V.as_piecewise()
    if isinstance(V, PiecewiseConstant1D):
        idx = np.searchsorted(np.asarray(V.breakpoints), x, side="right")
        return np.asarray(V.values)[idx]
    raise DomainError(f"unknown potential {V!r}")


def cell_averaged_potential(V: PotentialSpec, nodes: np.ndarray) -> np.ndarray:
    """Average of V over each node's dual cell [x_i - h/2, x_i + h/2] clipped to the grid.

    Exact for piecewise constant V, which keeps the FD scheme second order
    across jumps of the potential.
    """
    if isinstance(V, (Zero, Constant)):
        return potential_values(V, nodes)
    if isinstance(V, SymmetricWell):
        V = V.as_piecewise()
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    lo = np.concatenate(([nodes[0]], mids))
    hi = np.concatenate((mids, [nodes[-1]]))
    bps = np.asarray(V.breakpoints)
    vals = np.asarray(V.values)
    edges = np.concatenate(([-np.inf], bps, [np.inf]))
    total = np.zeros_like(nodes)
    for j, v in enumerate(vals):
        overlap = np.clip(np.minimum(hi, edges[j + 1]) - np.maximum(lo, edges[j]), 0.0, None)
        total += v * overlap
    width = hi - lo
    return total / width


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Nodes and quadrature weights.

    ``kind`` is ``"line"`` or ``"radial"``. Radial weights already carry the
    m * omega_m * r^(m-1) surface factor, so ``weights @ f`` integrates a
    radial function over the shell or ball.
    """

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    m: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    @property
    def h(self) -> float:
        return float(self.nodes[1] - self.nodes[0])


def line_weights(nodes: np.ndarray) -> np.ndarray:
    """Dual-cell lengths; equal to the trapezoid weights on a uniform grid."""
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    lo = np.concatenate(([nodes[0]], mids))
    hi = np.concatenate((mids, [nodes[-1]]))
    return hi - lo


def radial_weights(nodes: np.ndarray, m: int) -> np.ndarray:
    """Exact volumes of the dual shells around each radial node."""
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    lo = np.concatenate(([nodes[0]], mids))
    hi = np.concatenate((mids, [nodes[-1]]))
    return unit_ball_volume(m) * (hi**m - lo**m)


def line_grid(a: float, b: float, n_nodes: int = DEFAULT_NODES) -> Grid:
    nodes = np.linspace(a, b, n_nodes)
    return Grid("line", nodes, line_weights(nodes), 1)


def radial_grid(m: int, r0: float, r1: float, n_nodes: int = DEFAULT_NODES) -> Grid:
    nodes = np.linspace(r0, r1, n_nodes)
    return Grid("radial", nodes, radial_weights(nodes, m), m)


def grid_for(d: DomainSpec, n_nodes: int = DEFAULT_NODES) -> Grid:
    """Default solver grid: the interval itself, or the radial segment."""
    if isinstance(d, Interval):
        return line_grid(d.a, d.b, n_nodes)
    if isinstance(d, Ball):
        return radial_grid(d.m, 0.0, d.R, n_nodes)
    if isinstance(d, Annulus):
        return radial_grid(d.m, d.r_in, d.r_out, n_nodes)
    raise DomainError(f"no single grid for {type(d).__name__}")


def boundary_decay_integral(d: DomainSpec, c: float, n_nodes: int = DEFAULT_NODES) -> float:
    """Integral over ``d`` of exp(-sqrt(c) * dist(x, boundary) / 2).

    Uses the distribution of the distance function: for an interval, a ball
    or an annulus the level set {dist = s} has an explicit measure, so the
    integral is one-dimensional and evaluated by composite Simpson.
    """
    if c < 0:
        raise DomainError("decay rate must be non-negative")
    if c == 0:
        return measure(d)
    k = 0.5 * math.sqrt(c)
    n = n_nodes if n_nodes % 2 == 1 else n_nodes + 1

    if isinstance(d, Interval):
        half = 0.5 * d.length
        return 2.0 * _decay_segment(1, 0.0, half, k, n, surface=False)
    if isinstance(d, Ball):
        return _decay_segment(d.m, d.R, 0.0, k, n)
    if isinstance(d, Annulus):
        mid = 0.5 * (d.r_in + d.r_out)
        return _decay_segment(d.m, d.r_in, mid, k, n) + _decay_segment(d.m, d.r_out, mid, k, n)
    if isinstance(d, BallUnion):
        return sum(boundary_decay_integral(b, c, n_nodes) for b in d.balls)
    raise DomainError(f"boundary decay integral not available for {type(d).__name__}")


def _decay_segment(m, rb, ro, k, n, surface=True) -> float:
    """Integral of exp(-k |r - rb|) over the segment between the boundary ``rb`` and ``ro``.

    The segment is split at 60/k from the boundary so the layer is resolved
    with n nodes whatever the size of k.
    """
    total = abs(ro - rb)
    step = math.copysign(1.0, ro - rb)
    cut = min(total, 60.0 / k)
    surf = m * unit_ball_volume(m) if surface else 1.0

    def piece(s0, s1):
        s = np.linspace(s0, s1, n)
        r = rb + step * s
        f = np.exp(-k * s) * (surf * np.abs(r) ** (m - 1) if surface else 1.0)
        return float(simpson(f, x=s))

    out = piece(0.0, cut)
    if cut < total:
        out += piece(cut, total)
    return out


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------

def _num(x) -> float:
    """Accept numbers and exact strings such as "2/3"."""
    if isinstance(x, bool):
        raise DomainError("booleans are not numbers")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(Fraction(x.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"not a number: {x!r}") from exc
    raise DomainError(f"not a number: {x!r}")


def _dim(x) -> int:
    v = _num(x)
    if v != int(v) or v < 1:
        raise DomainError(f"dimension must be a positive integer, got {x!r}")
    return int(v)


def domain_from_dict(obj: dict) -> DomainSpec:
    if not isinstance(obj, dict) or "type" not in obj:
        raise DomainError("domain must be an object with a 'type' field")
    kind = obj["type"]
    try:
        if kind == "interval":
            return Interval(_num(obj["a"]), _num(obj["b"]))
        if kind == "ball":
            centre = obj.get("center")
            m = _dim(obj["dim"])
            return Ball(m, _num(obj["radius"]), None if centre is None else tuple(_num(c) for c in centre))
        if kind == "annulus":
            return Annulus(_dim(obj["dim"]), _num(obj["r_in"]), _num(obj["r_out"]))
        if kind == "ball_union":
            m = _dim(obj["dim"])
            return BallUnion(m, tuple(Ball(m, _num(b["radius"]), tuple(_num(c) for c in b["center"]))
                                      for b in obj["balls"]))
        if kind == "box":
            return Box(_dim(obj["dim"]), tuple(_num(s) for s in obj["sides"]))
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed {kind} spec: {exc}") from exc
    raise DomainError(f"unknown domain type {kind!r}")


def domain_to_dict(d: DomainSpec) -> dict:
    if isinstance(d, Interval):
        return {"type": "interval", "a": d.a, "b": d.b}
    if isinstance(d, Ball):
        out = {"type": "ball", "dim": d.m, "radius": d.R}
        if d.center is not None:
            out["center"] = list(d.center)
        return out
    if isinstance(d, Annulus):
        return {"type": "annulus", "dim": d.m, "r_in": d.r_in, "r_out": d.r_out}
    if isinstance(d, BallUnion):
        return {"type": "ball_union", "dim": d.m,
                "balls": [{"center": list(map(float, b.centre)), "radius": b.R} for b in d.balls]}
    if isinstance(d, Box):
        return {"type": "box", "dim": d.m, "sides": list(d.sides)}
    raise DomainError(f"unknown domain {d!r}")


def potential_from_dict(obj: dict | None) -> PotentialSpec:
    if obj is None:
        return Zero()
    if not isinstance(obj, dict) or "type" not in obj:
        raise DomainError("potential must be an object with a 'type' field")
    kind = obj["type"]
    try:
        if kind == "zero":
            return Zero()
        if kind == "constant":
            return Constant(_num(obj["c"]))
        if kind == "piecewise_constant":
            return PiecewiseConstant1D(tuple(_num(b) for b in obj["breakpoints"]),
                                       tuple(_num(v) for v in obj["values"]))
        if kind == "symmetric_well":
            return SymmetricWell(_num(obj["nu"]), _num(obj["eps"]))
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed {kind} potential: {exc}") from exc
    raise DomainError(f"unknown potential type {kind!r}")


def potential_to_dict(V: PotentialSpec) -> dict:
    if isinstance(V, Zero):
        return {"type": "zero"}
    if isinstance(V, Constant):
        return {"type": "constant", "c": V.c}
    if isinstance(V, PiecewiseConstant1D):
        return {"type": "piecewise_constant", "breakpoints": list(V.breakpoints), "values": list(V.values)}
    if isinstance(V, SymmetricWell):
        return {"type": "symmetric_well", "nu": V.nu, "eps": V.eps}
    raise DomainError(f"unknown potential {V!r}")
