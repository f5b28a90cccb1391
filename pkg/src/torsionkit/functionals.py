"""Efficiency functionals and finite-n localisation estimates."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import closed_form as cf
from .domains import (
    DEFAULT_NODES,
    Annulus,
    Ball,
    BallUnion,
    Box,
    Constant,
    DomainError,
    DomainSpec,
    Interval,
    PiecewiseConstant1D,
    PotentialSpec,
    SymmetricWell,
    Zero,
    measure,
    unit_ball_volume,
)
from .solver import (
    Profile,
    first_eigenpair_1d,
    first_eigenpair_radial,
    solve_torsion_1d,
    solve_torsion_radial,
)


def mean_to_max(f: Profile) -> float:
    """||f||_1 / (|Omega| ||f||_inf) for a nodal profile."""
    sup = f.sup
    if not sup > 0:
        raise ValueError("mean-to-max of the zero profile is undefined")
    return f.l1 / (f.volume * sup)


# ---------------------------------------------------------------------------
# Torsion and eigen data with closed forms where they exist
# ---------------------------------------------------------------------------

def _const(V: PotentialSpec) -> float | None:
    if isinstance(V, Zero):
        return 0.0
    if isinstance(V, Constant):
        return V.c
    return None


def _as_interval(d: DomainSpec) -> Interval | None:
    if isinstance(d, Interval):
        return d
    if isinstance(d, Ball) and d.m == 1:
        x0 = d.centre[0]
        return Interval(x0 - d.R, x0 + d.R)
    if isinstance(d, Box) and d.m == 1:
        return Interval(0.0, d.sides[0])
    return None


def _is_well_domain(d: Interval) -> bool:
    return d.a == -1.0 and d.b == 1.0


def torsion_norms(d: DomainSpec, V: PotentialSpec = Zero(), n_nodes: int = DEFAULT_NODES) -> tuple[float, float]:
    """(||v||_1, ||v||_inf) of the torsion function of -Delta + V on d."""
    c = _const(V)
    iv = _as_interval(d)
    if iv is not None:
        if c is not None:
            return cf.interval_torsion_norms(iv, c)
        if isinstance(V, SymmetricWell) and _is_well_domain(iv):
            inner, outer = cf.example1_mass_split(V.nu, V.eps)
            return 2.0 * (inner + outer), cf.example1_sup(V.nu, V.eps)
        if isinstance(V, (SymmetricWell, PiecewiseConstant1D)):
            p = solve_torsion_1d(iv, V, n_nodes)
            return p.l1, p.sup
    elif c is not None:
        if isinstance(d, Ball):
            if c == 0:
                return cf.ball_torsion_norms(d.m, d.R)
            p = solve_torsion_radial(d.m, Ball(d.m, d.R), V, n_nodes)
            return p.l1, p.sup
        if isinstance(d, Annulus):
            p = solve_torsion_radial(d.m, d, V, n_nodes)
            return p.l1, p.sup
        if isinstance(d, BallUnion):
            parts = [torsion_norms(b, V, n_nodes) for b in d.balls]
            return sum(p[0] for p in parts), max(p[1] for p in parts)
        if isinstance(d, Box) and c == 0:
            return cf.box_torsion_norms(d)
    raise DomainError(f"no torsion route for {type(d).__name__} with {type(V).__name__}")


def efficiency_torsion(d: DomainSpec, V: PotentialSpec = Zero(), n_nodes: int = DEFAULT_NODES) -> float:
    """Phi(Omega, V) = ||v||_1 / (|Omega| ||v||_inf)."""
    l1, sup = torsion_norms(d, V, n_nodes)
    return l1 / (measure(d) * sup)


@dataclass(frozen=True)
class EigenData:
    lambda1: float
    l1: float
    sup: float
    volume: float
    l1_sq_over_volume: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "l1_sq_over_volume", self.l1**2 / self.volume)

    @property
    def efficiency(self) -> float:
        return self.l1 / (self.volume * self.sup)


def eigen_data(d: DomainSpec, V: PotentialSpec = Zero(), n_nodes: int = DEFAULT_NODES) -> EigenData:
    """lambda1 and the L1/sup norms of the L2-normalised positive eigenfunction."""
    iv = _as_interval(d)
    c = _const(V)
    if iv is not None:
        e = first_eigenpair_1d(iv, V, n_nodes)
    elif isinstance(d, Ball) and c is not None:
        e = first_eigenpair_radial(d.m, Ball(d.m, d.R), n_nodes=n_nodes, potential=V)
    elif isinstance(d, Annulus) and c is not None:
        e = first_eigenpair_radial(d.m, d, n_nodes=n_nodes, potential=V)
    elif isinstance(d, Box) and c is not None:
        lam, _ = cf.box_first_eigen(d.m, d.sides)
        vol = measure(d)
        # product of sqrt(2/L) sin(pi x / L): sup (2^m/vol)^(1/2), L1 (2^m/vol)^(1/2) (2/pi)^m vol
        amp = math.sqrt(2.0**d.m / vol)
        return EigenData(lam + c, amp * (2.0 / math.pi) ** d.m * vol, amp, vol)
    elif isinstance(d, BallUnion):
        raise DomainError("first eigenfunction of a disconnected union is not unique in general")
    else:
        raise DomainError(f"no eigen route for {type(d).__name__} with {type(V).__name__}")
    f = e.eigenfunction
    return EigenData(e.lambda1, f.l1, f.sup, f.volume)


def first_eigenvalue(d: DomainSpec, V: PotentialSpec = Zero(), n_nodes: int = DEFAULT_NODES) -> float:
    """lambda1(Omega, V); on a ball union the minimum over the components."""
    if isinstance(d, BallUnion):
        biggest = max(d.balls, key=lambda b: b.R)
        return first_eigenvalue(biggest, V, n_nodes)
    if isinstance(d, Box):
        c = _const(V)
        if c is None:
            raise DomainError("boxes take only zero or constant potentials")
        return cf.box_first_eigen(d.m, d.sides)[0] + c
    return eigen_data(d, V, n_nodes).lambda1


def efficiency_eigen(d: DomainSpec, V: PotentialSpec = Zero(), n_nodes: int = DEFAULT_NODES) -> float:
    """E(Omega, V), the mean-to-max ratio of the first eigenfunction."""
    return eigen_data(d, V, n_nodes).efficiency


# ---------------------------------------------------------------------------
# Localisation
# ---------------------------------------------------------------------------

NONE, KAPPA, FULL = "none", "kappa", "full"


@dataclass(frozen=True)
class Classification:
    kind: str
    kappa: float

    def __str__(self):
        return self.kind if self.kind != KAPPA else f"kappa({self.kappa:.6g})"


@dataclass(frozen=True)
class LocalisationReport:
    family_id: str
    p: float
    entries: tuple[tuple[int, float, float], ...]
    kappa_hat: float
    classification: Classification
    exponent: float | None = None
    low_confidence: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "mass_fraction", "volume_fraction"])
        for n, mass, vol in self.entries:
            w.writerow([n, format(mass, ".17g"), format(vol, ".17g")])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "family_id": self.family_id,
            "p": self.p,
            "kappa_hat": self.kappa_hat,
            "classification": self.classification.kind,
            "exponent": self.exponent,
            "low_confidence": self.low_confidence,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def classify_localisation(report_or_kappa, tol: float = 0.01) -> Classification:
    k = report_or_kappa.kappa_hat if isinstance(report_or_kappa, LocalisationReport) else float(report_or_kappa)
    if k < tol:
        return Classification(NONE, 0.0)
    if k > 1.0 - tol:
        return Classification(FULL, 1.0)
    return Classification(KAPPA, k)


def fit_power_law(ns, masses) -> tuple[float, float | None, bool]:
    """Fit mass(n) = kappa + a n^-q through three points.

    Returns (kappa, q, low_confidence). When the masses do not move the
    limit is the common value; when no q in (0, 3] fits, the last mass is
    returned and flagged.
    """
    n1, n2, n3 = (float(n) for n in ns)
    m1, m2, m3 = masses
    d12, d23 = m1 - m2, m2 - m3
    if abs(d12) <= 1e-14 and abs(d23) <= 1e-14:
        return float(m3), None, False
    if d12 == 0 or d23 == 0 or (d12 > 0) != (d23 > 0):
        return float(m3), None, True
    target = d12 / d23

    def resid(q):
        return (n1**-q - n2**-q) / (n2**-q - n3**-q) - target

    lo, hi = 1e-8, 3.0
    try:
        if resid(lo) * resid(hi) > 0:
            return float(m3), None, True
        q = brentq(resid, lo, hi, xtol=1e-14)
    except (ValueError, ZeroDivisionError, OverflowError):
        return float(m3), None, True
    a = d23 / (n2**-q - n3**-q)
    return float(m3 - a * n3**-q), float(q), False


def report_from_fractions(entries, p: float = 1.0, family_id: str = "", tol: float = 0.01) -> LocalisationReport:
    """Build a report from (n, mass_fraction, volume_fraction) rows."""
    entries = tuple(sorted((int(n), float(mf), float(vf)) for n, mf, vf in entries))
    if len(entries) < 3:
        raise ValueError("need at least three n values")
    ns = [e[0] for e in entries]
    if len(set(ns)) != len(ns):
        raise ValueError("n values must be distinct")
    vols = [e[2] for e in entries]
    if any(v2 >= v1 for v1, v2 in zip(vols, vols[1:])):
        raise ValueError("volume fractions must decrease along n; not a vanishing-volume sequence")
    last = entries[-3:]
    kappa, q, low = fit_power_law([e[0] for e in last], [e[1] for e in last])
    kappa = min(1.0, max(0.0, kappa))
    return LocalisationReport(family_id, p, entries, kappa, classify_localisation(kappa, tol), q, low)


def profile_fractions(f: Profile, mask: np.ndarray, p: float = 1.0) -> tuple[float, float]:
    """(L^p mass fraction, volume fraction) of the node set ``mask``."""
    w = f.grid.weights
    mass = w * np.abs(f.values) ** p
    total = mass.sum()
    if not total > 0:
        raise ValueError("zero profile")
    return float(mass[mask].sum() / total), float(w[mask].sum() / w.sum())


def kappa_estimate(family: Callable[[int], Profile], sets: Callable[[int, Profile], np.ndarray],
                   p: float, n_values: Sequence[int], family_id: str = "", tol: float = 0.01) -> LocalisationReport:
    """Mass and volume fractions of sets(n) under family(n), then a three-point extrapolation.

    ``sets(n, profile)`` returns a boolean node mask for A_n.
    """
    rows = []
    for n in n_values:
        f = family(n)
        rows.append((n, *profile_fractions(f, sets(n, f), p)))
    return report_from_fractions(rows, p, family_id, tol)


# Example families -----------------------------------------------------------

def example1_eps(n: int, alpha_exp, c: float) -> float:
    return c * float(n) ** (-float(alpha_exp))


def example1_fractions(alpha_exp, c: float, n_values) -> list[tuple[int, float, float]]:
    """Exact L1 share of (-eps_n, eps_n) for the well nu = n, eps_n = c n^-alpha."""
    rows = []
    for n in n_values:
        eps = example1_eps(n, alpha_exp, c)
        inner, outer = cf.example1_mass_split(float(n), eps)
        rows.append((n, inner / (inner + outer), eps))
    return rows


def example1_report(alpha_exp, c: float, n_values, tol: float = 0.01) -> LocalisationReport:
    return report_from_fractions(example1_fractions(alpha_exp, c, n_values), 1.0,
                                 f"example1(alpha={alpha_exp},c={c})", tol)


def example1_profile_family(alpha_exp, c: float, n_nodes: int):
    """(family, sets) pair for numeric solves of the well family on (-1, 1)."""
    def family(n):
        return solve_torsion_1d(Interval(-1.0, 1.0), SymmetricWell(float(n), example1_eps(n, alpha_exp, c)), n_nodes)

    def sets(n, f):
        return np.abs(f.grid.nodes) < example1_eps(n, alpha_exp, c)

    return family, sets


def example2_fractions(m: int, alpha_exp, beta_exp, c: float, n_values) -> list[tuple[int, float, float]]:
    """Exact L1 share and volume share of the distinguished ball."""
    rows = []
    for n in n_values:
        total, big = cf.example2_norms(m, n, alpha_exp, beta_exp, c)
        small_r, big_r = cf.example2_radii(n, alpha_exp, beta_exp, c)
        vb = big_r**m
        rows.append((n, big / total, vb / (vb + n * small_r**m)))
    return rows


def example2_report(m: int, alpha_exp, beta_exp, c: float, n_values, tol: float = 0.01) -> LocalisationReport:
    return report_from_fractions(example2_fractions(m, alpha_exp, beta_exp, c, n_values), 1.0,
                                 f"example2(m={m},alpha={alpha_exp},beta={beta_exp},c={c})", tol)


def ball_volume(m: int, R: float) -> float:
    return unit_ball_volume(m) * R**m
