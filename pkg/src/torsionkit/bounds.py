"""Inequality harness: both sides of each bound on concrete instances, with slack."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from . import closed_form as cf
from . import obstacle as ob
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
    PotentialSpec,
    SymmetricWell,
    Zero,
    boundary_decay_integral,
    domain_to_dict,
    is_connected,
    measure,
    potential_to_dict,
    unit_ball_volume,
)
from .functionals import (
    eigen_data,
    efficiency_torsion,
    first_eigenvalue,
    torsion_norms,
)
from .solver import Profile, solve_torsion_1d, solve_torsion_radial

TOL = 1e-6
LE, GE, IN = "<=", ">=", "in"


@dataclass(frozen=True)
class BoundReport:
    """lhs (relation) rhs, with slack > 0 meaning the bound holds with room to spare.

    For relation "in" the check is lower <= lhs <= rhs.
    """

    name: str
    lhs: float
    rhs: float
    relation: str
    context: str = ""
    lower: float | None = None
    hypothesis: bool = True
    note: str = ""
    tol: float = TOL
    slack: float = field(init=False)
    satisfied: bool = field(init=False)

    def __post_init__(self):
        if self.relation == LE:
            s = self.rhs - self.lhs
        elif self.relation == GE:
            s = self.lhs - self.rhs
        elif self.relation == IN:
            s = min(self.lhs - self.lower, self.rhs - self.lhs)
        else:
            raise ValueError(f"unknown relation {self.relation!r}")
        object.__setattr__(self, "slack", float(s))
        # a violated hypothesis makes the statement vacuous
        object.__setattr__(self, "satisfied", bool(s >= -self.tol) or not self.hypothesis)


def context_of(d: DomainSpec | None = None, V: PotentialSpec | None = None, **extra) -> str:
    out = {}
    if d is not None:
        out["domain"] = _short_domain(d)
    if V is not None:
        out["potential"] = potential_to_dict(V)
    out.update(extra)
    return json.dumps(out, sort_keys=True, separators=(",", ":"))


def _short_domain(d):
    if isinstance(d, BallUnion):
        radii = sorted(b.R for b in d.balls)
        return {"type": "ball_union", "dim": d.m, "count": len(d.balls), "r_min": radii[0], "r_max": radii[-1]}
    return domain_to_dict(d)


def _dim(d: DomainSpec) -> int:
    return 1 if isinstance(d, Interval) else d.m


def _sup_potential(V: PotentialSpec) -> float:
    return V.sup()


# ---------------------------------------------------------------------------
# Eigenvalue times torsion sup: 1 <= lambda1 ||v||_inf <= 4 + 3 m log 2
# ---------------------------------------------------------------------------

def lemma1_constant(m: int) -> float:
    return 4.0 + 3.0 * m * math.log(2.0)


def check_lemma1(d: DomainSpec, V: PotentialSpec = Zero(), n_nodes: int = DEFAULT_NODES) -> BoundReport:
    m = _dim(d)
    lam = first_eigenvalue(d, V, n_nodes)
    _, sup = torsion_norms(d, V, n_nodes)
    return BoundReport("lemma1", lam * sup, lemma1_constant(m), IN, context_of(d, V), lower=1.0)


# ---------------------------------------------------------------------------
# Constant potentials
# ---------------------------------------------------------------------------

def lemma2_factor(m: int, c: float, lambda1: float) -> float:
    """2^{-2(3m+4)c/l} * l/(8c+l) * (8c/(8c+l))^{8c/l}; equal to 1 at c = 0."""
    if c < 0 or not lambda1 > 0:
        raise ValueError("need c >= 0 and lambda1 > 0")
    if c == 0:
        return 1.0
    t = c / lambda1
    log_f = (-2 * (3 * m + 4) * t * math.log(2.0) - math.log1p(8 * t)
             + 8 * t * (math.log(8 * t) - math.log1p(8 * t)))
    return math.exp(log_f)


def lemma2_time(m: int, c: float, lambda1: float) -> float:
    """The heat-semigroup time T at which the pointwise lower bound is optimal."""
    if not c > 0:
        return math.inf
    return 8.0 / lambda1 * math.log(2.0 ** ((4 + 3 * m) / 4) * (1 + lambda1 / (8 * c)))


def _profiles_same_grid(d, c, n_nodes):
    if isinstance(d, Interval):
        return solve_torsion_1d(d, Constant(c), n_nodes), solve_torsion_1d(d, Zero(), n_nodes)
    if isinstance(d, (Ball, Annulus)):
        dd = Ball(d.m, d.R) if isinstance(d, Ball) else d
        return (solve_torsion_radial(d.m, dd, Constant(c), n_nodes),
                solve_torsion_radial(d.m, dd, Zero(), n_nodes))
    return None


def check_thm1_constant(d: DomainSpec, c: float, n_nodes: int = DEFAULT_NODES) -> list[BoundReport]:
    """Upper and lower efficiency sandwich for V = c, and the nodewise torsion comparison."""
    m = _dim(d)
    lam = first_eigenvalue(d, Zero(), n_nodes)
    F = lemma2_factor(m, c, lam)
    phi0 = efficiency_torsion(d, Zero(), n_nodes)
    phic = efficiency_torsion(d, Constant(c), n_nodes) if c > 0 else phi0
    ctx = context_of(d, Constant(c), lambda1=lam, factor=F)
    out = [BoundReport("thm1-upper", phic, phi0 / F, LE, ctx),
           BoundReport("thm1-lower", phic, F * phi0, GE, ctx)]
    pair = _profiles_same_grid(d, c, n_nodes) if c > 0 else None
    if pair is not None:
        vc, v0 = pair
        interior = v0.values > 0
        gap = float(np.min(vc.values[interior] - F * v0.values[interior]))
        out.append(BoundReport("thm1-nodewise", gap, 0.0, GE, ctx))
    return out


def eta_sandwich(m: int, eta: float) -> float:
    """e 2^{2(3m+4) eta} (1 + 8 eta)."""
    return math.e * 2.0 ** (2 * (3 * m + 4) * eta) * (1 + 8 * eta)


def check_thm1_eta(family, eta: float, n_nodes: int = DEFAULT_NODES) -> list[BoundReport]:
    """Two-sided comparison of Phi(Omega_n, V_n) with Phi(Omega_n) under ||V_n||/lambda1 <= eta."""
    out = []
    for i, (d, V) in enumerate(family):
        m = _dim(d)
        lam = first_eigenvalue(d, Zero(), n_nodes)
        ratio = _sup_potential(V) / lam
        ok = ratio <= eta * (1 + 1e-12)
        phi0 = efficiency_torsion(d, Zero(), n_nodes)
        phiV = efficiency_torsion(d, V, n_nodes)
        k = eta_sandwich(m, eta)
        note = "" if ok else f"hypothesis fails: sup V / lambda1 = {ratio:.6g} > eta"
        ctx = context_of(d, V, member=i, eta=eta, ratio=ratio)
        out.append(BoundReport("thm1-eta-lower", phiV, phi0 / k, GE, ctx, hypothesis=ok, note=note))
        out.append(BoundReport("thm1-eta-upper", phiV, phi0 * k, LE, ctx, hypothesis=ok, note=note))
    return out


def e50_rhs(d: DomainSpec, c: float, n_nodes: int = DEFAULT_NODES) -> float:
    m = _dim(d)
    return 1.0 - 2.0 ** ((m + 4) / 2) / measure(d) * boundary_decay_integral(d, c, n_nodes)


def check_e50(d: DomainSpec, c: float, n_nodes: int = DEFAULT_NODES) -> list[BoundReport]:
    """1 > Phi(Omega, c) >= 1 - 2^{(m+4)/2} |Omega|^{-1} int exp(-sqrt(c) d(x) / 2)."""
    phi = efficiency_torsion(d, Constant(c) if c > 0 else Zero(), n_nodes)
    ctx = context_of(d, Constant(c))
    return [BoundReport("e50-lower", phi, e50_rhs(d, c, n_nodes), GE, ctx),
            BoundReport("e50-upper", phi, 1.0, LE, ctx, tol=0.0)]


# ---------------------------------------------------------------------------
# Zero potential: efficiency gaps, sup and eigenvalue bounds, convex lower bound, boxes
# ---------------------------------------------------------------------------

def k_m(m: int) -> float:
    if m in (2, 3):
        return 2.0 * (8 * math.pi) ** (-m / 4) * gamma((4 - m) / 4)
    if m >= 4:
        return (m - 2) ** -1.0 * m ** (-1.0 / (m - 1)) * gamma((m + 2) / 2) ** (2.0 / m) / math.pi
    raise DomainError("k_m is defined for m >= 2")


@dataclass(frozen=True)
class ShapeData:
    m: int
    volume: float
    lambda1: float
    phi: float
    E: float
    sup_v: float


def shape_data(d: DomainSpec, n_nodes: int = DEFAULT_NODES) -> ShapeData:
    """lambda1, Phi, E and ||v||_inf for V = 0."""
    e = eigen_data(d, Zero(), n_nodes)
    l1, sup = torsion_norms(d, Zero(), n_nodes)
    vol = measure(d)
    return ShapeData(_dim(d), vol, e.lambda1, l1 / (vol * sup), e.efficiency, sup)


def remark0_rhs(s: ShapeData) -> float:
    k = k_m(s.m)
    if s.m in (2, 3):
        den = 1 + k * s.lambda1 ** (s.m / 4) * s.volume**0.5 * (1 - s.E) ** 0.5
    else:
        den = 1 + k * s.lambda1 * s.volume ** (2 / s.m) * (1 - s.E) ** (1 / (s.m - 1))
    return s.E / den


def check_remark0(d: DomainSpec, n_nodes: int = DEFAULT_NODES) -> BoundReport:
    if not is_connected(d):
        raise DomainError("the eigenfunction lower bound needs a connected domain")
    s = shape_data(d, n_nodes)
    if s.m < 2:
        raise DomainError("needs m >= 2")
    return BoundReport("remark0", s.phi, remark0_rhs(s), GE, context_of(d, Zero(), E=s.E, lambda1=s.lambda1))


def _fk(m, vol):
    return (unit_ball_volume(m) / vol) ** (2.0 / m)


def check_thm9(d: DomainSpec, n_nodes: int = DEFAULT_NODES) -> list[BoundReport]:
    """Sup-norm and eigenvalue bounds in terms of 1 - Phi and 1 - E."""
    s = shape_data(d, n_nodes)
    if s.m < 2:
        raise DomainError("needs m >= 2")
    k = 4.0 * s.m**2 / (s.m + 2) ** 2
    fk = _fk(s.m, s.volume)
    ctx = context_of(d, Zero(), phi=s.phi, E=s.E)
    out = [BoundReport("p22a", s.sup_v, (1 - s.phi) / (k * fk), LE, ctx),
           BoundReport("p22b", s.lambda1, k * fk / (1 - s.phi), GE, ctx)]
    if is_connected(d):
        out.append(BoundReport("p22c", s.lambda1, k * fk / (1 - s.E), GE, ctx))
    return out


def raw_p22_sides(m: int, volume: float, u: Profile) -> tuple[float, float]:
    sup = u.sup
    mean = u.l1 / volume
    lhs = (unit_ball_volume(m) / volume) ** ((m - 2) / m) * (sup - mean) * u.dirichlet_energy()
    rhs = 4.0 * m * m / (m + 2) ** 2 * unit_ball_volume(m) * sup**3
    return lhs, rhs


def check_raw_p22(d: DomainSpec, u: Profile, hyp_tol: float = 1e-6) -> BoundReport:
    """(w_m/|O|)^{(m-2)/m} (sup u - mean u) int |grad u|^2 >= 4m^2/(m+2)^2 w_m sup^3.

    Requires mean u >= 2 sup u/(m+2); otherwise the report is marked vacuous.
    """
    m = _dim(d)
    vol = measure(d)
    lhs, rhs = raw_p22_sides(m, vol, u)
    ratio = u.l1 / (vol * u.sup)
    ok = ratio >= 2.0 / (m + 2) - hyp_tol
    note = "" if ok else f"mean/sup = {ratio:.6g} below 2/(m+2)"
    # compare on the scale of the right-hand side so the check is scale-free
    return BoundReport("p22-raw", lhs / rhs, 1.0, GE, context_of(d, None, sup=u.sup, ratio=ratio),
                       hypothesis=ok, note=note)


def check_e70(d: DomainSpec, n_nodes: int = DEFAULT_NODES) -> BoundReport:
    if not isinstance(d, (Interval, Ball, Box)):
        raise DomainError("the convex lower bound applies to intervals, balls and boxes")
    m = _dim(d)
    return BoundReport("e70", efficiency_torsion(d, Zero(), n_nodes), 2.0 / (m * (m + 2)), GE, context_of(d, Zero()))


def check_remark2(n_values, m: int = 2) -> list[BoundReport]:
    """Elongated boxes (0,1)^{m-1} x (0,n): the scale-free quantities grow at least like n^{2/m}."""
    if m < 2:
        raise DomainError("needs m >= 2")
    out = []
    prev_e = prev_p = -math.inf
    for n in n_values:
        box = Box(m, (1.0,) * (m - 1) + (float(n),))
        lam, E = cf.box_first_eigen(m, box.sides)
        vol = float(n)
        ctx = context_of(box, Zero())
        qe = lam * (1 - E) * vol ** (2 / m)
        out.append(BoundReport("remark2-E", qe, (m - 1) * (1 - (2 / math.pi) ** m) * math.pi**2 * n ** (2 / m), GE, ctx))
        if prev_e > -math.inf:
            out.append(BoundReport("remark2-E-growth", qe, prev_e, GE, ctx, tol=0.0))
        prev_e = qe
        if m == 2:
            phi = efficiency_torsion(box)
            qp = lam * (1 - phi) * vol
            out.append(BoundReport("remark2-phi-cap", phi, 2.0 / 3.0, LE, ctx))
            out.append(BoundReport("remark2-phi", qp, (m - 1) * math.pi**2 * n ** (2 / m) / 3, GE, ctx))
            if prev_p > -math.inf:
                out.append(BoundReport("remark2-phi-growth", qp, prev_p, GE, ctx, tol=0.0))
            prev_p = qp
    return out


def check_e68(d: DomainSpec, V: PotentialSpec = Zero(), n_nodes: int = DEFAULT_NODES) -> BoundReport:
    """(4 + 3m log 2) Phi(Omega, V) >= (int phi_1)^2 / |Omega|."""
    m = _dim(d)
    phi = efficiency_torsion(d, V, n_nodes)
    e = eigen_data(d, V, n_nodes)
    return BoundReport("e68", lemma1_constant(m) * phi, e.l1_sq_over_volume, GE, context_of(d, V))


# ---------------------------------------------------------------------------
# Battery
# ---------------------------------------------------------------------------

def standard_battery(n_nodes: int = DEFAULT_NODES) -> list[BoundReport]:
    """Deterministic list of instances across every bound family."""
    from fractions import Fraction

    reps: list[BoundReport] = []
    unit = Interval(0.0, 1.0)
    wells = [SymmetricWell(nu, 0.2) for nu in (5.0, 10.0, 20.0)]
    well_domain = Interval(-1.0, 1.0)
    ex2 = cf.example2_domain(2, 20, Fraction(3, 5), Fraction(3, 5) - Fraction(1, 4), 1.0)

    # lambda1 ||v||_inf sandwich
    for d, V in [(unit, Zero()), (Interval(0.0, 2.0), Constant(5.0)),
                 *[(Ball(m, 1.0), Zero()) for m in range(1, 7)],
                 (Ball(2, 1.0), Constant(10.0)), (Annulus(2, 0.5, 1.0), Zero()),
                 (Annulus(3, 0.3, 1.0), Constant(2.0)), (Box(2, (1.0, 3.0)), Zero()),
                 (ex2, Zero()), *[(well_domain, w) for w in wells]]:
        reps.append(check_lemma1(d, V, n_nodes))

    # constant potentials: efficiency sandwich and nodewise comparison
    lam_b3 = first_eigenvalue(Ball(3, 1.0), Zero(), n_nodes)
    for d, c in [(unit, 0.0), (unit, 5.0), (unit, 50.0), (Ball(3, 1.0), lam_b3),
                 (Ball(2, 1.0), 1.0), (Annulus(2, 0.5, 1.0), 3.0)]:
        reps.extend(check_thm1_constant(d, c, n_nodes))

    # bounded ratio families, one violating the hypothesis
    eta = 1.0
    fam = [(Interval(0.0, L), Constant(math.pi**2 / L**2 * eta / 2)) for L in (1.0, 2.0, 4.0)]
    reps.extend(check_thm1_eta(fam, eta, n_nodes))
    reps.extend(check_thm1_eta([(well_domain, SymmetricWell(float(n), n ** (-2 / 3))) for n in (10, 100)],
                               eta, n_nodes))

    # large constant potentials: boundary-layer lower bound
    for d, c in [(unit, 0.0), (unit, 1e2), (unit, 1e4), (Ball(2, 1.0), 1e3),
                 (Ball(3, 1.0), 1e2), (Annulus(2, 0.5, 1.0), 1e3)]:
        reps.extend(check_e50(d, c, n_nodes))

    # torsion efficiency against eigenfunction efficiency
    for d in [Ball(2, 1.0), Ball(3, 1.0), Ball(4, 1.0), Ball(5, 1.0),
              Annulus(2, 0.5, 1.0), Annulus(3, 0.5, 1.0), Box(2, (1.0, 2.0))]:
        reps.append(check_remark0(d, n_nodes))

    # sup-norm and eigenvalue bounds from 1 - Phi and 1 - E
    for d in [*[Ball(m, 1.0) for m in range(2, 7)], Annulus(2, 0.5, 1.0),
              *[Box(2, (1.0, float(n))) for n in (1, 5, 20)]]:
        reps.extend(check_thm9(d, n_nodes))
    for m in (2, 3, 4):
        b = Ball(m, 1.0)
        v = solve_torsion_radial(m, b, Zero(), n_nodes)
        reps.append(check_raw_p22(b, v))
        reps.append(check_raw_p22(b, v.scaled(7.0)))
    for m, theta in [(2, 0.6), (3, 0.8), (5, 0.9)]:
        sol = ob.obstacle_solution(m, ob.l_of_theta(m, theta), n_nodes)
        reps.append(check_raw_p22(Ball(m, 1.0), sol.profile))

    # Convex lower bound
    for d in [unit, *[Ball(m, 1.0) for m in range(1, 7)], Box(2, (1.0, 1.0)), Box(2, (1.0, 20.0))]:
        reps.append(check_e70(d, n_nodes))

    # elongated boxes
    reps.extend(check_remark2([1, 2, 5, 10, 20], 2))
    reps.extend(check_remark2([1, 4, 16], 3))

    # Eigenfunction mass against efficiency
    for d, V in [(unit, Zero()), (unit, Constant(5.0)), *[(well_domain, w) for w in wells],
                 (Ball(2, 1.0), Zero()), (Ball(3, 1.0), Constant(10.0)), (Box(2, (1.0, 4.0)), Zero())]:
        reps.append(check_e68(d, V, n_nodes))
    return reps


CSV_HEADER = ["bound_name", "context", "lhs", "rhs", "slack", "satisfied"]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow([r.name, r.context, format(r.lhs, ".17g"), format(r.rhs, ".17g"),
                    format(r.slack, ".17g"), "true" if r.satisfied else "false"])
    return buf.getvalue()


def run_battery(n_nodes: int = DEFAULT_NODES) -> tuple[list[BoundReport], float]:
    t0 = time.perf_counter()
    reps = standard_battery(n_nodes)
    return reps, time.perf_counter() - t0
