"""Radial volume-constrained obstacle problem on the unit ball and the functional f(theta).

For a plateau radius l in [0, 1) the minimiser equals 1 on B_l, solves
-Delta u = c on the shell with zero slope at r = l and u(1) = 0, and has mean
theta(l). f(theta) = (1 - theta) * Dirichlet energy; g(l) = f(theta(l)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq
from scipy.special import xlogy

from .domains import DEFAULT_NODES, Ball, DomainError, Grid, radial_weights, unit_ball_volume
from .solver import ConvergenceError, Profile

L_MAX = 1.0 - 1e-9
# above this plateau radius the closed forms cancel badly; use the slope integrals
L_STABLE = 0.9
_GL_X, _GL_W = np.polynomial.legendre.leggauss(40)


def _check(m, l):
    if m < 2:
        raise DomainError("the obstacle problem is set up for m >= 2")
    if not 0 <= l < 1:
        raise DomainError(f"plateau radius must lie in [0, 1), got {l}")


def _shell_nodes(l):
    half = 0.5 * (1.0 - l)
    return l + half * (_GL_X + 1.0), half * _GL_W


def _unit_slope(m, l, r):
    """-u'(r) / c = r (1 - (l/r)^m) / m, without cancellation."""
    if l == 0:
        return r / m
    return -r * np.expm1(m * np.log(l / r)) / m


def _stable_moments(m: int, l: float) -> tuple[float, float, float, float]:
    """(c, theta - l^m, 1 - theta, energy / c^2) from integrals of the slope.

    Uses u(l) = 1, theta = int (-u') r^m dr and 1 - theta = int (-u') (1 - r^m) dr,
    all with positive integrands.
    """
    r, w = _shell_nodes(l)
    s = _unit_slope(m, l, r)
    c = 1.0 / float(w @ s)
    rm = r**m
    above = c * float(w @ (s * -np.expm1(m * np.log(l / r)) * rm)) if l > 0 else c * float(w @ (s * rm))
    below = c * float(w @ (s * -np.expm1(m * np.log(r))))
    energy_c2 = m * unit_ball_volume(m) * float(w @ (s * s * r ** (m - 1)))
    return c, above, below, energy_c2


def obstacle_c_of_l(m: int, l: float) -> float:
    """Multiplier c fixed by u(l) = 1."""
    _check(m, l)
    if l > L_STABLE:
        return _stable_moments(m, l)[0]
    if m == 2:
        return 1.0 / ((1 - l * l) / 4 + xlogy(l * l, l) / 2)
    return 1.0 / (1.0 / (2 * m) + l**m / (m * (m - 2)) - l * l / (2 * (m - 2)))


def obstacle_profile(m: int, l: float, r):
    """u(r; l): 1 on [0, l], the harmonic-plus-quadratic shell solution on [l, 1]."""
    _check(m, l)
    r = np.asarray(r, dtype=float)
    if np.any(r > 1 + 1e-15) or np.any(r < 0):
        raise DomainError("radius outside [0, 1]")
    c = obstacle_c_of_l(m, l)
    rr = np.maximum(r, l)
    if m == 2:
        u = c / 4 * (1 - rr * rr) + l * l * c / 2 * np.log(np.where(rr > 0, rr, 1.0))
    else:
        with np.errstate(divide="ignore"):
            tail = np.where(rr > 0, 1 - rr ** (2.0 - m), 0.0)
        u = c / (2 * m) * (1 - rr * rr) + l**m * c / (m * (m - 2)) * tail
    u = np.where(r <= l, 1.0, u)
    return float(u) if u.ndim == 0 else u


def obstacle_slope(m: int, l: float, r):
    """u'(r) = (c/m)(l^m r^{1-m} - r) on [l, 1]."""
    c = obstacle_c_of_l(m, l)
    r = np.asarray(r, dtype=float)
    return c / m * (l**m * r ** (1.0 - m) - r)


def shell_integral(m: int, l: float) -> float:
    """I(l) = int_l^1 u(r; l) r^{m-1} dr, in closed form."""
    _check(m, l)
    if l > L_STABLE:
        return _stable_moments(m, l)[1] / m
    c = obstacle_c_of_l(m, l)
    if m == 2:
        return c * ((1 - 4 * l**2 + 3 * l**4) / 16 - xlogy(l**4, l) / 4)
    lm = l**m
    return c * (lm * (l * l - 1) / (2 * m * (m - 2)) + (l ** (m + 2) - 1) / (2 * m * (m + 2))
                + lm * (1 - lm) / (m * m * (m - 2)) + (1 - lm) / (2 * m * m))


def theta_of_l(m: int, l: float) -> float:
    """Mean of u(.; l) over B_1."""
    if l > L_STABLE:
        _check(m, l)
        return 1.0 - _stable_moments(m, l)[2]
    return l**m + m * shell_integral(m, l)


def l_of_theta(m: int, theta: float, tol: float = 1e-12) -> float:
    """Inverse of theta_of_l by bisection on [0, 1 - 1e-9]."""
    lo_t = 2.0 / (m + 2)
    if not lo_t - 1e-15 <= theta < 1:
        raise DomainError(f"theta must lie in [2/(m+2), 1), got {theta}")
    if theta <= lo_t:
        return 0.0
    lo, hi = 0.0, L_MAX
    if theta_of_l(m, hi) < theta:
        raise DomainError("theta too close to 1 for the plateau bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        t = theta_of_l(m, mid)
        if abs(t - theta) <= tol:
            return mid
        if t < theta:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return 0.5 * (lo + hi)


def obstacle_energy(m: int, l: float) -> float:
    """Dirichlet energy of u(.; l), integrated directly from the slope."""
    _check(m, l)
    if l > L_STABLE:
        c, _, _, e = _stable_moments(m, l)
        return c * c * e
    c = obstacle_c_of_l(m, l)
    if m == 2:
        first = -xlogy(l**4, l)
    else:
        first = l ** (2 * m) * (1 - l ** (2.0 - m)) / (2 - m) if l > 0 else 0.0
    integral = first - l**m * (1 - l * l) + (1 - l ** (m + 2)) / (m + 2)
    return m * unit_ball_volume(m) * c * c / (m * m) * integral


def f_of_theta(m: int, theta: float) -> float:
    """f(theta) = (1 - theta) * energy of the obstacle minimiser with mean theta."""
    l = l_of_theta(m, theta)
    if l > L_STABLE:
        # 1 - theta from the stable integral rather than the rounded input
        c, _, below, e = _stable_moments(m, l)
        return below * c * c * e
    return (1.0 - theta) * obstacle_energy(m, l)


def g_generic(m: int, l: float) -> float:
    """g(l) = c m omega_m (1 - l^m - m I) I via the shell integral."""
    if l > L_STABLE:
        _check(m, l)
        c, above, below, _ = _stable_moments(m, l)
        return c * unit_ball_volume(m) * below * above
    c = obstacle_c_of_l(m, l)
    I = shell_integral(m, l)
    return c * m * unit_ball_volume(m) * (1 - l**m - m * I) * I


def g_closed_form(m: int, l: float) -> float | None:
    """Explicit quotients for m = 2, 3, 4; None for other m."""
    _check(m, l)
    if m == 2:
        ln = math.log(l) if l > 0 else 0.0
        num = (1 / 16 - l**2 / 4 + 3 * l**4 / 16 - l**4 * ln / 4) * (1 / 8 - l**4 / 8 + l**2 * ln / 2)
        den = (1 / 4 - l**2 / 4 + l**2 * ln / 2) ** 3
        return 2 * math.pi * num / den
    if m == 3:
        a = 5 * (1 - l**3) + 10 * l**3 * (1 - l**3) - 15 * l**3 * (1 - l**2) - 3 * (1 - l**5)
        b = 1 - l**5 + 5 * (l**3 - l**2)
        return 24 * math.pi / 25 * a * b / (2 * l**3 + 1 - 3 * l**2) ** 3
    if m == 4:
        return unit_ball_volume(4) * (16 * l**2 / 3 + 16 / 9)
    return None


def g_of_l(m: int, l: float) -> float:
    cf = g_closed_form(m, l)
    return g_generic(m, l) if cf is None else cf


def f_minimum(m: int) -> float:
    """4 m^2 omega_m / (m + 2)^2, the value at theta = 2/(m+2)."""
    return 4 * m * m * unit_ball_volume(m) / (m + 2) ** 2


def f_limit(m: int) -> float:
    """(4/9) m^2 omega_m, the limit of f as theta -> 1."""
    return 4 * m * m * unit_ball_volume(m) / 9


def theta_star(m: int) -> float:
    if m < 2:
        raise DomainError("m >= 2")
    return (m + math.sqrt(m * m + 8 * m)) / (2 * (m + 2))


# ---------------------------------------------------------------------------
# Two-piece lower bound used for m >= 4
# ---------------------------------------------------------------------------

def eta_lower_bound(m: int, theta: float, r0: float) -> tuple[float, float]:
    """(eta, energy) of the flat-then-harmonic competitor with u(r0) = eta."""
    if m < 3:
        raise DomainError("the harmonic two-piece bound needs m >= 3")
    if not 0 < r0 <= theta ** (1.0 / m) * (1 + 1e-15):
        raise DomainError("need 0 < r0 <= theta^(1/m)")
    eta = (theta - r0**m) / (1 - r0**m)
    energy = m * (m - 2) * unit_ball_volume(m) * eta**2 / (r0 ** (2.0 - m) - 1)
    return eta, energy


def f_relaxed_bound(m: int, theta: float, c: float = 3.0) -> float:
    """Lower bound for f(theta) from the two-piece competitor with r0 = theta^(c/m)."""
    eta, energy = eta_lower_bound(m, theta, theta ** (c / m))
    return (1 - theta) * energy


def f_chain_bounds(m: int, theta: float) -> tuple[float, float, float]:
    """The relaxed bound at c = 3 and its two successive weakenings (decreasing)."""
    w = unit_ball_volume(m)
    q = theta * (1 + theta) / (1 + theta + theta**2)
    first = m * (m - 2) * w * q * q * (1 - theta) / (theta ** (3.0 * (2 - m) / m) - 1)
    second = m * (m - 2) * w * q * q * (1 - theta) / (theta**-3 - 1)
    third = m * (m - 2) * w * theta**5 * (1 + theta) ** 2 / (1 + theta + theta**2) ** 3
    return first, second, third


def chain_ratio(m: int, theta: float) -> float:
    """q(theta)^2 (1 - theta)/(theta^{3(2-m)/m} - 1), compared with 4m/((m-2)(m+2)^2)."""
    q = theta * (1 + theta) / (1 + theta + theta**2)
    return q * q * (1 - theta) / (theta ** (3.0 * (2 - m) / m) - 1)


def chain_threshold(m: int) -> float:
    return 4.0 * m / ((m - 2) * (m + 2) ** 2)


# ---------------------------------------------------------------------------
# Solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObstacleSolution:
    m: int
    l: float
    c: float
    theta: float
    profile: Profile
    energy: float
    f_value: float


def obstacle_solution(m: int, l: float, n_nodes: int = DEFAULT_NODES) -> ObstacleSolution:
    """Closed-form solution sampled on a uniform radial grid."""
    nodes = np.linspace(0.0, 1.0, n_nodes)
    grid = Grid("radial", nodes, radial_weights(nodes, m), m)
    prof = Profile(grid, obstacle_profile(m, l, nodes), Ball(m, 1.0))
    th = theta_of_l(m, l)
    e = obstacle_energy(m, l)
    return ObstacleSolution(m, l, obstacle_c_of_l(m, l), th, prof, e, (1 - th) * e)


def _p1_stiffness(nodes, m):
    r = nodes
    h = np.diff(r)
    k = unit_ball_volume(m) * (r[1:] ** m - r[:-1] ** m) / h**2
    n = r.size
    diag = np.zeros(n)
    diag[:-1] += k
    diag[1:] += k
    return diag, -k


def _projected_sweep(diag, off, rhs):
    """Tridiagonal elimination from the last row up, then projected back substitution.

    Exact when the contact set touches the first row; used only as a warm
    start, the active-set loop below certifies or corrects it.
    """
    d = diag[::-1].copy()
    o = off[::-1]
    b = rhs[::-1].copy()
    n = d.size
    for i in range(1, n):
        f = o[i - 1] / d[i - 1]
        d[i] -= f * o[i - 1]
        b[i] -= f * b[i - 1]
    u = np.empty(n)
    u[-1] = min(1.0, b[-1] / d[-1])
    for i in range(n - 2, -1, -1):
        u[i] = min(1.0, (b[i] - o[i] * u[i + 1]) / d[i])
    return u[::-1]


def _box_constrained_solve(diag, off, rhs, max_iter=500):
    """min 1/2 u'Ku - rhs'u subject to u <= 1, by a primal-dual active set loop.

    K is a tridiagonal M-matrix. The loop stops when the active set repeats,
    at which point u <= 1 and the multipliers rhs - Ku are >= 0 on the
    contact set, i.e. the KKT conditions of the convex problem hold.
    """
    n = diag.size

    def apply(u):
        out = diag * u
        out[:-1] += off * u[1:]
        out[1:] += off * u[:-1]
        return out

    u = _projected_sweep(diag, off, rhs)
    active = u >= 1.0
    for _ in range(max_iter):
        inact = ~active
        u = np.ones(n)
        if inact.any():
            # couplings to contact nodes move to the right-hand side
            b = rhs - apply(np.where(active, 1.0, 0.0))
            keep = inact[:-1] & inact[1:]
            o = off[keep] if keep.any() else np.zeros(0)
            idx = np.flatnonzero(inact)
            # off-diagonals between non-adjacent inactive nodes vanish
            o_full = np.zeros(max(idx.size - 1, 0))
            adjacent = np.diff(idx) == 1
            o_full[adjacent] = o
            ab = np.zeros((3, idx.size))
            ab[0, 1:] = o_full
            ab[1] = diag[idx]
            ab[2, :-1] = o_full
            u[idx] = solve_banded((1, 1), ab, b[idx])
        mu = rhs - apply(u)
        mu[inact] = 0.0
        new_active = mu + (u - 1.0) > 0
        if np.array_equal(new_active, active):
            return u
        active = new_active
    raise ConvergenceError("active-set iteration did not settle")


def numeric_obstacle_solve(m: int, theta: float, n_nodes: int = DEFAULT_NODES) -> ObstacleSolution:
    """Discrete minimiser of the radial Dirichlet energy with 0 <= u <= 1, u(1) = 0, mean theta.

    Uses piecewise-linear elements on a uniform grid. For a fixed multiplier c
    the box-constrained problem is solved exactly by an active-set loop; c is
    then tuned by root finding so the mean equals theta. Nothing about the
    plateau is assumed: it emerges as the active set.
    """
    if m < 2:
        raise DomainError("m >= 2")
    if not 2.0 / (m + 2) - 1e-15 <= theta < 1:
        raise DomainError("theta must lie in [2/(m+2), 1)")
    nodes = np.linspace(0.0, 1.0, n_nodes)
    w = radial_weights(nodes, m)
    vol = unit_ball_volume(m)
    diag, off = _p1_stiffness(nodes, m)
    # u(1) = 0: drop the last node
    d_in, o_in, w_in = diag[:-1], off[:-1], w[:-1]

    def solve(c):
        u = np.zeros(n_nodes)
        u[:-1] = np.clip(_box_constrained_solve(d_in, o_in, c * w_in), 0.0, 1.0)
        return u

    def mean_gap(c):
        return float(w @ solve(c)) / vol - theta

    hi = 2.0 * m
    while mean_gap(hi) < 0:
        hi *= 2
        if hi > 1e12:
            raise ConvergenceError("multiplier bracket blew up")
    c = brentq(mean_gap, 1e-9, hi, xtol=1e-13, rtol=1e-14)
    u = solve(c)
    grid = Grid("radial", nodes, w, m)
    prof = Profile(grid, u, Ball(m, 1.0))
    plateau = nodes[u >= 1.0 - 1e-12]
    l = float(plateau.max()) if plateau.size else 0.0
    th = float(w @ u) / vol
    energy = prof.dirichlet_energy()
    return ObstacleSolution(m, l, c, th, prof, energy, (1 - th) * energy)
