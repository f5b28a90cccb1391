"""Exact formulas: ball torsion, the 1D symmetric well, ball unions and boxes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import ive

from .domains import (
    Ball,
    BallUnion,
    Box,
    DomainError,
    Interval,
    unit_ball_volume,
)

CRITICAL_TOL = 1e-12


# ---------------------------------------------------------------------------
# Balls
# ---------------------------------------------------------------------------

def ball_torsion(m: int, R: float, r) -> float | np.ndarray:
    """Torsion function (R^2 - r^2) / (2m) of the ball of radius R."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > R * (1 + 1e-15)):
        raise DomainError("radius outside [0, R]")
    out = (R * R - r * r) / (2.0 * m)
    return float(out) if out.ndim == 0 else out


def torsional_rigidity_constant(m: int) -> float:
    return unit_ball_volume(m) / (m * (m + 2))


def ball_torsion_norms(m: int, R: float) -> tuple[float, float]:
    """(L1 norm, sup norm) of the ball's torsion function."""
    return torsional_rigidity_constant(m) * R ** (m + 2), R * R / (2.0 * m)


def ball_mean_to_max(m: int) -> float:
    return 2.0 / (m + 2)


def ball_torsion_constant_potential(m: int, R: float, c: float, r) -> np.ndarray:
    """Radial solution of -Delta u + c u = 1 in B_R, u = 0 on the sphere.

    u(r) = (1 - r^{-k} I_k(sqrt(c) r) / (R^{-k} I_k(sqrt(c) R))) / c with
    k = (m - 2) / 2. Scaled Bessel functions keep large c finite.
    """
    r = np.asarray(r, dtype=float)
    if c == 0:
        return (R * R - r * r) / (2.0 * m)
    s = math.sqrt(c)
    k = 0.5 * (m - 2)
    # ratio I_k(s r) r^-k / (I_k(s R) R^-k), via ive = iv * exp(-x)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = ive(k, s * r) * np.exp(s * (r - R))
        ratio = num / ive(k, s * R) * (R / np.where(r > 0, r, 1.0)) ** k
    if np.any(r == 0):
        # limit of I_k(x)/x^k at 0 is 1/(2^k Gamma(k+1))
        at0 = (s / 2.0) ** k / math.gamma(k + 1) * R**k / (ive(k, s * R) * math.exp(s * R))
        ratio = np.where(r == 0, at0, ratio)
    return (1.0 - ratio) / c


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------

def interval_torsion(d: Interval, x, c: float = 0.0) -> np.ndarray:
    """Torsion function of -u'' + c u = 1 on the interval, c >= 0 constant."""
    x = np.asarray(x, dtype=float)
    mid = 0.5 * (d.a + d.b)
    half = 0.5 * d.length
    if c == 0:
        return 0.5 * (x - d.a) * (d.b - x)
    s = math.sqrt(c)
    # cosh(s y)/cosh(s h) = exp(s(|y|-h)) (1 + e^{-2s|y|}) / (1 + e^{-2sh})
    y = np.abs(x - mid)
    ratio = np.exp(s * (y - half)) * (1.0 + np.exp(-2 * s * y)) / (1.0 + math.exp(-2 * s * half))
    return (1.0 - ratio) / c


def interval_torsion_norms(d: Interval, c: float = 0.0) -> tuple[float, float]:
    L = d.length
    if c == 0:
        return L**3 / 12.0, L * L / 8.0
    s = math.sqrt(c)
    l1 = (L - 2.0 / s * math.tanh(0.5 * s * L)) / c
    sup = (1.0 - 1.0 / math.cosh(0.5 * s * L)) / c if 0.5 * s * L < 700 else 1.0 / c
    return l1, sup


# ---------------------------------------------------------------------------
# The symmetric well on (-1, 1)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Example1Coefficients:
    """Coefficients of the torsion function for the well of depth nu^2 outside (-eps, eps).

    On [0, eps] the profile is -x^2/2 + gamma and on [eps, 1] it is
    1/nu^2 - alpha e^{nu x} + beta e^{-nu x}. ``a_scaled`` = alpha e^{nu} and
    ``b_scaled`` = beta e^{-nu eps} are O(1) quantities; alpha and beta
    themselves under/overflow for nu of order 10^3.
    """

    nu: float
    eps: float
    a_scaled: float
    b_scaled: float
    gamma: float

    @property
    def alpha(self) -> float:
        return self.a_scaled * math.exp(-self.nu)

    @property
    def beta(self) -> float:
        try:
            return self.b_scaled * math.exp(self.nu * self.eps)
        except OverflowError:
            return math.inf

    def inner(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return -0.5 * x * x + self.gamma

    def outer(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        nu = self.nu
        return 1.0 / nu**2 - self.a_scaled * np.exp(-nu * (1.0 - x)) + self.b_scaled * np.exp(-nu * (x - self.eps))

    def inner_slope(self, x) -> np.ndarray:
        return -np.asarray(x, dtype=float)

    def outer_slope(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        nu = self.nu
        return -nu * self.a_scaled * np.exp(-nu * (1.0 - x)) - nu * self.b_scaled * np.exp(-nu * (x - self.eps))

    def residuals(self) -> tuple[float, float, float]:
        """(value mismatch at eps, slope mismatch at eps, value at 1)."""
        e = self.eps
        return (
            float(abs(self.inner(e) - self.outer(e))),
            float(abs(self.inner_slope(e) - self.outer_slope(e))),
            float(abs(self.outer(1.0))),
        )


def _check_well(nu: float, eps: float):
    if not nu > 1:
        raise DomainError(f"need nu > 1, got {nu}")
    if not 0 < eps < 1:
        raise DomainError(f"need 0 < eps < 1, got {eps}")


def example1_coefficients(nu: float, eps: float) -> Example1Coefficients:
    _check_well(nu, eps)
    q = math.exp(-nu * (1.0 - eps))
    den = 1.0 + q * q
    a = (1.0 + nu * eps * q) / (nu * nu * den)
    b = (eps / nu) * (1.0 - q / (nu * eps)) / den
    gamma = 0.5 * eps * eps + eps / nu + 1.0 / nu**2 - 2.0 * q * (1.0 + nu * eps * q) / (nu * nu * den)
    return Example1Coefficients(nu, eps, a, b, gamma)


def example1_torsion(nu: float, eps: float, x, coeffs: Example1Coefficients | None = None):
    """Even torsion function of the symmetric well, evaluated at x in [-1, 1]."""
    co = coeffs or example1_coefficients(nu, eps)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise DomainError("x outside [-1, 1]")
    y = np.abs(x)
    out = np.where(y <= eps, co.inner(np.minimum(y, eps)), co.outer(np.maximum(y, eps)))
    return float(out) if out.ndim == 0 else out


def example1_mass_split(nu: float, eps: float) -> tuple[float, float]:
    """Exact integrals of the profile over [0, eps] and [eps, 1]."""
    _check_well(nu, eps)
    q = math.exp(-nu * (1.0 - eps))
    den = 1.0 + q * q
    inner = eps**3 / 3 + eps**2 / nu + eps / nu**2 - 2 * eps * q * (1 + nu * eps * q) / (nu**2 * den)
    outer = 1 / nu**2 - 1 / nu**3 - 2 * eps * q * (1 - q / (nu * eps)) / (nu**2 * den)
    return inner, outer


def example1_sup(nu: float, eps: float) -> float:
    return example1_coefficients(nu, eps).gamma


def example1_efficiency(nu: float, eps: float) -> float:
    inner, outer = example1_mass_split(nu, eps)
    return (inner + outer) / example1_coefficients(nu, eps).gamma


def _compare_exponent(alpha_exp, critical) -> int:
    """-1, 0, 1 as alpha_exp is below, at, or above the critical exponent."""
    if isinstance(alpha_exp, Fraction) and isinstance(critical, Fraction):
        return (alpha_exp > critical) - (alpha_exp < critical)
    diff = float(alpha_exp) - float(critical)
    if abs(diff) <= CRITICAL_TOL:
        return 0
    return 1 if diff > 0 else -1


def example1_kappa(alpha_exp, c: float) -> float:
    """Limiting L1 mass fraction of the well family carried by (-eps_n, eps_n), eps_n = c n^-alpha."""
    if not 0 < float(alpha_exp) < 1:
        raise DomainError("exponent must lie in (0, 1)")
    if not c > 0:
        raise DomainError("c must be positive")
    side = _compare_exponent(alpha_exp, Fraction(2, 3))
    if side > 0:
        return 0.0
    if side < 0:
        return 1.0
    t = c**3 / 3.0
    return t / (1.0 + t)


# ---------------------------------------------------------------------------
# n small balls plus one distinguished ball
# ---------------------------------------------------------------------------

def _check_eb1(m, alpha_exp, beta_exp):
    if not (float(beta_exp) > float(alpha_exp) - 1.0 / m >= -CRITICAL_TOL):
        raise DomainError("need beta > alpha - 1/m >= 0")


def example2_radii(n: int, alpha_exp: float, beta_exp: float, c: float) -> tuple[float, float]:
    """(small ball radius n^-alpha, distinguished ball radius c n^-beta)."""
    return float(n) ** (-float(alpha_exp)), c * float(n) ** (-float(beta_exp))


def example2_domain(m: int, n: int, alpha_exp: float, beta_exp: float, c: float) -> BallUnion:
    """n balls of radius n^-alpha and one of radius c n^-beta, centres 2 + c apart on an axis."""
    _check_eb1(m, alpha_exp, beta_exp)
    small, big = example2_radii(n, alpha_exp, beta_exp, c)
    gap = 2.0 + c
    balls = []
    for i in range(n + 1):
        centre = tuple([i * gap] + [0.0] * (m - 1))
        balls.append(Ball(m, big if i == n else small, centre))
    return BallUnion(m, tuple(balls))


def example2_norms(m: int, n: int, alpha_exp, beta_exp, c: float) -> tuple[float, float]:
    """(total L1 norm of the union's torsion, share of the distinguished ball)."""
    _check_eb1(m, alpha_exp, beta_exp)
    rho = torsional_rigidity_constant(m)
    a, b = float(alpha_exp), float(beta_exp)
    big = rho * c ** (m + 2) * float(n) ** (-(m + 2) * b)
    small = rho * float(n) ** (1 - (m + 2) * a)
    return big + small, big


def example2_kappa(m: int, alpha_exp, beta_exp, c: float) -> float:
    _check_eb1(m, alpha_exp, beta_exp)
    crit = (Fraction(alpha_exp) - Fraction(1, m + 2)
            if isinstance(alpha_exp, Fraction) else float(alpha_exp) - 1.0 / (m + 2))
    side = _compare_exponent(beta_exp, crit)
    if side > 0:
        return 0.0
    if side < 0:
        return 1.0
    t = c ** (m + 2)
    return t / (1.0 + t)


def example2_upper_correction(m: int, n: int, alpha_exp, beta_exp, c: float, volume_fraction: float) -> float:
    """Excess over kappa_c allowed for a set of the given volume fraction at the critical exponent."""
    return (m + 2) / 2.0 * volume_fraction * (c**m * float(n) ** (-2.0 / (m + 2)) + 1.0)


# ---------------------------------------------------------------------------
# Boxes
# ---------------------------------------------------------------------------

def box_first_eigen(m: int, sides) -> tuple[float, float]:
    """(lambda1, efficiency of the first eigenfunction) of (0, L_1) x ... x (0, L_m)."""
    sides = tuple(float(s) for s in sides)
    if len(sides) != m or any(s <= 0 for s in sides):
        raise DomainError("box needs m positive sides")
    lam = math.pi**2 * sum(1.0 / s**2 for s in sides)
    return lam, (2.0 / math.pi) ** m


def rectangle_torsion_norms(a: float, b: float, modes: int = 50) -> tuple[float, float]:
    """(L1 norm, sup norm) of the torsion function of (0, a) x (0, b).

    Expands in sin(j pi x / a) for odd j with the exact cosh profile in y;
    ``modes`` odd terms leave an L1 tail below 16 a^4 / (pi^5 4 (2 modes)^4).
    """
    if a > b:
        a, b = b, a
    j = 2 * np.arange(modes) + 1.0
    t = j * math.pi * b / (2 * a)
    l1 = a**3 * b / 12.0 - np.sum(16 * a**4 * np.tanh(t) / (math.pi**5 * j**5))
    sign = np.where(((j - 1) // 2) % 2 == 0, 1.0, -1.0)
    sech = np.where(t < 700, 1.0 / np.cosh(np.minimum(t, 700)), 0.0)
    sup = a * a / 8.0 - np.sum(4 * a * a * sign * sech / (math.pi**3 * j**3))
    return float(l1), float(sup)


def box_torsion_norms(d: Box, modes: int = 50) -> tuple[float, float]:
    if d.m == 1:
        return interval_torsion_norms(Interval(0.0, d.sides[0]))
    if d.m == 2:
        return rectangle_torsion_norms(d.sides[0], d.sides[1], modes)
    raise DomainError("box torsion is only available for m <= 2")
