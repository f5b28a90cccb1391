"""Finite-difference torsion and first-eigenpair solvers on intervals and radial segments.

All operators are assembled in symmetric form ``K u + W V u = W f`` (or
``= lambda W u``): K is the tridiagonal flux matrix, W the lumped dual-cell
quadrature weights. On an interval this is the classical three-point
Laplacian; in radial coordinates it is the finite-volume form of
-(r^{m-1} u')' / r^{m-1}, whose first row reduces to 2m (u_0 - u_1) / h^2,
i.e. the ghost-node reflection u_{-1} = u_1 at the origin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, eigh_tridiagonal, solve_banded

from .domains import (
    DEFAULT_NODES,
    Annulus,
    Ball,
    Constant,
    DomainError,
    DomainSpec,
    Grid,
    Interval,
    PotentialSpec,
    Zero,
    cell_averaged_potential,
    line_grid,
    radial_grid,
    radial_weights,
    unit_ball_volume,
)

DIRICHLET_ALL = "dirichlet"
DIRICHLET_OUTER_NEUMANN_INNER = "dirichlet-neumann"


class ConvergenceError(RuntimeError):
    """An iterative solve failed to reach its tolerance."""


@dataclass(frozen=True)
class Profile:
    """Non-negative nodal function on a grid, with the domain it lives on."""

    grid: Grid
    values: np.ndarray
    domain: DomainSpec | None = None

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def l1(self) -> float:
        return self.grid.integrate(np.abs(self.values))

    @property
    def l2(self) -> float:
        return float(np.sqrt(self.grid.integrate(self.values**2)))

    @property
    def volume(self) -> float:
        return float(np.sum(self.grid.weights))

    def scaled(self, s: float) -> "Profile":
        return Profile(self.grid, s * self.values, self.domain)

    def dirichlet_energy(self) -> float:
        """Exact Dirichlet integral of the piecewise-linear interpolant."""
        r = self.grid.nodes
        du = np.diff(self.values)
        dr = np.diff(r)
        if self.grid.kind == "line":
            return float(np.sum(du**2 / dr))
        m = self.grid.m
        shells = unit_ball_volume(m) * (r[1:] ** m - r[:-1] ** m)
        return float(np.sum((du / dr) ** 2 * shells))


@dataclass(frozen=True)
class EigenResult:
    lambda1: float
    eigenfunction: Profile
    iterations: int
    residual: float


@dataclass(frozen=True)
class _Operator:
    grid: Grid
    diag: np.ndarray       # K + W V on free nodes
    off: np.ndarray        # super-diagonal of K on free nodes
    weights: np.ndarray    # W on free nodes
    free: np.ndarray       # boolean mask of unknown nodes


def _assemble(grid: Grid, V_nodes: np.ndarray, left_dirichlet: bool, right_dirichlet: bool) -> _Operator:
    r = grid.nodes
    h = np.diff(r)
    if grid.kind == "line":
        flux = 1.0 / h
    else:
        m = grid.m
        mid = 0.5 * (r[1:] + r[:-1])
        flux = m * unit_ball_volume(m) * mid ** (m - 1) / h
    n = r.size
    kdiag = np.zeros(n)
    kdiag[:-1] += flux
    kdiag[1:] += flux
    free = np.ones(n, dtype=bool)
    if left_dirichlet:
        free[0] = False
    if right_dirichlet:
        free[-1] = False
    w = grid.weights
    diag = (kdiag + w * V_nodes)[free]
    off_full = -flux
    # keep couplings between consecutive free nodes only
    pair_free = free[:-1] & free[1:]
    off = off_full[pair_free]
    return _Operator(grid, diag, off, w[free], free)


def _solve_tridiag(diag, off, rhs):
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return solve_banded((1, 1), ab, rhs)


def _radial_potential(V: PotentialSpec, grid: Grid) -> np.ndarray:
    if isinstance(V, Zero):
        return np.zeros_like(grid.nodes)
    if isinstance(V, Constant):
        return np.full_like(grid.nodes, V.c)
    raise DomainError("radial solvers take only zero or constant potentials")


# ---------------------------------------------------------------------------
# Torsion
# ---------------------------------------------------------------------------

def solve_torsion_1d(interval: Interval, potential: PotentialSpec = Zero(),
                     n_nodes: int = DEFAULT_NODES) -> Profile:
    """Solve -v'' + V v = 1 on the interval with v = 0 at both ends."""
    if n_nodes < 16:
        raise ValueError("need at least 16 nodes")
    grid = line_grid(interval.a, interval.b, n_nodes)
    Vn = cell_averaged_potential(potential, grid.nodes)
    op = _assemble(grid, Vn, True, True)
    u = np.zeros(n_nodes)
    u[op.free] = _solve_tridiag(op.diag, op.off, op.weights)
    assert np.all(np.isfinite(u)), "singular torsion system"
    return Profile(grid, u, interval)


def solve_torsion_radial(m: int, domain: Ball | Annulus, potential: PotentialSpec = Zero(),
                         n_nodes: int = DEFAULT_NODES, bc: str = DIRICHLET_ALL) -> Profile:
    """Radial torsion function on a ball (regular at 0) or an annulus.

    On an annulus ``bc`` selects Dirichlet at both spheres or Dirichlet
    outside with zero flux on the inner sphere.
    """
    if n_nodes < 16:
        raise ValueError("need at least 16 nodes")
    if isinstance(domain, Ball):
        grid = radial_grid(m, 0.0, domain.R, n_nodes)
        left = False
    elif isinstance(domain, Annulus):
        grid = radial_grid(m, domain.r_in, domain.r_out, n_nodes)
        left = bc == DIRICHLET_ALL
    else:
        raise DomainError(f"radial torsion needs a ball or an annulus, got {type(domain).__name__}")
    op = _assemble(grid, _radial_potential(potential, grid), left, True)
    u = np.zeros(n_nodes)
    u[op.free] = _solve_tridiag(op.diag, op.off, op.weights)
    return Profile(grid, u, domain)


# ---------------------------------------------------------------------------
# First eigenpair
# ---------------------------------------------------------------------------

def _inverse_iteration(op: _Operator, start: np.ndarray, rtol=1e-11, max_iter=1000):
    """Zero-shift inverse power iteration on W^{-1/2} (K + W V) W^{-1/2}."""
    sw = np.sqrt(op.weights)
    d = op.diag / op.weights
    e = op.off / (sw[:-1] * sw[1:])
    ab = np.zeros((2, d.size))
    ab[0, 1:] = e
    ab[1] = d
    chol = cholesky_banded(ab, lower=False)

    def apply(y):
        out = d * y
        out[:-1] += e * y[1:]
        out[1:] += e * y[:-1]
        return out

    # residual floor set by roundoff in applying S
    floor = 64 * np.finfo(float).eps * float(np.max(np.abs(d)) + 2 * np.max(np.abs(e), initial=0.0))
    y = sw * start
    y /= np.linalg.norm(y)
    lam_old = np.inf
    for it in range(1, max_iter + 1):
        z = cho_solve_banded((chol, False), y)
        y = z / np.linalg.norm(z)
        Sy = apply(y)
        lam = float(y @ Sy)
        res = float(np.linalg.norm(Sy - lam * y))
        if abs(lam - lam_old) <= max(rtol * lam, floor / 4) and res <= max(1e-8 * lam, floor):
            return lam, y / sw, it, res
        lam_old = lam
    raise ConvergenceError(f"inverse iteration stalled after {max_iter} steps (residual {res:.3e})")


def _finish(op: _Operator, lam, u_free, it, res, domain) -> EigenResult:
    u = np.zeros(op.grid.nodes.size)
    u[op.free] = u_free
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    u /= np.sqrt(op.grid.integrate(u**2))
    return EigenResult(lam, Profile(op.grid, u, domain), it, res)


def first_eigenpair_1d(interval: Interval, potential: PotentialSpec = Zero(),
                       n_nodes: int = DEFAULT_NODES) -> EigenResult:
    """Smallest Dirichlet eigenvalue of -d^2/dx^2 + V with positive L2-normalised eigenvector."""
    if n_nodes < 16:
        raise ValueError("need at least 16 nodes")
    grid = line_grid(interval.a, interval.b, n_nodes)
    op = _assemble(grid, cell_averaged_potential(potential, grid.nodes), True, True)
    x = grid.nodes[op.free]
    start = np.sin(np.pi * (x - interval.a) / interval.length)
    lam, u, it, res = _inverse_iteration(op, start)
    return _finish(op, lam, u, it, res, interval)


def _radial_operator(m, domain, bc, n_nodes, potential=Zero()):
    if isinstance(domain, Ball):
        grid = radial_grid(m, 0.0, domain.R, n_nodes)
        op = _assemble(grid, _radial_potential(potential, grid), False, True)
        r = grid.nodes[op.free]
        start = np.cos(0.5 * np.pi * r / domain.R)
        return op, start
    if isinstance(domain, Annulus):
        if bc not in (DIRICHLET_ALL, DIRICHLET_OUTER_NEUMANN_INNER):
            raise DomainError(f"unknown boundary condition {bc!r}")
        grid = radial_grid(m, domain.r_in, domain.r_out, n_nodes)
        left = bc == DIRICHLET_ALL
        op = _assemble(grid, _radial_potential(potential, grid), left, True)
        r = grid.nodes[op.free]
        width = domain.r_out - domain.r_in
        if left:
            start = np.sin(np.pi * (r - domain.r_in) / width)
        else:
            start = np.cos(0.5 * np.pi * (r - domain.r_in) / width)
        return op, start
    raise DomainError(f"radial eigenproblem needs a ball or an annulus, got {type(domain).__name__}")


def first_eigenpair_radial(m: int, domain: Ball | Annulus, bc: str = DIRICHLET_ALL,
                           n_nodes: int = DEFAULT_NODES, potential: PotentialSpec = Zero()) -> EigenResult:
    """First radial eigenpair on a ball, or on an annulus with either boundary condition."""
    if n_nodes < 16:
        raise ValueError("need at least 16 nodes")
    if isinstance(domain, Ball) and bc != DIRICHLET_ALL:
        raise DomainError("the mixed condition needs an annulus")
    op, start = _radial_operator(m, domain, bc, n_nodes, potential)
    lam, u, it, res = _inverse_iteration(op, start)
    return _finish(op, lam, u, it, res, domain)


def lowest_eigenvalues(m: int, domain: Ball | Annulus, bc: str = DIRICHLET_ALL,
                       n_nodes: int = DEFAULT_NODES, k: int = 2) -> np.ndarray:
    """The k smallest eigenvalues of the same discrete operator, by a Sturm-sequence solver."""
    op, _ = _radial_operator(m, domain, bc, n_nodes)
    sw = np.sqrt(op.weights)
    return eigh_tridiagonal(op.diag / op.weights, op.off / (sw[:-1] * sw[1:]),
                            eigvals_only=True, select="i", select_range=(0, k - 1))


def theorem7_profile(m: int, eps: float, n_nodes: int = DEFAULT_NODES) -> tuple[Profile, EigenResult]:
    """Annulus eigenfunction extended by its inner-sphere value, L2-normalised on B_1.

    Solves the first eigenpair on B_1 minus the closed ball B_{1-eps} with zero
    flux on the inner sphere and u = 0 on the outer one, then continues it by
    the constant u(1 - eps) inside B_{1-eps}.
    """
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    ann = Annulus(m, 1.0 - eps, 1.0)
    eig = first_eigenpair_radial(m, ann, DIRICHLET_OUTER_NEUMANN_INNER, n_nodes)
    outer_nodes = eig.eigenfunction.grid.nodes
    h = outer_nodes[1] - outer_nodes[0]
    n_in = max(2, int(round((1.0 - eps) / h)) + 1)
    inner_nodes = np.linspace(0.0, 1.0 - eps, n_in)[:-1]
    nodes = np.concatenate((inner_nodes, outer_nodes))
    c_eps = eig.eigenfunction.values[0]
    values = np.concatenate((np.full(inner_nodes.size, c_eps), eig.eigenfunction.values))
    grid = Grid("radial", nodes, radial_weights(nodes, m), m, {"r_plateau": 1.0 - eps})
    values = values / np.sqrt(grid.integrate(values**2))
    return Profile(grid, values, Ball(m, 1.0)), eig
