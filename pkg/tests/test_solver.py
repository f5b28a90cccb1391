import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.special import j0, j1, y0, y1

from oracles import interval_torsion_const, j0_first_zero
from torsionkit import closed_form as cf
from torsionkit.domains import Annulus, Ball, Constant, DomainError, Interval, SymmetricWell, Zero
from torsionkit.solver import (
    DIRICHLET_ALL,
    DIRICHLET_OUTER_NEUMANN_INNER,
    ConvergenceError,
    _inverse_iteration,
    _radial_operator,
    first_eigenpair_1d,
    first_eigenpair_radial,
    lowest_eigenvalues,
    solve_torsion_1d,
    solve_torsion_radial,
    theorem7_profile,
)


def annulus_dirichlet_root(a):
    f = lambda k: j0(k * a) * y0(k) - y0(k * a) * j0(k)
    lo = math.pi / (1 - a) * 0.5
    ks = np.linspace(lo, 3 * math.pi / (1 - a), 2000)
    vals = f(ks)
    i = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    return brentq(f, ks[i], ks[i + 1], xtol=1e-15)


def annulus_mixed_root(a):
    # u = J0(kr) Y0(k) - Y0(kr) J0(k) vanishes at r = 1; need u'(a) = 0
    f = lambda k: j1(k * a) * y0(k) - y1(k * a) * j0(k)
    ks = np.linspace(0.05, 2 * math.pi / (1 - a), 4000)
    vals = f(ks)
    i = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    return brentq(f, ks[i], ks[i + 1], xtol=1e-15)


def test_interval_torsion_exact_at_nodes():
    v = solve_torsion_1d(Interval(0.0, 2.0), Zero(), 33)
    assert np.max(np.abs(v.values - v.grid.nodes * (2 - v.grid.nodes) / 2)) < 1e-13
    assert v.l1 == pytest.approx(8 / 12, rel=2e-3)


def test_interval_constant_potential_second_order():
    errs = []
    for n in (257, 513, 1025):
        v = solve_torsion_1d(Interval(-1.0, 1.0), Constant(50.0), n)
        errs.append(np.max(np.abs(v.values - interval_torsion_const(-1, 1, 50.0, v.grid.nodes))))
    assert 3.6 < errs[0] / errs[1] < 4.4
    assert 3.6 < errs[1] / errs[2] < 4.4


def test_well_torsion_converges_across_the_jump():
    nu, eps = 20.0, 0.2
    errs = []
    for n in (501, 1001, 2001):
        v = solve_torsion_1d(Interval(-1.0, 1.0), SymmetricWell(nu, eps), n)
        errs.append(np.max(np.abs(v.values - cf.example1_torsion(nu, eps, v.grid.nodes))))
    assert errs[2] < errs[1] < errs[0]
    assert errs[1] / errs[2] > 3.0


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_ball_torsion_exact_at_nodes(m):
    # the finite-volume fluxes reproduce the quadratic profile exactly
    v = solve_torsion_radial(m, Ball(m, 1.0), Zero(), 257)
    assert np.max(np.abs(v.values - cf.ball_torsion(m, 1.0, v.grid.nodes))) < 1e-12


def test_ball_constant_potential_second_order():
    errs = []
    for n in (257, 513, 1025):
        v = solve_torsion_radial(2, Ball(2, 1.0), Constant(40.0), n)
        errs.append(np.max(np.abs(v.values - cf.ball_torsion_constant_potential(2, 1.0, 40.0, v.grid.nodes))))
    assert 3.5 < errs[0] / errs[1] < 4.5
    assert 3.5 < errs[1] / errs[2] < 4.5


def test_ball_constant_potential():
    v = solve_torsion_radial(3, Ball(3, 1.0), Constant(10.0), 2049)
    exact = cf.ball_torsion_constant_potential(3, 1.0, 10.0, v.grid.nodes)
    assert np.max(np.abs(v.values - exact)) < 1e-6


def test_annulus_torsion_both_conditions():
    a = 0.5
    v = solve_torsion_radial(2, Annulus(2, a, 1.0), Zero(), 2049)
    r = v.grid.nodes
    exact = (1 - r**2) / 4 + (1 - a * a) / 4 * np.log(r) / math.log(1 / a)
    assert np.max(np.abs(v.values - exact)) < 1e-7
    w = solve_torsion_radial(2, Annulus(2, a, 1.0), Zero(), 2049, DIRICHLET_OUTER_NEUMANN_INNER)
    exact = (1 - r**2) / 4 + a * a / 2 * np.log(r)
    assert np.max(np.abs(w.values - exact)) < 1e-6


def test_torsion_energy_equals_l1():
    # testing the equation against v itself: int |v'|^2 = int v
    v = solve_torsion_radial(2, Ball(2, 1.0), Zero(), 2049)
    assert v.dirichlet_energy() == pytest.approx(v.l1, rel=1e-5)


def test_small_grids_rejected():
    with pytest.raises(ValueError):
        solve_torsion_1d(Interval(0, 1), Zero(), 8)
    with pytest.raises(DomainError):
        solve_torsion_radial(2, Ball(2, 1.0), SymmetricWell(3.0, 0.5), 64)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 200.0), st.floats(0.0, 200.0))
def test_torsion_monotone_in_potential(c1, c2):
    lo, hi = sorted((c1, c2))
    d = Interval(0.0, 1.0)
    v_lo = solve_torsion_1d(d, Constant(lo), 129).values
    v_hi = solve_torsion_1d(d, Constant(hi), 129).values
    assert np.all(v_hi <= v_lo + 1e-15)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10.0))
def test_torsion_scales_with_length_squared(L):
    v1 = solve_torsion_1d(Interval(0.0, 1.0), Zero(), 65)
    vL = solve_torsion_1d(Interval(0.0, L), Zero(), 65)
    assert vL.sup == pytest.approx(L * L * v1.sup, rel=1e-10)


# eigenvalues -------------------------------------------------------------------

def test_interval_eigenpair():
    e = first_eigenpair_1d(Interval(0.0, 1.0), Constant(3.0), 4097)
    assert e.lambda1 == pytest.approx(math.pi**2 + 3.0, abs=1e-5)
    phi = e.eigenfunction
    assert phi.l2 == pytest.approx(1.0, rel=1e-12)
    assert np.all(phi.values >= 0)
    exact = math.sqrt(2) * np.sin(math.pi * phi.grid.nodes)
    assert np.max(np.abs(phi.values - exact)) < 1e-5


def test_disc_against_bessel_zero():
    e = first_eigenpair_radial(2, Ball(2, 1.0), n_nodes=4096)
    assert e.lambda1 == pytest.approx(j0_first_zero() ** 2, abs=1e-5)
    assert e.residual < 1e-6


@pytest.mark.parametrize("m,lam", [(1, math.pi**2 / 4), (3, math.pi**2)])
def test_ball_eigenvalues(m, lam):
    assert first_eigenpair_radial(m, Ball(m, 1.0), n_nodes=4096).lambda1 == pytest.approx(lam, rel=1e-6)


def test_ball_constant_potential_shifts_spectrum():
    base = first_eigenpair_radial(3, Ball(3, 1.0), n_nodes=1025).lambda1
    shifted = first_eigenpair_radial(3, Ball(3, 1.0), n_nodes=1025, potential=Constant(7.0)).lambda1
    assert shifted - base == pytest.approx(7.0, abs=1e-9)


@pytest.mark.parametrize("a", [0.3, 0.6, 0.9])
def test_annulus_eigenvalues_against_bessel_oracle(a):
    k = annulus_dirichlet_root(a)
    e = first_eigenpair_radial(2, Annulus(2, a, 1.0), DIRICHLET_ALL, 4096)
    assert e.lambda1 == pytest.approx(k * k, rel=1e-6)
    k = annulus_mixed_root(a)
    e = first_eigenpair_radial(2, Annulus(2, a, 1.0), DIRICHLET_OUTER_NEUMANN_INNER, 4096)
    assert e.lambda1 == pytest.approx(k * k, rel=1e-6)


def test_lowest_eigenvalues_agree_with_inverse_iteration():
    d = Annulus(2, 0.5, 1.0)
    lam = lowest_eigenvalues(2, d, DIRICHLET_OUTER_NEUMANN_INNER, 1025)
    e = first_eigenpair_radial(2, d, DIRICHLET_OUTER_NEUMANN_INNER, 1025)
    assert lam[0] == pytest.approx(e.lambda1, rel=1e-10)
    assert lam[1] > lam[0]


def test_mixed_condition_needs_annulus():
    with pytest.raises(DomainError):
        first_eigenpair_radial(2, Ball(2, 1.0), DIRICHLET_OUTER_NEUMANN_INNER, 64)


def test_iteration_cap_raises():
    op, start = _radial_operator(2, Ball(2, 1.0), DIRICHLET_ALL, 512)
    with pytest.raises(ConvergenceError):
        _inverse_iteration(op, np.ones_like(start), max_iter=1)


# annulus-extended profiles ---------------------------------------------------------

@pytest.mark.parametrize("eps", [0.4, 0.1])
def test_theorem7_profile_invariants(eps):
    prof, eig = theorem7_profile(2, eps, 1025)
    r = prof.grid.nodes
    inner = r <= 1 - eps
    assert prof.values[-1] == 0
    assert np.ptp(prof.values[inner]) == 0
    assert np.all(prof.values >= 0)
    assert prof.l2 == pytest.approx(1.0, rel=1e-12)
    assert np.all(np.diff(r) > 0)
    assert prof.grid.meta["r_plateau"] == pytest.approx(1 - eps)
    # the profile is non-increasing in r
    assert np.all(np.diff(prof.values) <= 1e-14)


def test_theorem7_bad_eps():
    with pytest.raises(DomainError):
        theorem7_profile(2, 1.0, 64)
