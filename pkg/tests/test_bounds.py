import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionkit import bounds as bd
from torsionkit import obstacle as ob
from torsionkit.domains import Annulus, Ball, Box, Constant, DomainError, Interval, SymmetricWell, Zero
from torsionkit.solver import solve_torsion_radial


def test_report_relations():
    assert bd.BoundReport("x", 1.0, 2.0, bd.LE).slack == 1.0
    assert bd.BoundReport("x", 1.0, 2.0, bd.GE).slack == -1.0
    assert not bd.BoundReport("x", 1.0, 2.0, bd.GE).satisfied
    r = bd.BoundReport("x", 1.5, 2.0, bd.IN, lower=1.0)
    assert r.slack == 0.5 and r.satisfied
    # within tolerance still counts
    assert bd.BoundReport("x", 1.0, 1.0 + 5e-7, bd.GE).satisfied
    # a failed hypothesis makes the statement vacuous
    assert bd.BoundReport("x", 0.0, 1.0, bd.GE, hypothesis=False).satisfied
    with pytest.raises(ValueError):
        bd.BoundReport("x", 0.0, 1.0, "==")


def test_lemma1_interval():
    r = bd.check_lemma1(Interval(0, 1))
    # lambda1 ||v|| = pi^2 / 8 on any interval
    assert r.lhs == pytest.approx(math.pi**2 / 8, rel=1e-6)
    assert r.rhs == pytest.approx(4 + 3 * math.log(2))
    assert r.satisfied


def test_lemma1_scale_free():
    a = bd.check_lemma1(Ball(3, 1.0)).lhs
    b = bd.check_lemma1(Ball(3, 5.0)).lhs
    assert a == pytest.approx(b, rel=1e-6)


def test_lemma2_factor_direct_formula():
    m, c, lam = 2, 3.0, 10.0
    direct = 2 ** (-2 * (3 * m + 4) * c / lam) * lam / (8 * c + lam) * (8 * c / (8 * c + lam)) ** (8 * c / lam)
    assert bd.lemma2_factor(m, c, lam) == pytest.approx(direct, rel=1e-13)
    assert bd.lemma2_factor(m, 0.0, lam) == 1.0
    assert bd.lemma2_time(m, 0.0, lam) == math.inf
    with pytest.raises(ValueError):
        bd.lemma2_factor(m, -1.0, lam)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.floats(0.0, 1e8), st.floats(1e-3, 1e6), st.floats(1.0, 4.0))
def test_lemma2_factor_in_unit_interval_and_decreasing(m, c, lam, k):
    f1 = bd.lemma2_factor(m, c, lam)
    f2 = bd.lemma2_factor(m, c * k, lam)
    assert 0.0 <= f1 <= 1.0
    assert f2 <= f1 * (1 + 1e-12)


@pytest.mark.parametrize("d,c", [(Interval(0, 1), 5.0), (Ball(2, 1.0), 2.0), (Annulus(3, 0.3, 1.0), 8.0)])
def test_thm1_constant_holds(d, c):
    reps = bd.check_thm1_constant(d, c, 1025)
    assert {r.name for r in reps} == {"thm1-upper", "thm1-lower", "thm1-nodewise"}
    assert all(r.satisfied for r in reps)


def test_thm1_eta_flags_hypothesis():
    fam = [(Interval(-1, 1), SymmetricWell(30.0, 0.1))]
    reps = bd.check_thm1_eta(fam, 1.0, 1025)
    assert all(not r.hypothesis and r.note for r in reps)
    assert all(r.satisfied for r in reps)
    good = bd.check_thm1_eta([(Interval(0, 1), Constant(1.0))], 1.0, 1025)
    assert all(r.hypothesis and r.satisfied for r in good)


def test_eta_sandwich_at_zero():
    assert bd.eta_sandwich(3, 0.0) == pytest.approx(math.e)


def test_e50_tightens_with_c():
    lows = [bd.e50_rhs(Interval(0, 1), c) for c in (1e2, 1e4, 1e6)]
    assert lows[0] < lows[1] < lows[2] < 1
    for c in (1e2, 1e4):
        assert all(r.satisfied for r in bd.check_e50(Ball(2, 1.0), c, 2049))


def test_k_m_positive_and_undefined_below_two():
    assert all(bd.k_m(m) > 0 for m in range(2, 9))
    with pytest.raises(DomainError):
        bd.k_m(1)


def test_thm9_on_disc():
    reps = {r.name: r for r in bd.check_thm9(Ball(2, 1.0), 2049)}
    # disc torsion: sup 1/4 and Phi = 1/2 give equality-free a-bound 1/4 <= 1/2
    assert reps["p22a"].lhs == pytest.approx(0.25)
    assert reps["p22a"].rhs == pytest.approx(0.5)
    assert all(r.satisfied for r in reps.values())
    with pytest.raises(DomainError):
        bd.check_thm9(Interval(0, 1))


@pytest.mark.parametrize("m", [2, 3, 4, 6])
def test_raw_p22_equality_on_ball_torsion(m):
    v = solve_torsion_radial(m, Ball(m, 1.0), Zero(), 2049)
    r = bd.check_raw_p22(Ball(m, 1.0), v)
    assert r.lhs == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3), st.sampled_from([0.2, 0.5, 0.8]))
def test_raw_p22_scale_invariant(s, l):
    sol = ob.obstacle_solution(3, l, 513)
    a = bd.check_raw_p22(Ball(3, 1.0), sol.profile)
    b = bd.check_raw_p22(Ball(3, 1.0), sol.profile.scaled(s))
    assert b.lhs == pytest.approx(a.lhs, rel=1e-10)
    assert a.satisfied and b.satisfied


def test_raw_p22_vacuous_below_hypothesis():
    # a profile concentrated near the centre has mean/sup below 2/(m+2)
    v = solve_torsion_radial(2, Ball(2, 1.0), Zero(), 513)
    peaked = type(v)(v.grid, v.values**6, v.domain)
    r = bd.check_raw_p22(Ball(2, 1.0), peaked)
    assert not r.hypothesis and r.satisfied


def test_e70_and_remark0():
    assert bd.check_e70(Ball(3, 1.0)).slack == pytest.approx(0.4 - 2 / 15)
    with pytest.raises(DomainError):
        bd.check_e70(Annulus(2, 0.5, 1.0))
    r = bd.check_remark0(Box(2, (1.0, 3.0)))
    assert r.satisfied and r.rhs > 0


def test_remark2_growth():
    reps = bd.check_remark2([1, 2, 4, 8], 2)
    names = [r.name for r in reps]
    assert names.count("remark2-E") == 4 and names.count("remark2-E-growth") == 3
    assert all(r.satisfied for r in reps)
    e_vals = [r.lhs for r in reps if r.name == "remark2-E"]
    assert np.all(np.diff(e_vals) > 0)


def test_e68():
    r = bd.check_e68(Interval(0, 1))
    assert r.rhs == pytest.approx(8 / math.pi**2, rel=1e-6)
    assert r.lhs == pytest.approx((4 + 3 * math.log(2)) * 2 / 3, rel=1e-6)


def test_standard_battery():
    reps, elapsed = bd.run_battery()
    assert len(reps) >= 40
    assert all(r.satisfied for r in reps), [r for r in reps if not r.satisfied]
    assert elapsed < 60
    text = bd.reports_to_csv(reps)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == bd.CSV_HEADER
    assert len(rows) == len(reps) + 1
    for row in rows[1:]:
        json.loads(row[1])
        assert row[5] in ("true", "false")
    # deterministic output
    assert bd.reports_to_csv(bd.standard_battery()) == text
