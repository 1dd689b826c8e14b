import math

import numpy as np
import pytest

from qtmxxz import bethe, classify
from qtmxxz.model import RootMultiset

from conftest import ZETA, sector

Case = classify.CaseLabel


def test_class_params_validation():
    with pytest.raises(ValueError):
        classify.ClassParams(epsilon=-0.1)
    with pytest.raises(ValueError):
        classify.ClassParams(epsilon=0.06, alpha=0.01, strict=True)
    classify.ClassParams(epsilon=0.004, alpha=0.01, strict=True)
    cp = classify.ClassParams.for_temperature(100.0)
    assert (cp.epsilon, cp.rho, cp.alpha, cp.delta) == pytest.approx((0.06, 0.06, 0.01, 0.1))
    assert cp.eps_abs(ZETA) == pytest.approx(0.06 * ZETA)
    assert classify.ClassParams(0.06, zeta_units=False).eps_abs(ZETA) == 0.06


def test_rho_value():
    assert classify.rho_value([], 0, ZETA) == pytest.approx(2.0)
    assert classify.rho_value([], 1, ZETA) == pytest.approx(0.0)
    # a particle at i pi/2 contributes a unimodular factor
    assert classify.rho_value([1j * math.pi / 2], 0, ZETA) <= 2.0


def _sets(X, Y, s=0, eps=0.01):
    return bethe.HoleParticleSets(
        X_hat=RootMultiset.from_points(X, tol=1e-12), Y_hat=RootMultiset.from_points(Y, tol=1e-12),
        Y_sg=RootMultiset([]), roots_inside=RootMultiset([]), s=s, epsilon=eps,
        monodromy=len(X) - len(Y) - s, min_modulus=1.0)


def test_membership_clauses():
    cp = classify.ClassParams.for_temperature(100.0)
    y = np.array([0.577223j, -0.577223j]) * ZETA
    ok = classify.class_membership(_sets([1e-3, -2e-3], y), cp, 0, ZETA)
    assert ok.member and ok.failed == []
    far = classify.class_membership(_sets([0.5, -2e-3], y), cp, 0, ZETA)
    assert 1 in far.failed and not far.member
    near_zero = classify.class_membership(_sets([1e-3, -2e-3], [1e-3 + 0.5j, -0.4j]), cp, 0, ZETA)
    assert 2 in near_zero.failed or 3 in near_zero.failed


def test_n4_sector_counts():
    p, _, states = sector(4, 4)
    res = classify.classify_all(p, 4, states=states)
    c = res.counts
    assert res.size == 70 and sum(c.values()) == 70
    assert c[Case.Diagnostics] == 0
    assert res.states[0].label == Case.EmptyY
    assert c[Case.ClassMemberSolves] > 0
    row = res.table_row()
    assert row["fraction"] == pytest.approx(c[Case.ClassMemberSolves] / 70, abs=1e-3)


def test_member_delta_is_small_for_case4():
    p, _, states = sector(4, 4)
    res = classify.classify_all(p, 4, states=states)
    cp = res.cp
    for sc in res.states:
        if sc.label == Case.ClassMemberSolves:
            assert sc.delta_max < cp.delta and sc.rho_value > cp.rho
        if sc.label == Case.RhoViolation:
            assert not sc.rho_value > cp.rho


def test_unverified_state_goes_to_diagnostics():
    p, _, states = sector(3, 3, T=20.0)
    bad = bethe.BetheState(states[0].roots, 3, 3, eigen_index=0, tau_error=1.0)
    res = classify.classify_all(p, 3, states=[bad])
    assert res.states[0].label == Case.Diagnostics and "unverified" in res.states[0].reason
