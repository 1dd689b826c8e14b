import math

import numpy as np
import pytest

from qtmxxz import bethe, classify, nlie, spectrum
from qtmxxz.model import ChainParams

from conftest import ZETA, sector


@pytest.fixture(scope="module")
def grid():
    return nlie.ContourGrid(0.05, n=128, kappa_angle=0.4)


def test_spectral_derivative(grid):
    u = grid.nodes
    assert np.allclose(grid.derivative(u ** 3 + 1 / u), 3 * u ** 2 - 1 / u ** 2, rtol=1e-10)


def test_spectral_antiderivative_is_exact_for_laurent_terms(grid):
    u, k = grid.nodes, grid.kappa
    got = grid.antiderivative(u ** 2 + 1 / u)
    # 1/u integrates to i (phase travelled), single valued pieces to their primitive
    want = (u ** 3 - k ** 3) / 3 + 1j * grid.phases
    assert np.allclose(got, want, atol=1e-13)
    trap = grid.cumulative_trapezoid(u ** 2 + 1 / u)
    assert np.abs(trap - want).max() > 100 * np.abs(got - want).max()


def test_unwrap_log_winding(grid):
    phi = grid.phases
    v = 2.0 * np.exp(3j * phi) * (1 + 0.1 * np.cos(phi))
    L, wind = nlie.unwrap_log(v)
    assert wind == 3
    assert np.allclose(np.exp(L), v)
    assert np.allclose(np.diff(L.imag), np.diff(L.imag)[0], atol=0.05)
    with pytest.raises(ZeroDivisionError):
        nlie.unwrap_log(np.array([1.0, 0.0, 1.0]))


def test_ln_by_integration_agrees_with_unwrap(grid):
    A = 0.8 + 1.0 * grid.nodes / grid.epsilon + 0.3j * (grid.nodes / grid.epsilon) ** 2
    expA = np.exp(A)
    direct, wind = nlie.ln_one_plus_exp(expA, grid)
    integ = nlie.ln_by_integration(A, expA, grid)
    assert wind == 0
    assert np.allclose(direct, integ, atol=1e-11)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_finite_trotter_nlie_matches_dominant_eigenvalue(N):
    p = ChainParams(J=0.5, zeta=ZETA, T=100.0, N=N)
    sol = nlie.solve_nlie(nlie.FixedPointConfig(trotter=N), p)
    lam = spectrum.dominant_eigenvalue_params(p)
    assert nlie.eigenvalue_from_nlie(sol) == pytest.approx(lam, rel=1e-11)
    assert sol.monodromy == 0 and abs(nlie.monodromy_integral(sol)) < 1e-9


@pytest.mark.parametrize("angle", [0.0, 1.1, -2.6])
def test_kappa_independence(angle):
    p = ChainParams(J=0.5, zeta=ZETA, T=50.0, N=4)
    base = nlie.eigenvalue_from_nlie(nlie.solve_nlie(nlie.FixedPointConfig(), p))
    g = nlie.ContourGrid(nlie.default_epsilon(p), kappa_angle=angle)
    assert nlie.eigenvalue_from_nlie(nlie.solve_nlie(nlie.FixedPointConfig(), p, g)) == pytest.approx(base, rel=1e-12)


def test_excited_state_nlie_reproduces_eigenvalue():
    # class members only: outside the class the iteration may settle on another solution
    p, spec, states = sector(4, 4)
    cp = classify.ClassParams.for_temperature(p.T)
    eps = cp.eps_abs(p.zeta)
    done = 0
    for st in states[1:]:
        sets = bethe.detect_sets(st, p, eps)
        if classify.classify_state(st, sets, cp, p.zeta).label != classify.CaseLabel.ClassMemberSolves:
            continue
        sol = nlie.solve_nlie(nlie.FixedPointConfig.from_sets(sets, trotter=4, check_ball=False), p)
        assert nlie.eigenvalue_from_nlie(sol) == pytest.approx(st.eigenvalue, rel=1e-8)
        assert sol.monodromy == sets.expected_monodromy()
        done += 1
        if done == 5:
            return
    pytest.fail(f"only {done} class members found")


def test_monodromy_mismatch():
    p = ChainParams(J=0.5, zeta=ZETA, T=100.0, N=4)
    # a phantom hole shifts the expected monodromy of the dominant solution
    cfg = nlie.FixedPointConfig(X=(0.001,), Y=(), s=0, trotter=4, check_ball=False)
    with pytest.raises(nlie.MonodromyMismatch) as e:
        nlie.solve_nlie(cfg, p)
    assert e.value.expected == 1


def test_lower_bound_violated(grid):
    # s = 1 and no particles: e^{A_inf(kappa)} = -1
    with pytest.raises(nlie.LowerBoundViolated):
        nlie.a_infinity(grid.nodes, (), (), 1, grid.kappa, ZETA, rho=0.1, grid=grid)


def test_trotter_number_guard():
    p = ChainParams(J=0.5, zeta=ZETA, T=1.0, N=2)
    with pytest.raises(ValueError):
        nlie.solve_nlie(nlie.FixedPointConfig(trotter=2), p, nlie.ContourGrid(1e-3))
