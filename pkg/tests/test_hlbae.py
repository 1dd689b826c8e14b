import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtmxxz import bethe, cli, hlbae, nlie
from qtmxxz.model import ChainParams

from conftest import ZETA, sector

# a two-string solution of hlBAE1 with two holes, s = 0
Y2 = np.array([0.577223j, -0.577223j]) * ZETA


def test_hlbae1_two_string():
    sol = hlbae.solve_hlbae1(2, 2, 0, Y2 + 0.01, ZETA)
    assert sol.converged and sol.residual < 1e-10
    assert np.abs(hlbae.delta_residual(sol.y_roots, ZETA, 2)).max() < 1e-10
    assert np.allclose(np.sort(sol.y_roots.imag), np.sort(Y2.imag), atol=1e-6)
    assert sol.admissible(ZETA)


def test_hlbae2_tends_to_hlbae1_as_holes_shrink():
    ref = hlbae.solve_hlbae1(2, 2, 0, Y2, ZETA).y_roots
    dist = []
    for t in (1e-2, 1e-3, 1e-4):
        x = t * np.array([-0.6, 0.9])
        sol = hlbae.solve_hlbae2(x, 2, ref, ZETA)
        assert sol.residual < 1e-10
        dist.append(hlbae._set_distance(sol.y_roots, ref))
    assert dist[0] > dist[1] > dist[2]
    assert dist[2] < 1e-3


def test_newton_divergence_is_reported():
    with pytest.raises((hlbae.NewtonDivergence, hlbae.JacobianSingular)):
        hlbae.solve_hlbae1(2, 2, 0, [0.0, 0.0], ZETA, max_steps=3)
    with pytest.raises(ValueError):
        hlbae.solve_hlbae1(2, 2, 0, [0.1], ZETA)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=1, max_size=4, unique=True), st.sampled_from([100.0, 1000.0]))
def test_hole_integers_invert_asymptotics(k, T):
    p = ChainParams(J=0.5, zeta=ZETA, T=T, N=6)
    x = hlbae.hole_asymptotics(k, Y2, 0, p)
    assert hlbae.hole_integers(x, Y2, 0, p).tolist() == k


def test_resonant_denominator():
    p = ChainParams(J=0.5, zeta=ZETA, T=100.0, N=6)
    # with no particles, (2k + 1 + s) pi vanishes at k = 0, s = -1
    with pytest.raises(hlbae.ResonantDenominator):
        hlbae.hole_asymptotics([0], [], -1, p)


def test_large_t_constraint_clauses():
    rho = 0.06
    with pytest.raises(hlbae.ConstraintViolated) as e:
        hlbae.large_t_constraints([0.3, 0.3 + 1j * ZETA], 2, ZETA, rho)
    assert e.value.clause == 1
    with pytest.raises(hlbae.ConstraintViolated) as e:
        hlbae.large_t_constraints([0.0], 2, ZETA, rho)
    assert e.value.clause in (2, 3)
    hlbae.large_t_constraints(Y2, 2, ZETA, rho)


def test_no_holes_no_particles_gives_one():
    p = ChainParams(J=0.5, zeta=ZETA, T=100.0, N=6)
    assert hlbae.correlation_length_largeT([], [], p) == pytest.approx(1.0)
    with pytest.raises(hlbae.ConstraintViolated):
        hlbae.correlation_length_largeT([1, 1], Y2, p)


def test_sigma_infinity_membership():
    cat = hlbae.build_sigma_infinity(2, 2, 0, ZETA, n_starts=150)
    assert len(cat) >= 1
    sol = hlbae.solve_hlbae1(2, 2, 0, Y2, ZETA)
    assert hlbae.sigma_infinity_distance(sol.y_roots, cat) < 1e-6
    assert hlbae.sigma_infinity_distance(sol.y_roots[::-1], cat) < 1e-6
    for m in cat.members:
        assert hlbae.sigma_infinity_distance(m, cat) == 0.0
        assert np.abs(hlbae.sigma_infinity_residual(m, 2, 0, ZETA)).max() < 1e-8
    with pytest.raises(hlbae.EmptyCatalog):
        hlbae.sigma_infinity_distance(Y2, hlbae.SigmaInfinity(2, 2, 0, ZETA))


@pytest.mark.slow
@pytest.mark.parametrize("table", ["5", "6"])
def test_catalog_contains_tabulated_solutions(table):
    # the strings, quartets and i pi/2 lines of the reference tables are all found by multi-start
    for row in cli.load_reference_values()["tables"][table]["states"]:
        y = np.array([cli._decode(v, ZETA) for v in row["hlbae1"]]) * ZETA
        cat = hlbae.build_sigma_infinity(len(row["X"]), y.size, len(row["X"]) - y.size, ZETA)
        # tabulated to six digits in units of zeta
        assert hlbae.sigma_infinity_distance(y, cat) < 1e-5 * ZETA * y.size, row["label"]


def _formula_vs_trotter_limit(T: float) -> float:
    """Relative gap between the large T formula and the Trotter limit ratio Lambda_1 / Lambda_max."""
    _, _, states = sector(5, 5, T=T)
    p = ChainParams(J=0.5, zeta=ZETA, T=T, N=5)
    g = nlie.ContourGrid(nlie.default_epsilon(p))
    dom = nlie.eigenvalue_from_nlie(nlie.solve_nlie(nlie.FixedPointConfig(), p, g))
    hs = bethe.detect_sets(states[10], p, 0.6 * ZETA / math.sqrt(T))
    X, Y = np.array(hs.X_hat.points()), np.array(hs.Y_hat.points())
    k = hlbae.hole_integers(X, Y, hs.s, p)
    sol, _, Ys = nlie.solve_excited_limit(X, Y, hs.s, p, g)
    ratio = nlie.eigenvalue_from_nlie(sol) / dom
    return abs(hlbae.correlation_length_largeT(k, Ys, p) / ratio - 1)


@pytest.mark.slow
def test_correlation_formula_against_trotter_limit():
    # the formula is the T -> infinity limit of Lambda_k / Lambda_max, so the gap is O(1/T)
    d100, d200 = _formula_vs_trotter_limit(100.0), _formula_vs_trotter_limit(200.0)
    assert d100 < 2e-3
    assert 1.7 < d100 / d200 < 2.3
