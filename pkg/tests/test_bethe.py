import math

import numpy as np
import pytest

from qtmxxz import bethe
from qtmxxz.model import ChainParams, RootMultiset

from conftest import ZETA, sector


def test_dominant_state_is_verified():
    p, spec, states = sector(4, 4)
    st = states[0]
    assert st.eigen_index == 0 and st.verified and st.admissible
    assert bethe.bae_residual(st.roots, p).max() < 1e-10
    assert bethe.tau(0.0, st.roots, p) == pytest.approx(spec.eigenvalues[0], rel=1e-10)


def test_full_n4_sector_is_verified():
    p, spec, states = sector(4, 4)
    assert len(states) == math.comb(8, 4) == 70
    assert all(st.verified for st in states)
    assert sorted(st.eigen_index for st in states) == list(range(70))


def test_aux_function_is_minus_one_at_roots():
    p, _, states = sector(3, 3, T=20.0)
    for st in states:
        if st.residual < 1e-10:
            assert np.allclose(bethe.aux_function(st.root_array(), st.roots, p), -1.0, atol=1e-9)


def test_log_aux_derivative_matches_finite_difference():
    p, _, states = sector(3, 3, T=20.0)
    lam = states[0].root_array()
    xi, h = 0.07 + 0.02j, 1e-6
    fd = (np.log(bethe.aux_function(xi + h, lam, p)) - np.log(bethe.aux_function(xi - h, lam, p))) / (2 * h)
    assert bethe.log_aux_derivative(xi, lam, p) == pytest.approx(fd, rel=1e-7)


def test_polish_recovers_perturbed_roots():
    p, _, states = sector(3, 3, T=20.0)
    lam = states[0].root_array()
    new, res, ok = bethe.polish_roots(lam + 1e-5 * (1 + 1j), p)
    assert ok and res < 1e-10
    assert np.allclose(np.sort_complex(new), np.sort_complex(lam), atol=1e-9)


def test_tau_is_regular_at_a_root():
    # the poles of the two terms cancel at a genuine Bethe root
    p, _, states = sector(3, 3, T=20.0)
    lam = states[0].root_array()
    z = lam[0]
    near = bethe.tau(z + 1e-3, lam, p)
    assert bethe.tau(z, lam, p) == pytest.approx(near, rel=1e-2)


def test_dominant_state_has_no_holes_and_zero_monodromy():
    p, _, states = sector(4, 4)
    sets = bethe.detect_sets(states[0], p, epsilon=0.6 * ZETA / math.sqrt(p.T))
    assert sets.X_hat.cardinality == 0 and sets.Y_hat.cardinality == 0
    assert sets.monodromy == sets.expected_monodromy() == 0
    assert "MonodromyMismatch" not in sets.flags


def test_detected_holes_solve_the_bae():
    p, _, states = sector(4, 4)
    eps = 0.6 * ZETA / math.sqrt(p.T)
    seen = 0
    for st in states[1:20]:
        try:
            sets = bethe.detect_sets(st, p, eps)
        except bethe.ContourThroughZero:
            continue
        assert sets.monodromy == sets.expected_monodromy()
        for x in sets.X_hat.points():
            assert abs(x) < eps
            assert abs(1 + bethe.aux_function(x, st.roots, p)) < 1e-6
            seen += 1
    assert seen > 0


def test_admissibility_flags_singular_pair():
    p = ChainParams(J=0.5, zeta=ZETA, T=100.0, N=4)
    y = 0.3 + 0.1j
    st = bethe.BetheState(RootMultiset.from_points([y, y + 1j * ZETA, -0.5], tol=0.0), 3, 4)
    assert not bethe.check_admissibility(st, p)
    assert "SingularPair" in st.flags


def test_admissibility_flags_coinciding_roots():
    p = ChainParams(J=0.5, zeta=ZETA, T=100.0, N=4)
    st = bethe.BetheState(RootMultiset([(0.3, 1), (0.3 + 1e-9, 1)], tol=0.0), 2, 4)
    assert not bethe.check_admissibility(st, p)
    assert "MultiplicityDetected" in st.flags


def test_newton_identities():
    r = np.array([0.5, -1.0 + 0.2j, 2.0])
    psums = np.array([np.sum(r ** k) for k in (1, 2, 3)])
    assert np.allclose(np.sort_complex(np.roots(bethe._newton_identities(psums))), np.sort_complex(r))


def test_state_dict_round_trip_units():
    p, _, states = sector(3, 3, T=20.0)
    d = states[0].to_dict(zeta=ZETA)
    back = np.array([complex(a, b) * ZETA for a, b in d["roots"]])
    assert np.allclose(back, states[0].root_array())


@pytest.mark.parametrize("N", [4, 6])
def test_cluster_seeds_give_dominant_state_at_high_temperature(N):
    from qtmxxz import spectrum
    p = ChainParams(J=0.5, zeta=ZETA, T=1000.0, N=N)
    (seeds,) = bethe.cluster_seeds(np.array([], dtype=complex), N, p)
    new, res, ok = bethe.polish_roots(seeds, p)
    assert ok and res < 1e-10
    assert np.abs(new.imag).max() < 1e-12
    assert bethe.tau(0.0, new, p) == pytest.approx(spectrum.dominant_eigenvalue_params(p), rel=1e-10)
