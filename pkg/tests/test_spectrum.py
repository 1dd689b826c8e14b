import math

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment
from hypothesis import given, settings, strategies as st

from qtmxxz import qtm, spectrum
from qtmxxz.model import ChainParams

ZETA = math.pi / 7


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=30))
def test_ordering_rule(pairs):
    ev = np.array([complex(a, b) for a, b in pairs])
    perm, clusters = spectrum.order_eigenvalues(ev)
    out = ev[perm]
    assert sorted(perm.tolist()) == list(range(ev.size))
    mod = np.abs(out)
    for i in range(out.size - 1):
        if clusters[i] == clusters[i + 1]:
            assert spectrum.principal_arg(out[i]) <= spectrum.principal_arg(out[i + 1])
        else:
            assert mod[i] > mod[i + 1]


def test_conjugate_pair_order():
    ev = np.array([1j, -1j, 2.0, -2.0])
    perm, _ = spectrum.order_eigenvalues(ev)
    # arg in [-pi, pi): -2 has arg -pi and comes first in its cluster
    assert np.array_equal(ev[perm], [-2.0, 2.0, -1j, 1j])


def test_sector_spectrum_union_is_full_spectrum():
    p = ChainParams(J=1.0, zeta=ZETA, h=0.2, T=3.0, N=3)
    full = np.linalg.eigvals(qtm.qtm(0.0, p))
    parts = spectrum.qtm_spectrum(p).eigenvalues
    cost = np.abs(full[:, None] - parts[None, :])
    r, c = linear_sum_assignment(cost)
    assert cost[r, c].max() < 1e-12
    rec = spectrum.sector_spectrum(p, 3)
    assert len(rec) == math.comb(6, 3) and np.all(rec.sector_labels == 3)
    assert rec.basis.size == len(rec)


def test_full_spectrum_sector_labels():
    p = ChainParams(J=1.0, zeta=ZETA, T=5.0, N=2)
    rec = spectrum.full_spectrum(qtm.qtm(0.0, p))
    assert np.bincount(rec.sector_labels).tolist() == [1, 4, 6, 4, 1]


def test_dominant_eigenvalue_power_iteration():
    p = ChainParams(J=1.0, zeta=ZETA, T=20.0, N=3)
    lam = spectrum.dominant_eigenvalue_params(p)
    ev = spectrum.qtm_spectrum(p).eigenvalues
    assert lam == pytest.approx(ev[0].real, rel=1e-12)
    # the dominant state sits in the M = N sector
    assert spectrum.qtm_spectrum(p).sector_labels[0] == 3


def test_gap_too_small():
    with pytest.raises(spectrum.GapTooSmall):
        spectrum.dominant_eigenvalue(np.diag([1.0, 0.999, 0.1]))


def test_correlation_ratio_and_rows():
    p = ChainParams(J=1.0, zeta=ZETA, T=50.0, N=2)
    rec = spectrum.qtm_spectrum(p)
    assert spectrum.correlation_ratio(rec, 0) == pytest.approx(1.0)
    assert abs(spectrum.correlation_ratio(rec, 1)) < 1
    rows = rec.to_rows()
    assert rows[0]["abs"] >= rows[-1]["abs"] and set(rows[0]) >= {"re", "im", "sector"}


@settings(max_examples=10, deadline=None)
@given(st.floats(0.5, 20.0))
def test_dominant_eigenvalue_real_and_isolated(T):
    p = ChainParams(J=1.0, zeta=ZETA, T=T, N=2)
    ev = spectrum.qtm_spectrum(p).eigenvalues
    assert abs(ev[0].imag) < 1e-12 and ev[0].real > 0
    assert abs(ev[1]) < abs(ev[0])
