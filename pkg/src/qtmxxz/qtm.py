"""Six-vertex R-matrix, quantum monodromy matrix and quantum transfer matrix.

Space ordering: the auxiliary space 0 followed by the 2N quantum sites 1..2N,
site 1 being the most significant bit of a basis index.  Bit 0 is spin up
(sz = +1), bit 1 is spin down.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import ChainParams

N_MAX = 6
L_MAX = 14
MEMORY_BUDGET = 1 << 30  # bytes allowed for a single dense operator


class SingularEta(ValueError):
    pass


class DimensionOverflow(MemoryError):
    pass


def r_matrix(lam: complex, eta: complex) -> np.ndarray:
    """R(lam) = (1/sinh eta) [[sinh(eta+lam),0,0,0],[0,sinh lam,sinh eta,0],[0,sinh eta,sinh lam,0],[0,0,0,sinh(eta+lam)]]."""
    se = np.sinh(complex(eta))
    if abs(se) < 1e-14:
        raise SingularEta(f"|sinh(eta)| = {abs(se):.3g}")
    a = np.sinh(eta + lam) / se
    b = np.sinh(lam) / se
    return np.array([[a, 0, 0, 0], [0, b, 1, 0], [0, 1, b, 0], [0, 0, 0, a]], dtype=complex)


def partial_transpose_first(r: np.ndarray) -> np.ndarray:
    """Transpose a 4x4 two-site operator in its first tensor factor."""
    return r.reshape(2, 2, 2, 2).transpose(2, 1, 0, 3).reshape(4, 4)


def _factors(xi: complex, p: ChainParams):
    """Local factors of the monodromy, in order of application, as (4x4 tensor, axes)."""
    s = p.aleph / p.N
    plain = r_matrix(xi - s, p.eta).reshape(2, 2, 2, 2)
    # R^{t_{2l}}_{2l,0}: first factor is the quantum site, transposed there
    trans = partial_transpose_first(r_matrix(-s - xi, p.eta)).reshape(2, 2, 2, 2)
    out = []
    for ell in range(1, p.N + 1):
        out.append((plain, (0, 2 * ell - 1)))
        out.append((trans, (2 * ell, 0)))
    return out


def _apply_local(Y: np.ndarray, G: np.ndarray, axes: tuple[int, int]) -> np.ndarray:
    Y = np.tensordot(G, Y, axes=([2, 3], list(axes)))
    return np.moveaxis(Y, [0, 1], list(axes))


def _check_N(p: ChainParams) -> None:
    if p.N > N_MAX:
        raise DimensionOverflow(f"N = {p.N} exceeds N_max = {N_MAX}")


def _twist(p: ChainParams) -> np.ndarray:
    return np.exp(np.array([1.0, -1.0]) * p.h / (2 * p.T))


def apply_monodromy(xi: complex, p: ChainParams, Y: np.ndarray) -> np.ndarray:
    """Apply T_q(xi) to a block of vectors on h_0 (x) h_1 ... h_2N, shape (2*4^N, k)."""
    _check_N(p)
    n = 2 * p.N
    k = Y.shape[1]
    Z = Y.astype(complex).reshape((2,) + (2,) * n + (k,))
    Z = Z * _twist(p).reshape((2,) + (1,) * (n + 1))
    for G, ax in _factors(xi, p):
        Z = _apply_local(Z, G, ax)
    return Z.reshape(2 * 4 ** p.N, k)


def apply_qtm(xi: complex, p: ChainParams, X: np.ndarray, chunk: int = 512) -> np.ndarray:
    """t_q(xi) X = tr_0 T_q(xi) X for a block X of shape (4^N, k), matrix free."""
    _check_N(p)
    X = np.asarray(X)
    squeeze = X.ndim == 1
    if squeeze:
        X = X[:, None]
    dim = 4 ** p.N
    out = np.zeros((dim, X.shape[1]), dtype=complex)
    for c0 in range(0, X.shape[1], chunk):
        Xc = X[:, c0:c0 + chunk]
        for a in range(2):
            Y = np.zeros((2 * dim, Xc.shape[1]), dtype=complex)
            Y[a * dim:(a + 1) * dim] = Xc
            out[:, c0:c0 + chunk] += apply_monodromy(xi, p, Y)[a * dim:(a + 1) * dim]
    return out[:, 0] if squeeze else out


def _budget(dim: int) -> None:
    if dim * dim * 16 > MEMORY_BUDGET:
        raise DimensionOverflow(f"dense operator of dimension {dim} exceeds the memory budget")


def monodromy(xi: complex, p: ChainParams) -> np.ndarray:
    """Dense quantum monodromy matrix on h_0 (x) h_q, dimension 2*4^N."""
    _check_N(p)
    dim = 2 * 4 ** p.N
    _budget(dim)
    return apply_monodromy(xi, p, np.eye(dim))


def qtm(xi: complex, p: ChainParams) -> np.ndarray:
    """Dense quantum transfer matrix t_q(xi), dimension 4^N."""
    _check_N(p)
    dim = 4 ** p.N
    _budget(dim)
    return apply_qtm(xi, p, np.eye(dim))


@lru_cache(maxsize=None)
def sector_charge(N: int) -> np.ndarray:
    """Conserved charge m of each basis state: downs on odd sites plus ups on even sites.

    The sector with charge m hosts the eigenstates with m Bethe roots; its size is binomial(2N, m).
    """
    bits = np.array(list(itertools.product((0, 1), repeat=2 * N)), dtype=int)
    m = bits[:, 0::2].sum(axis=1) + (N - bits[:, 1::2].sum(axis=1))
    m.setflags(write=False)
    return m


def sector_indices(N: int, M: int) -> np.ndarray:
    return np.flatnonzero(sector_charge(N) == M)


def qtm_sector(xi: complex, p: ChainParams, M: int) -> np.ndarray:
    """Block of t_q(xi) acting on the sector with M Bethe roots."""
    idx = sector_indices(p.N, M)
    X = np.zeros((4 ** p.N, idx.size))
    X[idx, np.arange(idx.size)] = 1.0
    return apply_qtm(xi, p, X)[idx]


def charge_operator(N: int) -> np.ndarray:
    """Diagonal of the conserved magnetization-type charge on h_q."""
    return sector_charge(N).astype(float)


@dataclass(frozen=True)
class RankOneSplit:
    v: np.ndarray
    w: np.ndarray
    tq: np.ndarray

    @property
    def omega(self) -> np.ndarray:
        return np.outer(self.v, self.w)

    @property
    def delta_tq(self) -> np.ndarray:
        return self.tq - self.omega

    def apply_omega(self, x: np.ndarray) -> np.ndarray:
        return self.v * (self.w @ x)


def rank_one_vectors(p: ChainParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectors v, w of the infinite-temperature rank one part omega = v w^t.

    v = sum_i e^{(h/2T) eps_{i_N}} prod_s e_{i_s}^{(2s)} e_{i_{s-1}}^{(2s-1)} with i_0 = i_N,
    w = sum_j prod_s e_{j_s}^{(2s)} e_{j_s}^{(2s-1)}, eps_1 = +1, eps_2 = -1.
    """
    N = p.N
    dim = 4 ** N
    v = np.zeros(dim)
    w = np.zeros(dim)
    for ii in itertools.product((0, 1), repeat=N):
        # site (2s-1) carries i_{s-1}, site 2s carries i_s
        vbits = []
        wbits = []
        for s in range(1, N + 1):
            vbits += [ii[s - 2] if s > 1 else ii[N - 1], ii[s - 1]]
            wbits += [ii[s - 1], ii[s - 1]]
        vi = int("".join(map(str, vbits)), 2)
        wi = int("".join(map(str, wbits)), 2)
        eps = 1.0 if ii[N - 1] == 0 else -1.0
        v[vi] += math.exp(p.h / (2 * p.T) * eps)
        w[wi] += 1.0
    return v, w


def rank_one_split(p: ChainParams) -> RankOneSplit:
    v, w = rank_one_vectors(p)
    return RankOneSplit(v=v, w=w, tq=qtm(0.0, p))


# ---------------------------------------------------------------- finite chain

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = np.array([1.0, -1.0])


def xxz_hamiltonian(p: ChainParams) -> np.ndarray:
    """Dense periodic XXZ Hamiltonian on L sites (real symmetric)."""
    L = p.L
    if L > L_MAX:
        raise DimensionOverflow(f"L = {L} exceeds L_max = {L_MAX}")
    dim = 2 ** L
    _budget(dim)
    states = np.arange(dim)
    bits = (states[:, None] >> (L - 1 - np.arange(L))[None, :]) & 1
    sz = 1.0 - 2.0 * bits
    diag = np.zeros(dim)
    H = np.zeros((dim, dim))
    for j in range(L):
        k = (j + 1) % L
        diag += p.J * p.delta * (sz[:, j] * sz[:, k] + 1.0)
        # sx sx + sy sy = 2 (s+ s- + s- s+): flips antiparallel neighbours with amplitude 2J
        anti = bits[:, j] != bits[:, k]
        flipped = states ^ ((1 << (L - 1 - j)) | (1 << (L - 1 - k)))
        H[flipped[anti], states[anti]] += 2.0 * p.J
    diag -= 0.5 * p.h * sz.sum(axis=1)
    H[states, states] += diag
    return H


def total_sz(L: int) -> np.ndarray:
    states = np.arange(2 ** L)
    bits = (states[:, None] >> (L - 1 - np.arange(L))[None, :]) & 1
    return (1.0 - 2.0 * bits).sum(axis=1)


def partition_function(p: ChainParams) -> float:
    """tr e^{-H/T} for the L-site chain by dense diagonalization."""
    e = np.linalg.eigvalsh(xxz_hamiltonian(p))
    return float(np.exp(-e / p.T).sum())


def finite_chain_free_energy_over_T(p: ChainParams) -> float:
    """-f_L/T = (1/L) ln tr e^{-H/T}, evaluated stably."""
    e = np.linalg.eigvalsh(xxz_hamiltonian(p))
    x = -e / p.T
    xm = x.max()
    return float((xm + math.log(np.exp(x - xm).sum())) / p.L)
