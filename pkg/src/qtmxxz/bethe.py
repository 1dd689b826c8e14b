"""Bethe roots of quantum transfer matrix eigenstates.

Roots are read off Baxter's TQ relation
    Lambda(xi) Q(xi) = A(xi) Q(xi + i zeta) + D(xi) Q(xi - i zeta),
with A, D the vacuum coefficients of the eigenvalue formula, and then polished on
the Bethe equations  a_hat(lambda_a) = -1.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import qtm as _qtm
from .model import ChainParams, RootMultiset, reduce_mod_ipi, same_mod_ipi
from .spectrum import SpectrumRecord, sector_spectrum

SNAP_TOL = 1e-8
COALESCE_TOL = 1e-7
BAE_TOL = 1e-10
RADII = (0.3, 0.2, 0.45)
TAU_TOL = 1e-6
# |Lambda| below this fraction of the largest modulus cannot be checked at relative
# TAU_TOL against a double precision eigensolver; such states are validated off zero
PRECISION_FLOOR = 1e-8
# roots closer than this to xi = 0 make tau(0) a cancelling limit
ORIGIN_TOL = 1e-4
# local polish leaving a larger BAE residual triggers an unrestricted, validated one
WIDE_POLISH_ABOVE = 1e-8


class IllConditionedTQ(RuntimeError):
    pass


class ContourThroughZero(RuntimeError):
    pass


@dataclass
class BetheState:
    roots: RootMultiset
    M: int
    N: int
    eigen_index: int = -1
    eigenvalue: complex = complex("nan")
    residual: float = float("inf")
    admissible: bool = True
    tau_error: float = float("nan")
    tq_cond: float = float("nan")
    tau_check_error: float = float("nan")
    flags: list[str] = field(default_factory=list)

    @property
    def s(self) -> int:
        return self.N - self.M

    @property
    def verified(self) -> bool:
        """tau reproduces the eigenvalue: at xi = 0, or off zero for states below precision,
        for singular pairs and for roots at the origin, where tau(0) is a cancelling limit."""
        if self.tau_error <= TAU_TOL:
            return True
        off_zero = any(f in self.flags for f in ("BelowPrecision", "SingularPair", "RootNearOrigin"))
        return off_zero and self.tau_check_error <= TAU_TOL

    def root_array(self) -> np.ndarray:
        return np.array(self.roots.points(), dtype=complex)

    def to_dict(self, zeta: float | None = None) -> dict:
        sc = 1.0 if zeta is None else 1.0 / zeta
        return dict(index=self.eigen_index, sector=self.M, spin=self.s,
                    eigenvalue=[self.eigenvalue.real, self.eigenvalue.imag],
                    roots=[[r.real * sc, r.imag * sc] for r in self.root_array()],
                    residual=self.residual, tau_error=self.tau_error,
                    tau_check_error=self.tau_check_error, flags=list(self.flags))


# ---------------------------------------------------------------- closed forms

def vacuum_coefficients(xi, p: ChainParams):
    """A(xi), D(xi) of the TQ relation, including (-1)^N and the field factors."""
    xi = np.asarray(xi, dtype=complex)
    a = p.aleph / p.N
    iz = 1j * p.zeta
    den = np.sinh(-iz) ** 2
    A = (np.sinh(xi + a) * np.sinh(xi - a - iz) / den) ** p.N
    D = (np.sinh(xi + a + iz) * np.sinh(xi - a) / den) ** p.N
    sg = (-1) ** p.N
    return sg * math.exp(p.h / (2 * p.T)) * A, sg * math.exp(-p.h / (2 * p.T)) * D


def _tau_direct(xi: complex, lam: np.ndarray, p: ChainParams) -> complex:
    A, D = vacuum_coefficients(xi, p)
    iz = 1j * p.zeta
    d = np.sinh(xi - lam)
    return complex(A * np.prod(np.sinh(xi - lam + iz) / d) + D * np.prod(np.sinh(xi - lam - iz) / d))


def tau(xi: complex, roots, p: ChainParams, near: float = 1e-9) -> complex:
    """Eigenvalue formula tau(xi | roots).

    Near a root the two simple poles cancel for genuine Bethe roots; there the value is
    taken as the mean over a small circle, exact for the analytic continuation up to O(r^8).
    """
    lam = _as_roots(roots)
    xi = complex(xi)
    if lam.size == 0 or np.min(np.abs(np.sinh(xi - lam))) >= near:
        return _tau_direct(xi, lam, p)
    dist = np.abs(np.sinh(xi - lam))
    others = dist[dist >= near]
    r = 1e-4 if others.size == 0 else min(1e-4, 0.25 * others.min())
    pts = xi + r * np.exp(2j * np.pi * (np.arange(8) + 0.5) / 8)
    return complex(np.mean([_tau_direct(z, lam, p) for z in pts]))


def aux_function(xi, roots, p: ChainParams, M: int | None = None):
    """a_hat(xi) = e^{-h/T} (-1)^s prod_k sinh(i zeta - xi + l_k)/sinh(i zeta + xi - l_k)
    * [sinh(xi - aleph/N) sinh(i zeta + xi + aleph/N) / (sinh(xi + aleph/N) sinh(i zeta - xi + aleph/N))]^N."""
    lam = _as_roots(roots)
    M = lam.size if M is None else M
    xi = np.asarray(xi, dtype=complex)
    a = p.aleph / p.N
    iz = 1j * p.zeta
    s = p.N - M
    x = xi[..., None]
    bethe = np.prod(np.sinh(iz - x + lam) / np.sinh(iz + x - lam), axis=-1)
    drive = (np.sinh(xi - a) * np.sinh(iz + xi + a) / (np.sinh(xi + a) * np.sinh(iz - xi + a))) ** p.N
    out = math.exp(-p.h / p.T) * (-1) ** s * bethe * drive
    return out if out.ndim else complex(out)


def log_aux_derivative(xi, roots, p: ChainParams):
    """d/dxi ln a_hat(xi)."""
    lam = _as_roots(roots)
    xi = np.asarray(xi, dtype=complex)
    a = p.aleph / p.N
    iz = 1j * p.zeta
    x = xi[..., None]
    coth = lambda z: 1.0 / np.tanh(z)
    bethe = np.sum(-coth(iz - x + lam) - coth(iz + x - lam), axis=-1)
    drive = p.N * (coth(xi - a) + coth(iz + xi + a) - coth(xi + a) + coth(iz - xi + a))
    out = bethe + drive
    return out if out.ndim else complex(out)


def bae_residual(roots, p: ChainParams, M: int | None = None) -> np.ndarray:
    """|1 + a_hat(lambda_a)| for every root."""
    lam = _as_roots(roots)
    if lam.size == 0:
        return np.zeros(0)
    return np.abs(1.0 + aux_function(lam, lam, p, M))


def _as_roots(roots) -> np.ndarray:
    if isinstance(roots, RootMultiset):
        return np.array(roots.points(), dtype=complex)
    if isinstance(roots, BetheState):
        return roots.root_array()
    return np.asarray(roots, dtype=complex).ravel()


# ---------------------------------------------------------------- Newton on the BAE

def polish_roots(lam: np.ndarray, p: ChainParams, tol: float = BAE_TOL, max_iter: int = 50,
                 max_move: float | None = None) -> tuple[np.ndarray, float, bool]:
    """Newton iteration on G_a = ln(-a_hat(lambda_a)) with analytic Jacobian.

    Returns (roots, max residual |1 + a_hat|, converged).  A step is accepted only if it
    lowers the residual; the iteration stops otherwise.
    """
    # trial steps far from a solution overflow sinh; those steps are rejected anyway
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _polish(lam, p, tol, max_iter, max_move)


def _polish(lam, p, tol, max_iter, max_move):
    lam = np.array(lam, dtype=complex)
    M = lam.size
    if M == 0:
        return lam, 0.0, True
    a = p.aleph / p.N
    iz = 1j * p.zeta
    coth = lambda z: 1.0 / np.tanh(z)
    start = lam.copy()
    res = bae_residual(lam, p).max()
    for _ in range(max_iter):
        if res <= tol:
            return lam, res, True
        G = np.log(-aux_function(lam, lam, p))
        D = lam[:, None] - lam[None, :]
        C = coth(iz - D) + coth(iz + D)
        np.fill_diagonal(C, 0.0)
        jac = C.copy()
        diag = -C.sum(axis=1) + p.N * (coth(lam - a) + coth(iz + lam + a) - coth(lam + a) + coth(iz - lam + a))
        jac[np.diag_indices(M)] = diag
        try:
            step = np.linalg.solve(jac, G)
        except np.linalg.LinAlgError:
            return lam, res, False
        if not np.all(np.isfinite(step)):
            return lam, res, False
        t = 1.0
        while t > 1e-3:
            trial = lam - t * step
            r_new = bae_residual(trial, p).max()
            if np.isfinite(r_new) and r_new < res:
                break
            t *= 0.5
        else:
            return lam, res, False
        if max_move is not None and np.max(np.abs(trial - start)) > max_move:
            return lam, res, False
        lam, res = trial, r_new
    return lam, res, res <= tol


def dominant_seeds(p: ChainParams) -> np.ndarray:
    """High-temperature seeds: z - aleph/N = (z + aleph/N) e^{i psi}, psi = (2p-1) pi / N."""
    a = p.aleph / p.N
    ps = np.arange(p.N) - (p.N - 1) // 2
    psi = (2 * ps - 1) * math.pi / p.N
    e = np.exp(1j * psi)
    return a * (1 + e) / (1 - e)


# ---------------------------------------------------------------- TQ extraction

def _q_basis(xi: np.ndarray, M: int, rho: float) -> np.ndarray:
    """Q(xi) = sum_k c_k cosh(xi)^{M-k} (sinh(xi)/rho)^k, i.e. cosh^M(xi) p(tanh(xi)/rho)."""
    k = np.arange(M + 1)
    return np.cosh(xi)[..., None] ** (M - k) * (np.sinh(xi)[..., None] / rho) ** k


def _roots_from_coeffs(c: np.ndarray, rho: float) -> np.ndarray:
    c = np.array(c, dtype=complex)
    c = c / np.abs(c).max()
    M = c.size - 1
    u = np.roots(c[::-1]) if M > 0 else np.zeros(0, complex)
    n_inf = M - u.size
    w = rho * u
    lam = np.empty(u.size, dtype=complex)
    big = np.abs(w) > 1
    lam[~big] = np.arctanh(w[~big])
    # atanh(w) = atanh(1/w) + i pi/2 mod i pi
    lam[big] = np.arctanh(1.0 / w[big]) + 0.5j * math.pi
    out = np.concatenate([lam, np.full(n_inf, 0.5j * math.pi)])
    return np.array([_normalize_root(z) for z in out])


def _normalize_root(z: complex) -> complex:
    z = reduce_mod_ipi(z)
    if abs(z.imag - math.pi / 2) < SNAP_TOL or abs(z.imag + math.pi / 2) < SNAP_TOL:
        z = complex(z.real, math.pi / 2)
    return z


def tq_roots(lam_xi: np.ndarray, xis: np.ndarray, M: int, p: ChainParams,
             rho: float) -> tuple[np.ndarray, float, float]:
    """Solve the TQ collocation system; returns (roots, condition estimate, null residual)."""
    if M == 0:
        return np.zeros(0, complex), 1.0, 0.0
    A, D = vacuum_coefficients(xis, p)
    iz = 1j * p.zeta
    sysm = (lam_xi[:, None] * _q_basis(xis, M, rho)
            - A[:, None] * _q_basis(xis + iz, M, rho)
            - D[:, None] * _q_basis(xis - iz, M, rho))
    sysm = sysm / np.abs(sysm).max(axis=1, keepdims=True)
    _, sv, vh = np.linalg.svd(sysm)
    cond = sv[0] / sv[-2] if sv.size > 1 else 1.0
    null_res = sv[-1] / sv[0]
    return _roots_from_coeffs(vh[-1].conj(), rho), cond, null_res


def collocation_points(p: ChainParams, M: int, radius_factor: float) -> tuple[np.ndarray, float]:
    rho = radius_factor * p.zeta_m
    K = 2 * M + 4
    return rho * np.exp(2j * np.pi * (np.arange(K) + 0.5) / K), rho


def _joint_eigenvalues(spec: SpectrumRecord, p: ChainParams, M: int, xis: np.ndarray,
                       seed: int = 12345) -> tuple[np.ndarray, np.ndarray]:
    """Lambda_a(xi_j) for every eigenstate of the sector, in the order of ``spec``.

    Eigenvectors of t_q(0) are unreliable where many tiny eigenvalues crowd together,
    so the commuting family is diagonalized through a generic combination
    C = sum_j w_j t_q(xi_j), whose spectrum is well separated.  Each eigenvector of C
    is then assigned to an eigenvalue of t_q(0) by minimal total distance.
    Returns (lam of shape (K, n), assignment distance per state).
    """
    from scipy.optimize import linear_sum_assignment

    blocks = [_qtm.qtm_sector(x, p, M) for x in xis]
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(xis.size) + 1j * rng.standard_normal(xis.size)
    C = sum(wj * b for wj, b in zip(w, blocks))
    _, V = np.linalg.eig(C)
    Vi = np.linalg.inv(V)
    lam_c = np.array([np.einsum("ij,jk,ki->i", Vi, b, V) for b in blocks])
    t0 = np.einsum("ij,jk,ki->i", Vi, _qtm.qtm_sector(0.0, p, M), V)
    ev = spec.eigenvalues
    cost = np.abs(ev[:, None] - t0[None, :])
    rows, cols = linear_sum_assignment(cost)
    order = np.empty(ev.size, dtype=int)
    order[rows] = cols
    return lam_c[:, order], cost[rows, cols][np.argsort(rows)]


def check_points(p: ChainParams, radius_factor: float, k: int = 7) -> np.ndarray:
    """Independent points, off the collocation circle, for validating tau against Lambda."""
    r = 1.23 * radius_factor * p.zeta_m
    return r * np.exp(2j * np.pi * (np.arange(k) + 0.1) / k)


def extract_sector(p: ChainParams, M: int, spec: SpectrumRecord | None = None,
                   polish: bool = True) -> tuple[SpectrumRecord, list[BetheState]]:
    """Bethe roots for every eigenstate of t_q(0) in the sector with M roots."""
    if spec is None:
        spec = sector_spectrum(p, M)
    n = len(spec)
    # the dominant eigenvalue is close to its infinite temperature value 2 cosh(h/2T)
    floor = PRECISION_FLOOR * 2 * math.cosh(p.h / (2 * p.T))
    best: list[BetheState | None] = [None] * n
    for rf in RADII:
        pending = [a for a in range(n) if best[a] is None or _quality(best[a]) >= 1.0]
        if not pending:
            break
        xis, rho = collocation_points(p, M, rf)
        chk = check_points(p, rf)
        lam, _ = _joint_eigenvalues(spec, p, M, np.concatenate([xis, chk]))
        K = xis.size
        for a in pending:
            st = _state_from_tq(lam[:K, a], xis, rho, M, p, a, spec.eigenvalues[a], polish,
                                check=(chk, lam[K:, a]), floor=floor)
            if best[a] is None or _quality(st) < _quality(best[a]):
                best[a] = st
    return spec, [b for b in best if b is not None]


def _quality(st: BetheState) -> float:
    """Below 1 for an acceptable state; smaller is better."""
    penalty = 1e6 if "IllConditionedTQ" in st.flags else 0.0
    err = st.tau_check_error if np.isfinite(st.tau_check_error) else st.tau_error
    if not np.isfinite(err):
        return penalty + 1e3
    return penalty + err / TAU_TOL


def _state_from_tq(lam_xi, xis, rho, M, p, a, ev, polish, check=None,
                   floor: float = 0.0) -> BetheState:
    roots, cond, null_res = tq_roots(lam_xi, xis, M, p, rho)
    flags: list[str] = []
    if cond > 1e12 or null_res > 1e-6:
        flags.append("IllConditionedTQ")
    res0 = bae_residual(roots, p).max() if M else 0.0
    if polish and M and not _has_singular_pair(roots, p.zeta):
        # keep the polish local: it must not jump to another solution
        move = 1e-2 * abs(p.aleph) / p.N + 1e-8 * np.abs(roots).max()
        new, res, ok = polish_roots(roots, p, max_move=move)
        if res <= res0:
            roots, res0 = new, res
        if res0 > WIDE_POLISH_ABOVE and check is not None:
            # tight clusters (|lambda| ~ aleph/N) are resolved poorly from the circle; an
            # unrestricted Newton step is kept only if tau still matches off the circle
            new, res, ok = polish_roots(roots, p, max_iter=200)
            if ok and _check_error(new, p, *check) <= max(TAU_TOL, _check_error(roots, p, *check)):
                roots, res0 = new, res
        if res0 > WIDE_POLISH_ABOVE and check is not None:
            new = _reseed_cluster(roots, p, ev, check)
            if new is not None:
                roots, res0 = new, bae_residual(new, p).max()
    roots = np.array([_normalize_root(z) for z in roots])
    # tol=0 keeps every root as its own entry, even when two of them nearly coincide
    st = BetheState(RootMultiset([(r, 1) for r in roots], tol=0.0), M, p.N, eigen_index=a,
                    eigenvalue=complex(ev), residual=float(res0), flags=flags, tq_cond=float(cond))
    check_admissibility(st, p)
    t0 = tau(0.0, roots, p)
    st.tau_error = abs(t0 - ev) / max(abs(ev), 1e-300)
    if check is not None:
        st.tau_check_error = _check_error(roots, p, *check)
    if abs(ev) < floor:
        st.flags.append("BelowPrecision")
    if M and np.abs(np.sinh(roots)).min() < ORIGIN_TOL:
        st.flags.append("RootNearOrigin")
    if st.residual > 1e-6 and "Singular" not in " ".join(st.flags):
        st.flags.append("BAEResidual")
    return st


def cluster_seeds(far: np.ndarray, k: int, p: ChainParams) -> list[np.ndarray]:
    """Leading high temperature positions of k roots near the origin, given the far roots.

    Near 0 the BAE reduce to ((x - a)/(x + a))^N Phi = -1 with a = aleph/N and Phi the
    phase of the far roots, so x = a (1 + w)/(1 - w) for the N roots w of w^N = -1/Phi.
    Every k-subset of the finite ones is a candidate.
    """
    a = p.aleph / p.N
    iz = 1j * p.zeta
    phi = (-1) ** (p.N - far.size - k) * math.exp(-p.h / p.T) * np.prod(np.sinh(iz + far) / np.sinh(iz - far))
    w = (-1 / phi) ** (1 / p.N) * np.exp(2j * np.pi * np.arange(p.N) / p.N)
    # w = 1 is a root at infinity, not a cluster root
    w = w[np.abs(1 - w) > 1e-12]
    x = a * (1 + w) / (1 - w)
    return [x[list(c)] for c in itertools.combinations(range(x.size), k)]


def _reseed_cluster(roots: np.ndarray, p: ChainParams, ev: complex, check,
                    radius: float = 0.1) -> np.ndarray | None:
    """Replace the roots near 0 by cluster seeds; keep a polished set only if tau matches Lambda
    at 0 and on the check points."""
    near = np.abs(np.array([reduce_mod_ipi(z) for z in roots])) < radius * p.zeta_m
    k = int(near.sum())
    if k == 0 or k > p.N:
        return None
    far = roots[~near]
    for seeds in cluster_seeds(far, k, p):
        new, res, ok = polish_roots(np.concatenate([far, seeds]), p, max_iter=100)
        if not ok:
            continue
        if abs(tau(0.0, new, p) / ev - 1) <= TAU_TOL and _check_error(new, p, *check) <= TAU_TOL:
            return new
    return None


def _check_error(roots: np.ndarray, p: ChainParams, pts: np.ndarray, vals: np.ndarray) -> float:
    tv = np.array([tau(x, roots, p) for x in pts])
    return float(np.max(np.abs(tv - vals) / np.abs(vals)))


def _has_singular_pair(roots: np.ndarray, zeta: float, tol: float = 1e-6) -> bool:
    for i in range(roots.size):
        for j in range(roots.size):
            if i != j and same_mod_ipi(roots[i] - roots[j], 1j * zeta, tol):
                return True
    return False


def check_admissibility(st: BetheState, p: ChainParams, tol: float = 1e-8) -> bool:
    lam = st.root_array()
    a = p.aleph / p.N
    ok = True
    for i in range(lam.size):
        for j in range(i):
            if abs(reduce_mod_ipi(lam[i] - lam[j])) < COALESCE_TOL:
                if "MultiplicityDetected" not in st.flags:
                    st.flags.append("MultiplicityDetected")
                ok = False
            d = lam[i] - lam[j]
            if same_mod_ipi(d, 1j * p.zeta, tol) or same_mod_ipi(d, -1j * p.zeta, tol):
                if "SingularPair" not in st.flags:
                    st.flags.append("SingularPair")
                ok = False
    for z in lam:
        for bad in (a, -a, a + 1j * p.zeta, a - 1j * p.zeta, -a + 1j * p.zeta, -a - 1j * p.zeta):
            if same_mod_ipi(z, bad, tol):
                if "RootAtDrivingPole" not in st.flags:
                    st.flags.append("RootAtDrivingPole")
                ok = False
    st.admissible = ok
    return ok


# ---------------------------------------------------------------- holes and particles

@dataclass
class HoleParticleSets:
    X_hat: RootMultiset
    Y_hat: RootMultiset
    Y_sg: RootMultiset
    roots_inside: RootMultiset
    s: int
    epsilon: float
    monodromy: int
    min_modulus: float
    flags: list[str] = field(default_factory=list)

    @property
    def Y_total(self) -> RootMultiset:
        """Y = Y_hat + Y_sg - X_hat."""
        return self.Y_hat + self.Y_sg - self.X_hat

    def Y_kappa(self, kappa: complex) -> RootMultiset:
        Y = self.Y_total
        return Y - RootMultiset.repeated(kappa, self.s + Y.cardinality, tol=0.0)

    def expected_monodromy(self) -> int:
        return (self.X_hat.cardinality - self.Y_hat.cardinality - self.Y_sg.cardinality - self.s)

    def to_dict(self, zeta: float | None = None) -> dict:
        sc = 1.0 if zeta is None else 1.0 / zeta
        enc = lambda R: [[v.real * sc, v.imag * sc, m] for v, m in R]
        return dict(X_hat=enc(self.X_hat), Y_hat=enc(self.Y_hat), Y_sg=enc(self.Y_sg), s=self.s,
                    epsilon=self.epsilon, monodromy=self.monodromy,
                    min_modulus=self.min_modulus, flags=list(self.flags))


def _inside(z: complex, eps: float) -> bool:
    return abs(reduce_mod_ipi(z)) < eps


def singular_shift(zeta: float) -> complex:
    sg = 1.0 if math.pi - 2 * zeta > 0 else -1.0
    return -1j * sg * min(zeta, math.pi - zeta)


def _newton_identities(psums: np.ndarray) -> np.ndarray:
    """Monic polynomial coefficients (highest first) with the given power sums p_1..p_n."""
    n = psums.size
    e = np.zeros(n + 1, dtype=complex)
    e[0] = 1.0
    for k in range(1, n + 1):
        acc = 0j
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * psums[i - 1]
        e[k] = acc / k
    return np.array([(-1) ** k * e[k] for k in range(n + 1)])


def detect_sets(state: BetheState, p: ChainParams, epsilon: float, nq: int = 512,
                max_nq: int = 8192) -> HoleParticleSets:
    """Holes (zeros of 1 + a_hat inside D that are not roots), particles and singular roots."""
    lam = state.root_array()
    M = state.M
    inside = np.array([_inside(z, epsilon) for z in lam], dtype=bool)
    Yhat = lam[~inside]
    shift = singular_shift(p.zeta)
    ysg = np.array([reduce_mod_ipi(y + shift) for y in Yhat if _inside(y + shift, epsilon)],
                   dtype=complex)
    a = p.aleph / p.N
    flags: list[str] = []
    while True:
        u = epsilon * np.exp(2j * np.pi * np.arange(nq) / nq)
        ah = aux_function(u, lam, p, M)
        one = 1.0 + ah
        min_mod = float(np.abs(one).min())
        if min_mod < 1e-8:
            raise ContourThroughZero(f"min |1 + a_hat| = {min_mod:.2e} on |xi| = {epsilon}")
        f = ah / one * log_aux_derivative(u, lam, p)
        # (1/2 pi i) oint g(u) du with du = i u dphi -> mean(g u)
        w = u / nq
        n_float = np.sum(f * w)
        n_wind = int(round(n_float.real))
        tail = np.abs(np.fft.fft(f * u))[nq // 2 - 8: nq // 2 + 8].max() / max(np.abs(f * u).sum(), 1e-300)
        if abs(n_float - n_wind) < 1e-6 and tail < 1e-12:
            break
        if nq >= max_nq:
            if abs(n_float - n_wind) > 1e-3:
                raise ContourThroughZero(f"winding number not resolved: {n_float}")
            flags.append("LowQuadratureAccuracy")
            break
        nq *= 2
    poles = [-a] * p.N if _inside(-a, epsilon) else []
    poles += list(ysg)
    n_zero = n_wind + len(poles)
    n_hole = n_zero - int(inside.sum())
    holes = np.zeros(0, complex)
    if n_hole < 0:
        flags.append("NegativeHoleCount")
    elif n_hole > 0:
        scale = epsilon
        k = np.arange(1, n_hole + 1)
        mom = np.array([np.sum(f * (u / scale) ** kk * w) for kk in k])
        known = np.array([np.sum((lam[inside] / scale) ** kk) for kk in k])
        pole_s = np.array([np.sum((np.array(poles, complex) / scale) ** kk) for kk in k]) if poles else 0
        psums = mom - known + pole_s
        coef = _newton_identities(psums)
        guess = np.roots(coef) * scale
        holes = np.array([_polish_hole(x, lam, inside, p, M) for x in guess])
        for x in holes:
            if not abs(x) < epsilon:
                flags.append("HoleOutsideContour")
            if abs(1 + aux_function(x, lam, p, M)) > 1e-6:
                flags.append("HoleResidual")
    mono = n_wind
    sets = HoleParticleSets(
        X_hat=RootMultiset.from_points(holes, tol=1e-12),
        Y_hat=RootMultiset.from_points(Yhat, tol=1e-12),
        Y_sg=RootMultiset.from_points(ysg, tol=1e-12),
        roots_inside=RootMultiset.from_points(lam[inside], tol=1e-12),
        s=state.s, epsilon=epsilon, monodromy=mono, min_modulus=min_mod, flags=flags)
    if sets.expected_monodromy() != mono:
        flags.append("MonodromyMismatch")
    return sets


def _polish_hole(x: complex, lam: np.ndarray, inside: np.ndarray, p: ChainParams, M: int,
                 iters: int = 60) -> complex:
    """Newton on 1 + a_hat deflated by the Bethe roots inside the contour."""
    known = lam[inside]
    for _ in range(iters):
        ah = aux_function(x, lam, p, M)
        if 1 + ah == 0:
            break
        g = ah / (1 + ah) * log_aux_derivative(x, lam, p)
        if known.size:
            g = g - np.sum(1.0 / np.tanh(x - known))
        if not np.isfinite(g) or g == 0:
            break
        step = 1.0 / g
        x = x - step
        if abs(step) < 1e-15 * max(abs(x), 1e-300) + 1e-300:
            break
    return complex(x)
