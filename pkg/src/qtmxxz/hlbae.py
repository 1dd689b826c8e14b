"""Higher level Bethe equations for the particle roots, hole asymptotics and the
large temperature correlation length formula.

The particle roots y_a of a high temperature excited state approach solutions of
the Bethe equations of a spin-1 XXZ chain with n_x sites,

    (-1)^{n_x-n_y+1} prod_b sinh(i z + y_b - y_a)/sinh(i z + y_a - y_b)
        * (sinh(i z + y_a)/sinh(i z - y_a))^{n_x} = 1,          (hlBAE1)

or, keeping the finite hole positions x_l,

    (-1)^{n_x-n_y+1} prod_b (...) * prod_l sinh(i z + y_a - x_l)/sinh(i z - y_a + x_l) = 1.   (hlBAE2)
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import ChainParams, CutEvaluation, reduce_mod_ipi, same_mod_ipi, theta, theta_plus, zeta_m

NEWTON_TOL = 1e-12
MAX_STEPS = 100


class NewtonDivergence(RuntimeError):
    pass


class JacobianSingular(RuntimeError):
    def __init__(self, msg: str, last: np.ndarray):
        super().__init__(msg)
        self.last = last


class ResonantDenominator(ZeroDivisionError):
    pass


class ConstraintViolated(ValueError):
    def __init__(self, clause: int, msg: str):
        super().__init__(f"constraint {clause}: {msg}")
        self.clause = clause


class EmptyCatalog(ValueError):
    pass


@dataclass
class HlbaeSolution:
    y_roots: np.ndarray
    n_x: int
    s: int
    residual: float
    seeds: np.ndarray
    x_holes: np.ndarray | None = None
    converged: bool = True
    steps: int = 0

    @property
    def n_y(self) -> int:
        return self.y_roots.size

    def admissible(self, zeta: float, tol: float = 1e-8) -> bool:
        y = self.y_roots
        for a, b in itertools.combinations(range(y.size), 2):
            d = y[a] - y[b]
            if (same_mod_ipi(d, 0, tol) or same_mod_ipi(d, 1j * zeta, tol)
                    or same_mod_ipi(d, -1j * zeta, tol)):
                return False
        return True

    def to_dict(self, zeta: float | None = None) -> dict:
        sc = 1.0 if zeta is None else 1.0 / zeta
        enc = lambda v: [[z.real * sc, z.imag * sc] for z in np.atleast_1d(v)]
        return dict(n_x=self.n_x, n_y=self.n_y, s=self.s, y=enc(self.y_roots),
                    residual=self.residual, seeds=enc(self.seeds),
                    x_holes=None if self.x_holes is None else enc(self.x_holes))


# ---------------------------------------------------------------- residuals

def _source(y: np.ndarray, zeta: float, n_x: int, x_holes) -> tuple[np.ndarray, np.ndarray]:
    """Log of the hole factor and its derivative in y_a."""
    iz = 1j * zeta
    if x_holes is None:
        lg = n_x * (np.log(np.sinh(iz + y)) - np.log(np.sinh(iz - y)))
        dg = n_x * (1 / np.tanh(iz + y) + 1 / np.tanh(iz - y))
        return lg, dg
    x = np.asarray(x_holes, dtype=complex)
    u = y[:, None] - x[None, :]
    lg = np.sum(np.log(np.sinh(iz + u)) - np.log(np.sinh(iz - u)), axis=1)
    dg = np.sum(1 / np.tanh(iz + u) + 1 / np.tanh(iz - u), axis=1)
    return lg, dg


def hlbae_lhs(y, zeta: float, n_x: int, x_holes=None) -> np.ndarray:
    """Left hand side of hlBAE1 (x_holes None) or hlBAE2, one value per root."""
    y = np.asarray(y, dtype=complex).ravel()
    iz = 1j * zeta
    n_y = y.size
    D = y[None, :] - y[:, None]          # y_b - y_a
    pair = np.prod(np.sinh(iz + D) / np.sinh(iz - D), axis=1)
    if x_holes is None:
        src = (np.sinh(iz + y) / np.sinh(iz - y)) ** n_x
    else:
        x = np.asarray(x_holes, dtype=complex)
        u = y[:, None] - x[None, :]
        src = np.prod(np.sinh(iz + u) / np.sinh(iz - u), axis=1)
    return (-1) ** (n_x - n_y + 1) * pair * src


def delta_residual(y, zeta: float, n_x: int, x_holes=None) -> np.ndarray:
    """delta_a = lhs_a - 1; a set counts as a solution when max |delta_a| is small."""
    return hlbae_lhs(y, zeta, n_x, x_holes) - 1.0


def _log_system(y: np.ndarray, zeta: float, n_x: int, x_holes):
    iz = 1j * zeta
    n_y = y.size
    lhs = hlbae_lhs(y, zeta, n_x, x_holes)
    G = np.log(lhs)  # principal branch; near a solution lhs ~ 1
    D = y[None, :] - y[:, None]          # D[a, b] = y_b - y_a
    C = 1 / np.tanh(iz + D) + 1 / np.tanh(iz - D)
    np.fill_diagonal(C, 0.0)
    jac = C.copy()                       # d G_a / d y_b for b != a
    _, dsrc = _source(y, zeta, n_x, x_holes)
    jac[np.diag_indices(n_y)] = -C.sum(axis=1) + dsrc
    return G, jac, lhs


def _newton(seeds, zeta: float, n_x: int, x_holes, tol: float, max_steps: int):
    y = np.array(seeds, dtype=complex).ravel()
    if y.size == 0:
        return y, 0.0, True, 0
    res = float(np.max(np.abs(delta_residual(y, zeta, n_x, x_holes))))
    for k in range(max_steps):
        if res <= tol:
            return y, res, True, k
        G, jac, _ = _log_system(y, zeta, n_x, x_holes)
        try:
            step = np.linalg.solve(jac, G)
        except np.linalg.LinAlgError as exc:
            raise JacobianSingular(str(exc), y) from exc
        if not np.all(np.isfinite(step)):
            raise JacobianSingular("non-finite Newton step", y)
        t = 1.0
        while True:
            trial = y - t * step
            with np.errstate(all="ignore"):
                r_new = float(np.max(np.abs(delta_residual(trial, zeta, n_x, x_holes))))
            if np.isfinite(r_new) and r_new < res:
                break
            t *= 0.5
            if t < 1e-6:
                return y, res, False, k
        y, res = trial, r_new
    return y, res, res <= tol, max_steps


def _finish(y, res, ok, steps, seeds, n_x, s, x_holes):
    y = np.array([reduce_mod_ipi(v) for v in y], dtype=complex)
    return HlbaeSolution(y_roots=y, n_x=n_x, s=s, residual=res, seeds=np.asarray(seeds, complex),
                         x_holes=None if x_holes is None else np.asarray(x_holes, complex),
                         converged=ok, steps=steps)


def solve_hlbae1(n_x: int, n_y: int, s: int, seeds, zeta: float, tol: float = NEWTON_TOL,
                 max_steps: int = MAX_STEPS, strict: bool = True) -> HlbaeSolution:
    """Newton solution of hlBAE1 from the given seeds (log residuals, analytic Jacobian)."""
    seeds = np.asarray(seeds, dtype=complex).ravel()
    if n_y < 1 or seeds.size != n_y:
        raise ValueError(f"need n_y >= 1 seeds, got n_y={n_y}, {seeds.size} seeds")
    y, res, ok, k = _newton(seeds, zeta, n_x, None, tol, max_steps)
    if strict and not ok:
        raise NewtonDivergence(f"hlBAE1 residual {res:.2e} after {k} steps")
    return _finish(y, res, ok, k, seeds, n_x, s, None)


def solve_hlbae2(x_holes, n_y: int, seeds, zeta: float, s: int | None = None,
                 tol: float = NEWTON_TOL, max_steps: int = MAX_STEPS,
                 strict: bool = True) -> HlbaeSolution:
    """Newton solution of hlBAE2 with the hole positions held fixed."""
    x = np.asarray(x_holes, dtype=complex).ravel()
    seeds = np.asarray(seeds, dtype=complex).ravel()
    if n_y < 1 or seeds.size != n_y:
        raise ValueError(f"need n_y >= 1 seeds, got n_y={n_y}, {seeds.size} seeds")
    s = x.size - n_y if s is None else s
    y, res, ok, k = _newton(seeds, zeta, x.size, x, tol, max_steps)
    if strict and not ok:
        raise NewtonDivergence(f"hlBAE2 residual {res:.2e} after {k} steps")
    return _finish(y, res, ok, k, seeds, x.size, s, x)


# ---------------------------------------------------------------- holes and correlation lengths

def _theta_sum(Y, zeta: float, plus: bool) -> complex:
    f = theta_plus if plus else theta
    out = 0j
    for y in np.atleast_1d(np.asarray(Y, dtype=complex)):
        try:
            out += f(-y, zeta)
        except CutEvaluation:
            out += theta_plus(-y, zeta)
    return out


def hole_asymptotics(k, Y, s: int, p: ChainParams) -> np.ndarray:
    """Leading large T hole positions x_a = -2 J sin(z) / (T [(2k_a + 1 + s) pi - sum_y theta(-y)])."""
    th = _theta_sum(_points(Y), p.zeta, plus=False)
    k = np.atleast_1d(np.asarray(k, dtype=int))
    den = (2 * k + 1 + s) * math.pi - th
    if np.any(np.abs(den) < 1e-8):
        raise ResonantDenominator(f"denominator {den[np.abs(den) < 1e-8][0]:.3g}")
    return -2 * p.J * math.sin(p.zeta) / (p.T * den)


def hole_integers(x, Y, s: int, p: ChainParams) -> np.ndarray:
    """Invert hole_asymptotics: the nearest integers k_a for given hole positions."""
    th = _theta_sum(_points(Y), p.zeta, plus=False)
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    den = -2 * p.J * math.sin(p.zeta) / (p.T * x)
    k = ((den + th) / math.pi - 1 - s) / 2
    return np.rint(k.real).astype(int)


def large_t_constraints(y, n_x: int, zeta: float, rho: float) -> None:
    """Raise ConstraintViolated naming the first failing clause."""
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    n_y = y.size
    for a, b in itertools.combinations(range(n_y), 2):
        d = y[a] - y[b]
        if same_mod_ipi(d, 0) or same_mod_ipi(d, 1j * zeta) or same_mod_ipi(d, -1j * zeta):
            raise ConstraintViolated(1, f"roots {a}, {b} coincide or differ by i zeta")
    iz = 1j * zeta
    val = abs((-1) ** (n_x - n_y) * np.prod(np.sinh(iz + y) / np.sinh(iz - y)) + 1)
    if not val > rho:
        raise ConstraintViolated(2, f"|(-1)^(nx-ny) prod + 1| = {val:.3g} <= rho")
    zm = zeta_m(zeta)
    for v in y:
        r = reduce_mod_ipi(v)
        if abs(r) == 0 or abs(r - 1j * zm) < rho or abs(r + 1j * zm) < rho:
            raise ConstraintViolated(3, f"root {v} too close to 0 or +-i zeta_m")


def correlation_length_largeT(h_ints, Y, p: ChainParams, f: float | None = None,
                              rho: float | None = None, check: bool = True) -> complex:
    """Large T prediction for e^{-1/xi} = lim Lambda_k / Lambda_max.

    T^{-n_x} prod_a [-2 i J / ((2 h_a + 1 + n_x - n_y) pi - sum theta_+(-y))] * prod_y sinh(y - i z)/sinh(y).
    The Trotter limit NLIE puts this product at Lambda_k / Lambda_max up to O(1/T), not at
    Lambda_k = e^{-1/xi} e^{-f/T}.  With the free energy f given, e^{-f/T} is multiplied in
    and the result predicts Lambda_k itself.
    """
    y = np.atleast_1d(np.asarray(_points(Y), dtype=complex))
    h_ints = np.atleast_1d(np.asarray(h_ints, dtype=int))
    n_x, n_y = h_ints.size, y.size
    if len(set(h_ints.tolist())) != n_x:
        raise ConstraintViolated(0, "hole integers must be pairwise distinct")
    if check and n_y:
        large_t_constraints(y, n_x, p.zeta, 0.6 / math.sqrt(p.T) if rho is None else rho)
    th = _theta_sum(y, p.zeta, plus=True)
    den = (2 * h_ints + 1 + n_x - n_y) * math.pi - th
    val = complex(np.prod(-2j * p.J / den)) / p.T ** n_x
    val *= complex(np.prod(np.sinh(y - 1j * p.zeta) / np.sinh(y)))
    if f is not None:
        val *= cmath.exp(-f / p.T)
    return val


def _points(Y) -> np.ndarray:
    if hasattr(Y, "points"):
        return np.array(Y.points(), dtype=complex)
    if isinstance(Y, HlbaeSolution):
        return Y.y_roots
    return np.atleast_1d(np.asarray(Y, dtype=complex))


# ---------------------------------------------------------------- sigma_infinity

INF_PLUS = complex(math.inf, 0.0)
INF_MINUS = complex(-math.inf, 0.0)


def _is_inf(z: complex) -> bool:
    return math.isinf(z.real)


def _pair_factor(u: complex, yb: complex, zeta: float) -> complex:
    """lim sinh(i z + y_b - u)/sinh(i z + u - y_b) with either argument possibly at +-infinity."""
    iz = 1j * zeta
    if _is_inf(u) and _is_inf(yb):
        if np.sign(u.real) == np.sign(yb.real):
            return 1.0  # the u = y_b factor of the product
        raise ValueError("opposite infinite roots are not supported")
    if _is_inf(yb):
        return -cmath.exp(2 * iz) if yb.real > 0 else -cmath.exp(-2 * iz)
    if _is_inf(u):
        return -cmath.exp(-2 * iz) if u.real > 0 else -cmath.exp(2 * iz)
    return cmath.sinh(iz + yb - u) / cmath.sinh(iz + u - yb)


def _source_factor(u: complex, zeta: float) -> complex:
    iz = 1j * zeta
    if _is_inf(u):
        return -cmath.exp(2 * iz) if u.real > 0 else -cmath.exp(-2 * iz)
    return cmath.sinh(iz + u) / cmath.sinh(iz - u)


def sigma_infinity_residual(Y, n_x: int, s: int, zeta: float) -> np.ndarray:
    """(-1)^{s+1} lim_{u -> y_a} prod_b (...) * (...)^{n_x} - 1, with the limit prescription for roots at infinity."""
    y = np.atleast_1d(np.asarray(Y, dtype=complex))
    out = np.empty(y.size, dtype=complex)
    for a, u in enumerate(y):
        val = (-1) ** (s + 1) * _source_factor(u, zeta) ** n_x
        for b, yb in enumerate(y):
            if b == a:
                continue
            val *= _pair_factor(u, yb, zeta)
        out[a] = val - 1
    return out


@dataclass
class SigmaInfinity:
    n_x: int
    n_y: int
    s: int
    zeta: float
    members: list[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.members)

    def add(self, y: np.ndarray, tol: float = 1e-7) -> bool:
        y = np.array([v if _is_inf(v) else reduce_mod_ipi(v) for v in y], dtype=complex)
        for m in self.members:
            if _set_distance(m, y) < tol:
                return False
        self.members.append(y)
        return True


def build_sigma_infinity(n_x: int, n_y: int, s: int, zeta: float, n_starts: int = 400,
                         seed: int = 2024, include_infinite: bool = True) -> SigmaInfinity:
    """Catalog of hlBAE1 solutions (n_x, n_y) by multi-start Newton over a seed lattice.

    Configurations with one root at +-infinity are added when the finite roots solve
    the reduced system and the constant-phase condition of the infinite root holds.
    """
    cat = SigmaInfinity(n_x, n_y, s, zeta)
    rng = np.random.default_rng(seed)
    zm = zeta_m(zeta)
    for k in range(n_starts):
        re = rng.uniform(-2.5, 2.5, n_y)
        im = rng.choice([0.0, 0.5 * math.pi, 0.6 * zm, -0.6 * zm], n_y) + rng.uniform(-0.3, 0.3, n_y) * zm
        if k % 2 and n_y >= 2:
            # strings have narrow basins: seed conjugate pairs around a common centre
            for a in range(0, 2 * int(rng.integers(1, n_y // 2 + 1)), 2):
                c, v = rng.uniform(-1.5, 1.5), rng.uniform(0.3, 0.9) * zm
                re[a:a + 2] = c + rng.normal(0.0, 0.02, 2)
                im[a:a + 2] = v, -v
            if k % 4 == 3 and n_y >= 4:
                # parity symmetric sets, y -> -y
                h = n_y // 2
                re[h:2 * h], im[h:2 * h] = -re[:h], im[:h]
        seeds = re + 1j * im
        try:
            sol = solve_hlbae1(n_x, n_y, s, seeds, zeta, tol=1e-11, strict=False)
        except JacobianSingular:
            continue
        if sol.converged and sol.admissible(zeta) and _finite_roots(sol.y_roots):
            cat.add(sol.y_roots)
    if include_infinite and n_y >= 1:
        for sign in (INF_PLUS, INF_MINUS):
            if n_y == 1:
                cand = np.array([sign])
                if np.max(np.abs(sigma_infinity_residual(cand, n_x, s, zeta))) < 1e-10:
                    cat.add(cand)
                continue
            # finite part feels the infinite root as a constant phase; solve by multi-start
            for _ in range(max(50, n_starts // 8)):
                seeds = rng.uniform(-2.5, 2.5, n_y - 1) + 1j * rng.uniform(-0.3, 0.3, n_y - 1) * zm
                y = _solve_with_infinite(seeds, sign, n_x, s, zeta)
                if y is not None:
                    full = np.concatenate([y, [sign]])
                    if np.max(np.abs(sigma_infinity_residual(full, n_x, s, zeta))) < 1e-9:
                        cat.add(full)
    return cat


def _finite_roots(y: np.ndarray, bound: float = 30.0) -> bool:
    return bool(np.all(np.abs(y.real) < bound))


def _solve_with_infinite(seeds, inf_root, n_x, s, zeta, steps: int = 60):
    y = np.array(seeds, dtype=complex)
    h = 1e-7
    for _ in range(steps):
        if not _finite_roots(y):
            return None
        F = sigma_infinity_residual(np.concatenate([y, [inf_root]]), n_x, s, zeta)[:-1]
        if not np.all(np.isfinite(F)):
            return None
        if np.max(np.abs(F)) < 1e-12:
            return y
        J = np.empty((y.size, y.size), dtype=complex)
        for c in range(y.size):
            yp = y.copy()
            yp[c] += h
            J[:, c] = (sigma_infinity_residual(np.concatenate([yp, [inf_root]]), n_x, s, zeta)[:-1] - F) / h
        try:
            y = y - np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            return None
    return None


def _set_distance(A: np.ndarray, B: np.ndarray) -> float:
    """min over permutations of sum |a - b|, distances taken mod i pi; infinities match only themselves."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.size != B.size:
        return math.inf
    cost = np.empty((A.size, B.size))
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            if _is_inf(a) or _is_inf(b):
                cost[i, j] = 0.0 if (_is_inf(a) and _is_inf(b) and a.real == b.real) else 1e300
            else:
                cost[i, j] = abs(reduce_mod_ipi(a - b))
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].sum())


def sigma_infinity_distance(Y, catalog: SigmaInfinity) -> float:
    """d(sigma_infinity, Y) = min over members and permutations of sum_a |y_a - y'_sigma(a)|."""
    if len(catalog) == 0:
        raise EmptyCatalog(f"no members for n_x={catalog.n_x}, n_y={catalog.n_y}")
    y = _points(Y)
    return min(_set_distance(m, y) for m in catalog.members)
