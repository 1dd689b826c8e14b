"""Non-linear integral equation for the auxiliary function on a small circle around 0.

Finite Trotter number N:
    A(xi) = -h/T + w_N(xi) - i pi s + i sum_{y in Y_kappa} theta_+(xi - y) + oint K(xi - u) Ln[1 + e^A](u) du
Trotter limit:
    A(xi) = -e0(xi)/T - i pi s + i sum_{y in Y_kappa} theta(xi - y) + oint K(xi - u) Ln[1 + e^A](u) du

Ln is the logarithm of 1 + e^A continued along the circle (counterclockwise) from
kappa, where it takes the principal value.  Only e^A enters Ln, so everything is
built from single valued factors: e^{i theta}, the ratio inside w_N, and e^{oint K Ln}.
The contour unknown is Phi = oint K Ln on the nodes (Phi = xi_fp / T in the fixed
point language, with A = A_inf + (xi_fp - varpi)/T).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .model import ChainParams, RootMultiset, e0, exp_i_theta, kernel, theta_plus, zeta_m

DEFAULT_NQ = 256
GL_POINTS = 16


class NoConvergence(RuntimeError):
    pass


class MonodromyMismatch(RuntimeError):
    def __init__(self, found: int, expected: int):
        super().__init__(f"monodromy {found}, expected {expected}")
        self.found = found
        self.expected = expected


class BallEscape(RuntimeError):
    pass


class LowerBoundViolated(ValueError):
    def __init__(self, min_modulus: float, bound: float):
        super().__init__(f"min |1 + e^A_inf| = {min_modulus:.3g} below {bound:.3g}")
        self.min_modulus = min_modulus


def default_epsilon(p: ChainParams) -> float:
    """Contour radius matching the classification disc, 0.6 zeta / sqrt(T), capped at zeta_m / 4."""
    return min(0.25 * p.zeta_m, 0.6 * p.zeta / math.sqrt(p.T))


@dataclass(frozen=True)
class ContourGrid:
    """n equispaced nodes on |u| = epsilon, the first one at kappa = epsilon e^{i kappa_angle}."""

    epsilon: float
    n: int = DEFAULT_NQ
    kappa_angle: float = 0.0

    @property
    def kappa(self) -> complex:
        return self.epsilon * cmath.exp(1j * self.kappa_angle)

    @property
    def phases(self) -> np.ndarray:
        return 2 * math.pi * np.arange(self.n) / self.n

    @property
    def nodes(self) -> np.ndarray:
        return self.kappa * np.exp(1j * self.phases)

    @property
    def weights(self) -> np.ndarray:
        """du at the nodes for the trapezoid rule: 2 pi i u_j / n."""
        return 2j * math.pi * self.nodes / self.n

    def derivative(self, f: np.ndarray) -> np.ndarray:
        """d f / du of nodal values of a function analytic in an annulus around the circle."""
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        if self.n % 2 == 0:
            k[self.n // 2] = 0.0
        dphi = np.fft.ifft(1j * k * np.fft.fft(f))
        return dphi / (1j * self.nodes)

    def antiderivative(self, f: np.ndarray) -> np.ndarray:
        """int_kappa^{u_j} f(u) du along the circle, spectrally; the mean part grows linearly."""
        g = f * 1j * self.nodes  # d/dphi form
        c = np.fft.fft(g) / self.n
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        phi = self.phases
        out = c[0] * phi
        nz = k != 0
        out = out + (np.exp(1j * np.outer(phi, k[nz])) - 1) @ (c[nz] / (1j * k[nz]))
        return out

    def cumulative_trapezoid(self, f: np.ndarray) -> np.ndarray:
        g = f * 1j * self.nodes
        h = 2 * math.pi / self.n
        return np.concatenate([[0.0], np.cumsum(0.5 * h * (g[1:] + g[:-1]))])

    def with_kappa_angle(self, angle: float) -> "ContourGrid":
        return ContourGrid(self.epsilon, self.n, angle)


# ---------------------------------------------------------------- sets and A_inf

def _multiset(v) -> RootMultiset:
    if v is None:
        return RootMultiset([])
    if isinstance(v, RootMultiset):
        return v
    return RootMultiset.from_points(np.atleast_1d(np.asarray(v, dtype=complex)), tol=1e-12)


def y_kappa(X, Y, s: int, kappa: complex, Ysg=None) -> RootMultiset:
    """Y_kappa = (Y + Y_sg - X) - {kappa}^{s + |Y + Y_sg - X|}; kappa never merges with the others."""
    YY = _multiset(Y) + _multiset(Ysg) - _multiset(X)
    n = s + YY.cardinality
    out = RootMultiset(list(YY.entries), tol=0.0)
    if n:
        out = RootMultiset(out.entries + [(complex(kappa), -n)], tol=0.0)
    return out


def exp_a_infinity(xi, Yk: RootMultiset, s: int, zeta: float) -> np.ndarray:
    """e^{A_inf(xi)} = (-1)^s prod_{y in Y_kappa} e^{i theta(xi - y)}."""
    xi = np.asarray(xi, dtype=complex)
    out = np.full(xi.shape, (-1.0) ** s, dtype=complex)
    for y, m in Yk:
        out = out * exp_i_theta(xi - y, zeta) ** m
    return out


def a_infinity(xi, X, Y, s: int, kappa: complex, zeta: float, Ysg=None,
               rho: float | None = None, grid: ContourGrid | None = None):
    """A_inf(xi) = -i pi s + i sum_{y in Y_kappa} theta(xi - y), theta_+ on the cuts.

    With rho given, |1 + e^{A_inf}| >= rho/2 is checked on the grid nodes.
    """
    Yk = y_kappa(X, Y, s, kappa, Ysg)
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=complex))
    out = np.full(xi_arr.shape, -1j * math.pi * s, dtype=complex)
    for y, m in Yk:
        out = out + 1j * m * theta_plus(xi_arr - y, zeta)
    if rho is not None:
        pts = grid.nodes if grid is not None else xi_arr
        mm = float(np.abs(1 + exp_a_infinity(pts, Yk, s, zeta)).min())
        if mm < rho / 2:
            raise LowerBoundViolated(mm, rho / 2)
    return out if np.ndim(xi) else complex(out[0])


def a_infinity_derivative(xi, Yk: RootMultiset, zeta: float) -> np.ndarray:
    """A_inf'(xi) = 2 pi i sum_{y in Y_kappa} K(xi - y)."""
    xi = np.asarray(xi, dtype=complex)
    out = np.zeros(xi.shape, dtype=complex)
    for y, m in Yk:
        out = out + 2j * math.pi * m * kernel(xi - y, zeta)
    return out


# ---------------------------------------------------------------- configuration and driving

@dataclass(frozen=True)
class FixedPointConfig:
    X: tuple = ()
    Y: tuple = ()
    s: int = 0
    Ysg: tuple = ()
    trotter: int | None = None  # None is the Trotter limit
    damping: float | None = None
    tol: float = 1e-13
    max_iter: int = 400
    check_ball: bool = True
    check_monodromy: bool = True

    @property
    def expected_monodromy(self) -> int:
        return len(self.X) - len(self.Y) - len(self.Ysg) - self.s

    def damping_for(self, T: float) -> float:
        if self.damping is not None:
            return self.damping
        return 1.0 if T >= 100 else 0.5

    @classmethod
    def from_sets(cls, sets, trotter: int | None, **kw) -> "FixedPointConfig":
        """Build from bethe.HoleParticleSets."""
        return cls(X=tuple(sets.X_hat.points()), Y=tuple(sets.Y_hat.points()), s=sets.s,
                   Ysg=tuple(sets.Y_sg.points()), trotter=trotter, **kw)


def _exp_w_N(xi, p: ChainParams, N: int) -> np.ndarray:
    a = p.aleph / N
    iz = 1j * p.zeta
    r = np.sinh(xi - a) * np.sinh(xi + a - iz) / (np.sinh(xi + a) * np.sinh(xi - a - iz))
    return r ** N


def w_N(xi, p: ChainParams, N: int) -> np.ndarray:
    a = p.aleph / N
    iz = 1j * p.zeta
    xi = np.asarray(xi, dtype=complex)
    r = np.sinh(xi - a) * np.sinh(xi + a - iz) / (np.sinh(xi + a) * np.sinh(xi - a - iz))
    return N * np.log(r)


def varpi(xi, p: ChainParams, N: int | None) -> np.ndarray:
    """h - T w_N(xi) at finite N, e0(xi) in the Trotter limit."""
    if N is None:
        return np.asarray(e0(xi, p), dtype=complex)
    return p.h - p.T * w_N(xi, p, N)


def exp_drive(xi, cfg: FixedPointConfig, p: ChainParams, kappa: complex) -> np.ndarray:
    """e^{A_inf(xi) - varpi(xi)/T}, single valued."""
    xi = np.asarray(xi, dtype=complex)
    Yk = y_kappa(cfg.X, cfg.Y, cfg.s, kappa, cfg.Ysg)
    out = exp_a_infinity(xi, Yk, cfg.s, p.zeta)
    if cfg.trotter is None:
        return out * np.exp(-np.asarray(e0(xi, p)) / p.T)
    return out * math.exp(-p.h / p.T) * _exp_w_N(xi, p, cfg.trotter)


# ---------------------------------------------------------------- Ln and the monodromy pieces

def unwrap_log(v: np.ndarray) -> tuple[np.ndarray, int]:
    """Continuous log of nodal values along the circle from node 0 (principal there).

    Returns the values and the winding number picked up on the way back to node 0.
    """
    v = np.asarray(v, dtype=complex)
    if np.any(v == 0):
        raise ZeroDivisionError("1 + e^A vanishes on the contour")
    steps = np.angle(np.roll(v, -1) / v)  # arg(v_{j+1}/v_j), last one closes the loop
    arg0 = np.angle(v[0])
    if arg0 >= math.pi:
        arg0 -= 2 * math.pi
    args = arg0 + np.concatenate([[0.0], np.cumsum(steps[:-1])])
    wind = int(round(steps.sum() / (2 * math.pi)))
    return np.log(np.abs(v)) + 1j * args, wind


def ln_one_plus_exp(expA: np.ndarray, grid: ContourGrid) -> tuple[np.ndarray, int]:
    return unwrap_log(1.0 + expA)


def ln_by_integration(A: np.ndarray, expA: np.ndarray, grid: ContourGrid,
                      spectral: bool = True) -> np.ndarray:
    """Ln from int_kappa^u A'/(1 + e^{-A}) du + ln(1 + e^{A(kappa)}), A' spectral.

    A must be smooth on the nodes (no 2 pi i jumps) for the derivative to make sense.
    """
    dA = grid.derivative(A)
    f = dA / (1 + 1 / expA)
    integ = grid.antiderivative(f) if spectral else grid.cumulative_trapezoid(f)
    base = np.log(1 + expA[0])
    if base.imag >= math.pi:
        base -= 2j * math.pi
    return integ + base


def _theta_small(lam, zeta: float) -> np.ndarray:
    """theta near the origin (no cut can be crossed there)."""
    lam = np.asarray(lam, dtype=complex)
    iz = 1j * zeta
    return 1j * np.log(np.sinh(iz + lam) / np.sinh(iz - lam))


def kernel_ell(xi, kappa: complex, zeta: float) -> np.ndarray:
    """oint K(xi - u) log(u/kappa) du, the log jumping by 2 pi i at kappa: i (theta(xi) - theta(xi - kappa))."""
    xi = np.asarray(xi, dtype=complex)
    return 1j * (_theta_small(xi, zeta) - _theta_small(xi - kappa, zeta))


def energy_ell(kappa: complex, zeta: float) -> complex:
    """oint sin(z) log(u/kappa) / (sinh(u - i z) sinh u) du / 2 pi = i (G(kappa) - G(0)) - i pi."""
    iz = 1j * zeta
    G = lambda u: -1j * (cmath.log(cmath.sinh(u - iz)) - cmath.log(cmath.sinh(u) / u))
    G0 = -1j * math.log(math.sin(zeta)) - math.pi / 2
    return 1j * (G(kappa) - G0) - 1j * math.pi


def energy_weights(grid: ContourGrid, zeta: float) -> np.ndarray:
    u = grid.nodes
    return math.sin(zeta) / (np.sinh(u - 1j * zeta) * np.sinh(u)) * grid.weights / (2 * math.pi)


def energy_integral(Ln: np.ndarray, m: int, grid: ContourGrid, zeta: float) -> complex:
    """oint sin(z) Ln(u) / (sinh(u - i z) sinh u) du / 2 pi for Ln = P + m log(u/kappa)."""
    ell = 2j * math.pi * np.arange(grid.n) / grid.n
    P = Ln - m * ell
    return complex(energy_weights(grid, zeta) @ P) + m * energy_ell(grid.kappa, zeta)


def kernel_matrix(xi: np.ndarray, grid: ContourGrid, zeta: float) -> np.ndarray:
    return kernel(np.subtract.outer(np.asarray(xi, dtype=complex), grid.nodes), zeta) * grid.weights


def kernel_apply(xi, Ln: np.ndarray, m: int, grid: ContourGrid, zeta: float,
                 KW: np.ndarray | None = None) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    ell = 2j * math.pi * np.arange(grid.n) / grid.n
    if KW is None:
        KW = kernel_matrix(xi, grid, zeta)
    out = KW @ (Ln - m * ell)
    if m:
        out = out + m * kernel_ell(xi, grid.kappa, zeta)
    return out


# ---------------------------------------------------------------- solver

@dataclass
class NlieSolution:
    grid: ContourGrid
    cfg: FixedPointConfig
    p: ChainParams
    phi: np.ndarray          # oint K Ln on the nodes
    exp_A: np.ndarray
    Ln: np.ndarray
    monodromy: int
    iterations: int
    history: list[float] = field(default_factory=list)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def xi_fp(self) -> np.ndarray:
        """Fixed point unknown T (A - A_inf) + varpi = T oint K Ln."""
        return self.p.T * self.phi

    @property
    def A(self) -> np.ndarray:
        """A on the nodes with A_inf from theta_+ (the branch is immaterial for e^A)."""
        c = self.cfg
        ainf = a_infinity(self.nodes, c.X, c.Y, c.s, self.grid.kappa, self.p.zeta, c.Ysg)
        return ainf - varpi(self.nodes, self.p, c.trotter) / self.p.T + self.phi

    def exp_A_at(self, xi) -> np.ndarray:
        """e^{A(xi)} off the contour by the integral representation (analytic continuation)."""
        xi = np.asarray(xi, dtype=complex)
        flat = np.atleast_1d(xi).ravel()
        corr = kernel_apply(flat, self.Ln, self.monodromy, self.grid, self.p.zeta)
        out = exp_drive(flat, self.cfg, self.p, self.grid.kappa) * np.exp(corr)
        return out.reshape(xi.shape) if xi.ndim else complex(out[0])

    def energy(self) -> complex:
        return energy_integral(self.Ln, self.monodromy, self.grid, self.p.zeta)

    def to_dict(self) -> dict:
        enc = lambda v: [[z.real, z.imag] for z in np.asarray(v)]
        d = dict(nodes=enc(self.nodes), A=enc(self.A), Ln=enc(self.Ln), monodromy=self.monodromy,
                 iterations=self.iterations, epsilon=self.grid.epsilon, nq=self.grid.n,
                 kappa_angle=self.grid.kappa_angle,
                 trotter="inf" if self.cfg.trotter is None else self.cfg.trotter)
        if self.cfg.trotter is None and not self.cfg.X and not self.cfg.Y and self.cfg.s == 0:
            d["f_over_T"] = -free_energy(self, self.p)
        d["Lambda"] = [eigenvalue_from_nlie(self, self.p).real, eigenvalue_from_nlie(self, self.p).imag]
        return d


def chi(lam, cfg: FixedPointConfig, p: ChainParams, grid: ContourGrid) -> np.ndarray:
    """chi(lam) = -oint K(lam - u) varpi(u) / (1 + e^{-A_inf(u)}) du."""
    Yk = y_kappa(cfg.X, cfg.Y, cfg.s, grid.kappa, cfg.Ysg)
    u = grid.nodes
    Lam = 1.0 / (1.0 + 1.0 / exp_a_infinity(u, Yk, cfg.s, p.zeta))
    KW = kernel_matrix(np.atleast_1d(lam), grid, p.zeta)
    return -(KW @ (varpi(u, p, cfg.trotter) * Lam))


def ball_radius(cfg: FixedPointConfig, p: ChainParams, grid: ContourGrid) -> float:
    """c = 2 sup |chi_{inf; eps}|, the sup taken over the nodes and the strip edge points."""
    lim = FixedPointConfig(X=cfg.X, Y=cfg.Y, s=cfg.s, Ysg=cfg.Ysg, trotter=None)
    h = 0.5 * zeta_m(p.zeta)
    probe = np.concatenate([grid.nodes, np.linspace(-3, 3, 25) + 1j * h * 0.999,
                            np.linspace(-3, 3, 25) - 1j * h * 0.999])
    return 2.0 * float(np.abs(chi(probe, lim, p, grid)).max())


def solve_nlie(cfg: FixedPointConfig, p: ChainParams, grid: ContourGrid | None = None,
               phi0: np.ndarray | None = None) -> NlieSolution:
    """Damped Picard iteration for the NLIE; the unknown is Phi = oint K Ln on the nodes."""
    grid = ContourGrid(default_epsilon(p)) if grid is None else grid
    if cfg.trotter is not None and abs(p.aleph) / cfg.trotter >= grid.epsilon / 2:
        raise ValueError("finite Trotter number needs |aleph|/N < epsilon/2")
    u = grid.nodes
    drive = exp_drive(u, cfg, p, grid.kappa)
    KW = kernel_matrix(u, grid, p.zeta)
    kell = kernel_ell(u, grid.kappa, p.zeta)
    ell = 2j * math.pi * np.arange(grid.n) / grid.n
    damp = cfg.damping_for(p.T)
    phi = np.zeros(grid.n, complex) if phi0 is None else np.array(phi0, dtype=complex)
    cball = ball_radius(cfg, p, grid) if cfg.check_ball else math.inf
    hist: list[float] = []
    m = 0
    for it in range(1, cfg.max_iter + 1):
        expA = drive * np.exp(phi)
        Ln, m = ln_one_plus_exp(expA, grid)
        new = KW @ (Ln - m * ell) + m * kell
        change = float(np.abs(new - phi).max())
        hist.append(change)
        phi = phi + damp * (new - phi)
        if cfg.check_ball and p.T * float(np.abs(phi).max()) > max(cball, 1e-300) * 1.0001 + 1e-12:
            # xi_fp must stay in B_c; the residual part from A_inf is not part of xi_fp
            raise BallEscape(f"|xi_fp| = {p.T * np.abs(phi).max():.3g} > c = {cball:.3g}")
        if change <= cfg.tol * max(1.0, float(np.abs(phi).max())):
            break
    else:
        raise NoConvergence(f"no convergence after {cfg.max_iter} sweeps, last change {hist[-1]:.2e}")
    expA = drive * np.exp(phi)
    Ln, m = ln_one_plus_exp(expA, grid)
    sol = NlieSolution(grid, cfg, p, phi, expA, Ln, m, it, hist)
    if cfg.check_monodromy and m != cfg.expected_monodromy:
        raise MonodromyMismatch(m, cfg.expected_monodromy)
    return sol


def monodromy_integral(sol: NlieSolution) -> complex:
    """oint A'/(1 + e^{-A}) du / 2 pi i with A' by spectral differentiation."""
    A, _ = unwrap_log(sol.exp_A)  # smooth along the circle unless e^A winds
    f = sol.grid.derivative(A) / (1 + 1 / sol.exp_A)
    return complex(np.sum(f * sol.grid.weights) / (2j * math.pi))


def free_energy(sol: NlieSolution, p: ChainParams | None = None) -> float:
    """f from the dominant Trotter-limit solution: -f/T = h/2T - 2 J cos(z)/T - E[Ln]."""
    p = sol.p if p is None else p
    val = p.h / (2 * p.T) - 2 * p.J * math.cos(p.zeta) / p.T - sol.energy()
    return float(-p.T * val.real)


def free_energy_over_T(sol: NlieSolution) -> complex:
    """-f/T with the imaginary part kept as a quadrature diagnostic."""
    p = sol.p
    return p.h / (2 * p.T) - 2 * p.J * math.cos(p.zeta) / p.T - sol.energy()


def eigenvalue_from_nlie(sol: NlieSolution, p: ChainParams | None = None) -> complex:
    """Transfer matrix eigenvalue tau(0) from the solution of the NLIE."""
    p = sol.p if p is None else p
    c = sol.cfg
    Yk = y_kappa(c.X, c.Y, c.s, sol.grid.kappa, c.Ysg)
    iz = 1j * p.zeta
    pref = Yk.wprod(lambda y: cmath.sinh(y - iz) / cmath.sinh(y))
    ex = p.h / (2 * p.T) - sol.energy()
    if c.trotter is None:
        ex -= 2 * p.J * math.cos(p.zeta) / p.T
    else:
        a = p.aleph / c.trotter
        pref *= (cmath.sinh(a + iz) / cmath.sinh(iz)) ** (2 * c.trotter)
    return complex(pref * cmath.exp(ex))


# ---------------------------------------------------------------- the contractive map

def fixed_point_operator(xi_fp: np.ndarray, cfg: FixedPointConfig, p: ChainParams,
                         grid: ContourGrid, lam=None, gl_points: int = GL_POINTS) -> np.ndarray:
    """O_T[xi](lam) = chi(lam) + (1/T) oint du K(lam - u) int_kappa^u dv int_0^1 dt G[xi - varpi](v, t).

    G[g](v, t) = g g' d2L(v, t g/T) + (1 - t) g^2 A_inf' d2^2 L(v, t g/T), L(v, x) = 1/(1 + e^{-A_inf(v) - x}).
    The t integral is Gauss-Legendre, the v integral a spectral antiderivative along the circle.
    Valid for class members, where oint K Ln[1 + e^{A_inf}] = 0.
    """
    u = grid.nodes
    lam = u if lam is None else np.atleast_1d(np.asarray(lam, dtype=complex))
    Yk = y_kappa(cfg.X, cfg.Y, cfg.s, grid.kappa, cfg.Ysg)
    eainf = exp_a_infinity(u, Yk, cfg.s, p.zeta)
    dainf = a_infinity_derivative(u, Yk, p.zeta)
    g = np.asarray(xi_fp, dtype=complex) - varpi(u, p, cfg.trotter)
    dg = grid.derivative(g)
    t, wt = np.polynomial.legendre.leggauss(gl_points)
    t = 0.5 * (t + 1)
    wt = 0.5 * wt
    G = np.zeros(grid.n, dtype=complex)
    for tk, wk in zip(t, wt):
        L = 1.0 / (1.0 + 1.0 / (eainf * np.exp(tk * g / p.T)))
        d1 = L * (1 - L)
        d2 = d1 * (1 - 2 * L)
        G += wk * (g * dg * d1 + (1 - tk) * g * g * dainf * d2)
    F = grid.antiderivative(G)
    # F picks up oint G around the loop; split that jump off as for Ln
    total = complex(np.sum(G * grid.weights))
    ell = 2j * math.pi * np.arange(grid.n) / grid.n
    mF = total / (2j * math.pi)
    out = chi(lam, cfg, p, grid) + (kernel_matrix(lam, grid, p.zeta) @ (F - mF * ell)
                                    + mF * kernel_ell(lam, grid.kappa, p.zeta)) / p.T
    return out


def iterate_fixed_point(cfg: FixedPointConfig, p: ChainParams, grid: ContourGrid,
                        xi0: np.ndarray | None = None, tol: float = 1e-12,
                        max_iter: int = 400) -> tuple[np.ndarray, int]:
    """Plain iteration xi <- O_T[xi] on the nodes."""
    xi = np.zeros(grid.n, complex) if xi0 is None else np.array(xi0, dtype=complex)
    for it in range(1, max_iter + 1):
        new = fixed_point_operator(xi, cfg, p, grid)
        ch = float(np.abs(new - xi).max())
        xi = new
        if ch <= tol * max(1.0, float(np.abs(xi).max())):
            return xi, it
    raise NoConvergence(f"fixed point iteration: change {ch:.2e} after {max_iter} steps")


def random_ball_element(grid: ContourGrid, radius: float, rng: np.random.Generator,
                        degree: int = 4) -> np.ndarray:
    """Random polynomial in u/epsilon with sup norm radius/2 on the nodes."""
    c = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
    z = grid.nodes / grid.epsilon
    f = np.polyval(c, z)
    return 0.5 * radius * f / np.abs(f).max()


def lipschitz_estimate(cfg: FixedPointConfig, p: ChainParams, grid: ContourGrid,
                       pairs: int = 20, seed: int = 7) -> float:
    """max over random pairs in B_c of |O[x] - O[y]| / |x - y| (sup norms on the nodes)."""
    rng = np.random.default_rng(seed)
    c = ball_radius(cfg, p, grid)
    best = 0.0
    for _ in range(pairs):
        x = random_ball_element(grid, c, rng)
        y = random_ball_element(grid, c, rng)
        num = np.abs(fixed_point_operator(x, cfg, p, grid) - fixed_point_operator(y, cfg, p, grid)).max()
        best = max(best, float(num / np.abs(x - y).max()))
    return best


# ---------------------------------------------------------------- excited states in the Trotter limit

def _subsidiary(X, Y, s, p, grid, tol):
    cfg = FixedPointConfig(X=tuple(X), Y=tuple(Y), s=s, trotter=None, tol=tol, check_ball=False)
    sol = solve_nlie(cfg, p, grid)
    pts = np.concatenate([np.asarray(X, complex), np.asarray(Y, complex)])
    return sol, sol.exp_A_at(pts) + 1.0


def solve_excited_limit(X0, Y0, s: int, p: ChainParams, grid: ContourGrid | None = None,
                        tol: float = 1e-11, max_steps: int = 40) -> tuple[NlieSolution, np.ndarray, np.ndarray]:
    """Trotter-limit NLIE with the subsidiary conditions e^{A(x)} = e^{A(y)} = -1 imposed by Newton.

    Seeds typically come from the finite-N hole and particle sets.  Returns (solution, X, Y).
    The particle points must stay away from the circles |y -+ i zeta| = epsilon.
    """
    grid = ContourGrid(default_epsilon(p)) if grid is None else grid
    X = np.array(X0, dtype=complex)
    Y = np.array(Y0, dtype=complex)
    nx = X.size
    z = np.concatenate([X, Y])
    sol, F = _subsidiary(z[:nx], z[nx:], s, p, grid, 1e-14)
    for _ in range(max_steps):
        if np.abs(F).max() < tol:
            return sol, z[:nx], z[nx:]
        Jm = np.empty((z.size, z.size), dtype=complex)
        for c in range(z.size):
            h = 1e-7 * max(abs(z[c]), 1e-3)
            zp = z.copy()
            zp[c] += h
            _, Fp = _subsidiary(zp[:nx], zp[nx:], s, p, grid, 1e-14)
            Jm[:, c] = (Fp - F) / h
        step = np.linalg.solve(Jm, F)
        t = 1.0
        while True:
            zt = z - t * step
            try:
                st, Ft = _subsidiary(zt[:nx], zt[nx:], s, p, grid, 1e-14)
                if np.abs(Ft).max() < np.abs(F).max():
                    break
            except (NoConvergence, MonodromyMismatch, ZeroDivisionError):
                pass
            t *= 0.5
            if t < 1e-4:
                raise NoConvergence("subsidiary Newton stalled")
        z, sol, F = zt, st, Ft
    raise NoConvergence(f"subsidiary conditions not met: {np.abs(F).max():.2e}")
