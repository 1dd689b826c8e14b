"""Parameter records, root multisets and the special functions of the XXZ chain.

Conventions
-----------
The chain is H = J sum_j (sx sx + sy sy + Delta (sz sz + 1)) - (h/2) sum_j sz with
Delta = cos(zeta), 0 < zeta < pi.  The Trotter data enter through
eta = -i zeta and aleph = -i J sin(zeta) / T.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

ID_TOL = 1e-10
CUT_TOL = 1e-12


class CutEvaluation(ValueError):
    """theta was asked for a value sitting on one of its branch cuts."""


class CutWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ChainParams:
    J: float = 1.0
    zeta: float = math.pi / 7
    h: float = 0.0
    T: float = 100.0
    N: int = 5
    L: int = 10
    generic_check: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.zeta < math.pi:
            raise ValueError(f"zeta must lie in (0, pi), got {self.zeta}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if int(self.L) != self.L or self.L < 2 or self.L % 2:
            raise ValueError(f"L must be an even positive integer, got {self.L}")
        if self.generic_check:
            # advisory only: flag zeta close to a low-order rational multiple of pi
            for q in range(1, 13):
                p = round(self.zeta * q / math.pi)
                if abs(self.zeta - p * math.pi / q) < 1e-9:
                    warnings.warn(f"zeta = {p}pi/{q} is a root-of-unity point", stacklevel=2)
                    break

    @property
    def eta(self) -> complex:
        return -1j * self.zeta

    @property
    def aleph(self) -> complex:
        return -1j * self.J * math.sin(self.zeta) / self.T

    @property
    def delta(self) -> float:
        return math.cos(self.zeta)

    @property
    def zeta_m(self) -> float:
        return zeta_m(self.zeta)

    def replace(self, **kw) -> "ChainParams":
        d = dict(J=self.J, zeta=self.zeta, h=self.h, T=self.T, N=self.N, L=self.L,
                 generic_check=self.generic_check)
        d.update(kw)
        return ChainParams(**d)

    def to_dict(self) -> dict:
        return dict(J=self.J, zeta=self.zeta, h=self.h, T=self.T, N=self.N, L=self.L)


def zeta_m(zeta: float) -> float:
    return min(zeta, math.pi - zeta)


def reduce_mod_ipi(z: complex) -> complex:
    """Representative of z mod i*pi with imaginary part in (-pi/2, pi/2]."""
    z = complex(z)
    im = z.imag - math.pi * math.floor(z.imag / math.pi + 0.5)
    if im <= -math.pi / 2 + 1e-15:
        im += math.pi
    return complex(z.real, im)


def same_mod_ipi(a: complex, b: complex, tol: float = ID_TOL) -> bool:
    d = reduce_mod_ipi(complex(a) - complex(b))
    if abs(d) < tol:
        return True
    # d may sit just below +pi/2 boundary wrap
    return abs(d - 1j * math.pi) < tol


@dataclass
class RootMultiset:
    """Finite multiset of complex points with signed integer multiplicities.

    Values are identified modulo i*pi.  ``+`` is the algebraic sum and ``-`` the
    algebraic difference; entries whose multiplicity drops to zero are removed.
    """

    entries: list[tuple[complex, int]] = field(default_factory=list)
    tol: float = ID_TOL

    def __post_init__(self) -> None:
        merged: list[tuple[complex, int]] = []
        for v, m in self.entries:
            merged = _merge(merged, complex(v), int(m), self.tol)
        self.entries = merged

    @classmethod
    def from_points(cls, points: Iterable[complex], tol: float = ID_TOL) -> "RootMultiset":
        return cls([(p, 1) for p in points], tol)

    @classmethod
    def repeated(cls, x: complex, n: int, tol: float = ID_TOL) -> "RootMultiset":
        return cls([(x, n)] if n else [], tol)

    def __add__(self, other: "RootMultiset") -> "RootMultiset":
        out = list(self.entries)
        for v, m in other.entries:
            out = _merge(out, v, m, self.tol)
        return RootMultiset(out, self.tol)

    def __sub__(self, other: "RootMultiset") -> "RootMultiset":
        return self + RootMultiset([(v, -m) for v, m in other.entries], self.tol)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[complex, int]]:
        return iter(self.entries)

    @property
    def cardinality(self) -> int:
        return sum(m for _, m in self.entries)

    def wsum(self, f: Callable[[complex], complex]) -> complex:
        return sum((m * f(v) for v, m in self.entries), 0j)

    def wprod(self, f: Callable[[complex], complex]) -> complex:
        out = 1 + 0j
        for v, m in self.entries:
            out *= f(v) ** m
        return out

    def points(self) -> list[complex]:
        """Values repeated by multiplicity; only meaningful for nonnegative multiplicities."""
        if any(m < 0 for _, m in self.entries):
            raise ValueError("multiset has negative multiplicities")
        return [v for v, m in self.entries for _ in range(m)]

    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.entries], dtype=complex)

    def multiplicities(self) -> np.ndarray:
        return np.array([m for _, m in self.entries], dtype=int)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RootMultiset):
            return NotImplemented
        return len((self - other).entries) == 0

    def __repr__(self) -> str:
        body = ", ".join(f"({v:.6g}, {m})" for v, m in self.entries)
        return f"RootMultiset([{body}])"


def _merge(entries: list[tuple[complex, int]], v: complex, m: int, tol: float):
    for i, (u, n) in enumerate(entries):
        if same_mod_ipi(u, v, tol):
            if n + m == 0:
                return entries[:i] + entries[i + 1:]
            return entries[:i] + [(u, n + m)] + entries[i + 1:]
    if m == 0:
        return entries
    return entries + [(v, m)]


# ---------------------------------------------------------------- special functions

def _plog(z: complex) -> complex:
    """Principal logarithm with argument in [-pi, pi)."""
    lg = cmath.log(z)
    if lg.imag >= math.pi - 1e-300 and abs(z.imag) == 0.0:
        lg = complex(lg.real, -math.pi)
    return lg


def _theta_raw(lam: complex, zeta: float, side: int) -> complex:
    """theta on the fundamental strip, side = 0 (strict), +1 (upper boundary value)."""
    zm = zeta_m(zeta)
    lam = reduce_mod_ipi(lam)
    if abs(lam.real) < 1e-300 and abs(abs(lam.imag) - math.pi / 2) < 1e-300:
        lam = complex(0.0, math.pi / 2)
    on_cut = lam.real > 0 and abs(abs(lam.imag) - zm) < CUT_TOL
    if on_cut and side == 0:
        raise CutEvaluation(f"theta evaluated on a cut at {lam}")
    if on_cut:
        # upper boundary value: move slightly above the cut to choose the branch
        probe = complex(lam.real, lam.imag + 1e3 * CUT_TOL)
        base = _theta_raw(probe, zeta, 0)
        exact = _theta_branch(lam, zeta, abs(probe.imag) < zm)
        k = round((base - exact).real / (2 * math.pi))
        return exact + 2 * math.pi * k
    return _theta_branch(lam, zeta, abs(lam.imag) < zm)


def _theta_branch(lam: complex, zeta: float, inner: bool) -> complex:
    iz = 1j * zeta
    if inner:
        return 1j * _plog(cmath.sinh(iz + lam) / cmath.sinh(iz - lam))
    sg = 1.0 if math.pi - 2 * zeta > 0 else -1.0
    return -math.pi * sg + 1j * _plog(cmath.sinh(iz + lam) / cmath.sinh(lam - iz))


def theta(lam, zeta: float):
    """Bare phase theta(lam) = i ln(sinh(i zeta + lam)/sinh(i zeta - lam)), continued off the strip.

    Raises CutEvaluation on the cuts R+ +- i zeta_m + i pi Z; use theta_plus there.
    Accepts scalars or arrays.
    """
    if np.ndim(lam) == 0:
        return _theta_raw(complex(lam), zeta, 0)
    arr = np.asarray(lam, dtype=complex)
    return np.array([_theta_raw(x, zeta, 0) for x in arr.ravel()]).reshape(arr.shape)


def theta_plus(lam, zeta: float):
    """theta with the + boundary value taken on the cuts."""
    if np.ndim(lam) == 0:
        return _theta_raw(complex(lam), zeta, 1)
    arr = np.asarray(lam, dtype=complex)
    return np.array([_theta_raw(x, zeta, 1) for x in arr.ravel()]).reshape(arr.shape)


def exp_i_theta(lam, zeta: float):
    """e^{i theta(lam)} = sinh(i zeta - lam)/sinh(i zeta + lam); single valued."""
    lam = np.asarray(lam, dtype=complex)
    return np.sinh(1j * zeta - lam) / np.sinh(1j * zeta + lam)


def kernel(xi, zeta: float):
    """K(xi) = theta'(xi)/(2 pi) = sin(2 zeta) / (2 pi sinh(xi + i zeta) sinh(xi - i zeta))."""
    xi = np.asarray(xi, dtype=complex)
    out = math.sin(2 * zeta) / (2 * math.pi * np.sinh(xi + 1j * zeta) * np.sinh(xi - 1j * zeta))
    return out if out.ndim else complex(out)


def e0(xi, p: ChainParams):
    """Bare energy e0(xi) = h - 2 J sin^2(zeta) / (sinh(xi) sinh(xi - i zeta))."""
    xi = np.asarray(xi, dtype=complex)
    z = p.zeta
    out = p.h - 2 * p.J * math.sin(z) ** 2 / (np.sinh(xi) * np.sinh(xi - 1j * z))
    return out if out.ndim else complex(out)
