"""Membership in the particle/hole class C^eps_{alpha,rho} and the five-case taxonomy.

Lengths (epsilon, alpha) are measured in units of zeta by default, the same unit in
which roots and holes are tabulated.  rho and delta are dimensionless.
"""

from __future__ import annotations

import collections
import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import bethe
from .hlbae import delta_residual
from .model import ChainParams, reduce_mod_ipi, same_mod_ipi, zeta_m


class CaseLabel(enum.IntEnum):
    EmptyY = 1
    SingularY = 2
    RhoViolation = 3
    ClassMemberSolves = 4
    ClassMemberFails = 5
    # not a physical case: failed extraction or set detection, or a non-member
    # that none of the first three cases explains
    Diagnostics = 0


@dataclass(frozen=True)
class ClassParams:
    epsilon: float
    alpha: float = 0.01
    rho: float = 0.06
    delta: float = 0.1
    zeta_units: bool = True
    strict: bool = False

    def __post_init__(self) -> None:
        if min(self.epsilon, self.alpha, self.rho, self.delta) <= 0:
            raise ValueError("class parameters must be positive")
        if self.strict and not self.epsilon < self.alpha / 2:
            raise ValueError(f"strict mode needs epsilon < alpha/2, got {self.epsilon}, {self.alpha}")

    @classmethod
    def for_temperature(cls, T: float, **kw) -> "ClassParams":
        """epsilon = rho = 0.6/sqrt(T), alpha = 0.01, delta = 10/T."""
        d = dict(epsilon=0.6 / math.sqrt(T), alpha=0.01, rho=0.6 / math.sqrt(T), delta=10.0 / T)
        d.update(kw)
        return cls(**d)

    def eps_abs(self, zeta: float) -> float:
        return self.epsilon * zeta if self.zeta_units else self.epsilon

    def alpha_abs(self, zeta: float) -> float:
        return self.alpha * zeta if self.zeta_units else self.alpha


@dataclass
class Membership:
    member: bool
    failed: list[int] = field(default_factory=list)
    rho_value: float = math.nan
    notes: list[str] = field(default_factory=list)


def rho_value(Y, s: int, zeta: float) -> float:
    """|(-1)^s prod_y sinh(i z + y)/sinh(i z - y) + 1|."""
    y = np.asarray(Y, dtype=complex)
    iz = 1j * zeta
    return float(abs((-1) ** s * np.prod(np.sinh(iz + y) / np.sinh(iz - y)) + 1))


def class_membership(sets: bethe.HoleParticleSets, cp: ClassParams, s: int, zeta: float) -> Membership:
    """Check the three clauses of the class definition, reporting each failing one."""
    eps = cp.eps_abs(zeta)
    alpha = cp.alpha_abs(zeta)
    zm = zeta_m(zeta)
    X = np.array(sets.X_hat.points(), dtype=complex) if np.all(sets.X_hat.multiplicities() > 0) else None
    Y = np.array(sets.Y_hat.points(), dtype=complex)
    out = Membership(member=True)
    # (i) holes in D_{0,eps}, pairwise distinct
    if X is None:
        out.failed.append(1)
        out.notes.append("hole multiset has negative multiplicities")
    else:
        if np.any(np.abs([reduce_mod_ipi(x) for x in X]) >= eps):
            out.failed.append(1)
            out.notes.append("hole outside D_{0,eps}")
        elif any(same_mod_ipi(a, b, 1e-12) for a, b in itertools.combinations(X, 2)):
            out.failed.append(1)
            out.notes.append("coinciding holes")
    # (ii) particles in the strip, away from 0 and +-i zeta_m, pairwise distinct
    bad = False
    for y in Y:
        r = reduce_mod_ipi(y)
        if abs(r) < eps or abs(reduce_mod_ipi(r - 1j * zm)) < alpha or abs(reduce_mod_ipi(r + 1j * zm)) < alpha:
            bad = True
    if bad or any(same_mod_ipi(a, b, 1e-12) for a, b in itertools.combinations(Y, 2)):
        out.failed.append(2)
        out.notes.append("particle in a forbidden disc or repeated")
    # (iii) rho lower bound
    out.rho_value = rho_value(Y, s, zeta)
    if not out.rho_value > cp.rho:
        out.failed.append(3)
    out.member = not out.failed
    return out


@dataclass
class StateClass:
    index: int
    label: CaseLabel
    n_x: int = 0
    n_y: int = 0
    delta_max: float = math.nan
    rho_value: float = math.nan
    reason: str = ""

    def to_dict(self) -> dict:
        return dict(index=self.index, case=int(self.label), label=self.label.name, n_x=self.n_x,
                    n_y=self.n_y, delta_max=self.delta_max, rho_value=self.rho_value,
                    reason=self.reason)


def classify_state(state: bethe.BetheState, sets: bethe.HoleParticleSets | None, cp: ClassParams,
                   zeta: float) -> StateClass:
    idx = state.eigen_index
    if sets is None:
        return StateClass(idx, CaseLabel.Diagnostics, reason="set detection failed")
    Y = np.array(sets.Y_hat.points(), dtype=complex)
    nx = sets.X_hat.cardinality
    sc = StateClass(idx, CaseLabel.Diagnostics, n_x=nx, n_y=Y.size)
    if Y.size == 0:
        sc.label = CaseLabel.EmptyY
        return sc
    if sets.Y_sg.cardinality > 0:
        sc.label = CaseLabel.SingularY
        return sc
    mem = class_membership(sets, cp, state.s, zeta)
    sc.rho_value = mem.rho_value
    if 3 in mem.failed:
        sc.label = CaseLabel.RhoViolation
        return sc
    if not mem.member:
        sc.reason = "; ".join(mem.notes)
        return sc
    sc.delta_max = float(np.max(np.abs(delta_residual(Y, zeta, nx))))
    sc.label = CaseLabel.ClassMemberSolves if sc.delta_max < cp.delta else CaseLabel.ClassMemberFails
    return sc


@dataclass
class Classification:
    p: ChainParams
    M: int
    cp: ClassParams
    states: list[StateClass]

    @property
    def counts(self) -> dict[CaseLabel, int]:
        c = collections.Counter(s.label for s in self.states)
        return {lab: c.get(lab, 0) for lab in CaseLabel}

    @property
    def size(self) -> int:
        return len(self.states)

    def member_fraction(self) -> float:
        """Fraction of the sector in case 4."""
        return self.counts[CaseLabel.ClassMemberSolves] / self.size

    def table_row(self) -> dict:
        c = self.counts
        return dict(N=self.p.N, M=self.M, T=self.p.T,
                    **{f"case{k}": c[CaseLabel(k)] for k in range(1, 6)},
                    diagnostics=c[CaseLabel.Diagnostics], fraction=round(self.member_fraction(), 3))


def classify_all(p: ChainParams, M: int, cp: ClassParams | None = None,
                 states: list[bethe.BetheState] | None = None) -> Classification:
    """Extract every eigenstate of the sector and sort it into the five cases."""
    cp = ClassParams.for_temperature(p.T) if cp is None else cp
    if states is None:
        _, states = bethe.extract_sector(p, M)
    eps = cp.eps_abs(p.zeta)
    out = []
    for st in states:
        if not st.verified:
            out.append(StateClass(st.eigen_index, CaseLabel.Diagnostics, reason="unverified roots"))
            continue
        try:
            sets = bethe.detect_sets(st, p, eps)
        except (bethe.ContourThroughZero, ZeroDivisionError, np.linalg.LinAlgError) as exc:
            out.append(StateClass(st.eigen_index, CaseLabel.Diagnostics, reason=str(exc)))
            continue
        if "MonodromyMismatch" in sets.flags or "NegativeHoleCount" in sets.flags:
            out.append(StateClass(st.eigen_index, CaseLabel.Diagnostics, reason=",".join(sets.flags)))
            continue
        out.append(classify_state(st, sets, cp, p.zeta))
    return Classification(p, M, cp, out)
