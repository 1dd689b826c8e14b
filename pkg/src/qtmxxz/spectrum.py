"""Eigen-decomposition of the quantum transfer matrix, ordering and labels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qtm as _qtm
from .model import ChainParams

MODULUS_TIE = 1e-9


class ConvergenceFailure(RuntimeError):
    pass


class GapTooSmall(RuntimeError):
    pass


def principal_arg(z) -> np.ndarray:
    """Argument in [-pi, pi)."""
    a = np.angle(z)
    return np.where(a >= math.pi, a - 2 * math.pi, a)


def order_eigenvalues(ev: np.ndarray, tie: float = MODULUS_TIE) -> tuple[np.ndarray, np.ndarray]:
    """Permutation sorting by nonincreasing modulus, ties by increasing argument.

    Returns (permutation, cluster ids) where a cluster collects equal moduli.
    """
    ev = np.asarray(ev, dtype=complex)
    if ev.size == 0:
        return np.zeros(0, int), np.zeros(0, int)
    mod = np.abs(ev)
    first = np.argsort(-mod, kind="stable")
    clusters = np.zeros(ev.size, dtype=int)
    perm: list[int] = []
    cid = 0
    i = 0
    while i < first.size:
        j = i + 1
        ref = mod[first[i]]
        while j < first.size and abs(mod[first[j]] - ref) <= tie * max(ref, 1e-300):
            j += 1
        group = first[i:j]
        group = group[np.argsort(principal_arg(ev[group]), kind="stable")]
        perm.extend(group.tolist())
        clusters[i:j] = cid
        cid += 1
        i = j
    return np.array(perm), clusters


@dataclass(frozen=True)
class SpectrumRecord:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sector_labels: np.ndarray
    clusters: np.ndarray
    basis: np.ndarray | None = None  # global indices of the sector basis, if sector-local

    @property
    def index(self) -> np.ndarray:
        return np.arange(self.eigenvalues.size)

    def __len__(self) -> int:
        return self.eigenvalues.size

    def to_rows(self) -> list[dict]:
        ev = self.eigenvalues
        return [dict(index=int(a), sector=int(self.sector_labels[a]), re=float(ev[a].real),
                     im=float(ev[a].imag), abs=float(abs(ev[a])),
                     arg=float(principal_arg(ev[a])))
                for a in range(ev.size)]


def _eig(op: np.ndarray, sector) -> tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eig(op)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigen-decomposition failed (sector {sector}): {exc}") from exc


def _charge_blocks(op: np.ndarray) -> np.ndarray | None:
    """Charge of each basis state when op is a QTM-sized matrix that conserves it."""
    if op.shape[0] not in {4 ** n for n in range(1, _qtm.N_MAX + 1)}:
        return None
    n = int(round(math.log(op.shape[0], 4)))
    charge = _qtm.sector_charge(n)
    off = np.abs(op[charge[:, None] != charge[None, :]])
    if off.size and off.max() > 1e-13 * max(np.abs(op).max(), 1e-300):
        return None
    return charge


def full_spectrum(op: np.ndarray, sector: int | None = None, residual_tol: float = 1e-8) -> SpectrumRecord:
    """Dense nonsymmetric eigen-decomposition, sorted by the table convention.

    A QTM-sized operator that conserves the charge is decomposed block by block, so that
    eigenvalues degenerate across sectors keep clean sector labels.
    """
    op = np.asarray(op)
    charge = _charge_blocks(op) if sector is None else None
    sectors = None
    if charge is not None:
        dim = op.shape[0]
        evs, vecs, secs = [], [], []
        for M in np.unique(charge):
            idx = np.flatnonzero(charge == M)
            e, v = _eig(op[np.ix_(idx, idx)], int(M))
            V = np.zeros((dim, idx.size), dtype=complex)
            V[idx] = v
            evs.append(e)
            vecs.append(V)
            secs.append(np.full(e.size, M))
        ev, V, sectors = np.concatenate(evs), np.hstack(vecs), np.concatenate(secs)
    else:
        ev, V = _eig(op, sector)
    if op.size and np.all(np.abs(op.imag) < 1e-14 * max(1.0, np.abs(op).max())):
        ev = np.where(np.abs(ev.imag) < 1e-14 * np.abs(ev).max(), ev.real + 0j, ev)
    perm, clusters = order_eigenvalues(ev)
    ev = ev[perm]
    V = V[:, perm]
    scale = max(np.abs(ev).max(), 1e-300) if ev.size else 1.0
    res = np.linalg.norm(op @ V - V * ev, axis=0) / np.linalg.norm(V, axis=0)
    if ev.size and res.max() > residual_tol * scale:
        raise ConvergenceFailure(
            f"eigenpair residual {res.max():.2e} above tolerance (sector {sector})")
    if sectors is None:
        sectors = np.full(ev.size, -1 if sector is None else sector)
    else:
        sectors = sectors[perm]
    return SpectrumRecord(ev, V, sectors, clusters)


def sector_spectrum(p: ChainParams, M: int) -> SpectrumRecord:
    """Spectrum of t_q(0) restricted to the sector with M Bethe roots."""
    block = _qtm.qtm_sector(0.0, p, M)
    rec = full_spectrum(block.real if np.abs(block.imag).max() == 0 else block, sector=M)
    return SpectrumRecord(rec.eigenvalues, rec.eigenvectors, rec.sector_labels, rec.clusters,
                          basis=_qtm.sector_indices(p.N, M))


def qtm_spectrum(p: ChainParams) -> SpectrumRecord:
    """Global spectrum assembled sector by sector (sectors 0..2N)."""
    evs, secs = [], []
    for M in range(2 * p.N + 1):
        ev = np.linalg.eigvals(_qtm.qtm_sector(0.0, p, M))
        evs.append(ev)
        secs.append(np.full(ev.size, M))
    ev = np.concatenate(evs)
    sec = np.concatenate(secs)
    perm, clusters = order_eigenvalues(ev)
    return SpectrumRecord(ev[perm], np.zeros((0, 0)), sec[perm], clusters)


def power_iteration(apply, dim: int, tol: float = 1e-14, max_iter: int = 2000,
                    seed: int = 0) -> tuple[float, np.ndarray]:
    """Largest-modulus eigenvalue of a real operator with a real dominant eigenvalue."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = np.real(apply(x))
        lam_new = float(x @ y)
        nrm = np.linalg.norm(y)
        y /= nrm
        if np.sign(lam_new) < 0:
            y = -y
        if abs(lam_new - lam) <= tol * abs(lam_new) and np.linalg.norm(y - x) < 1e-10:
            return lam_new, y
        x, lam = y, lam_new
    return lam, x


def dominant_eigenvalue(op: np.ndarray, check_full: bool = True) -> float:
    """Dominant eigenvalue by power iteration, cross-checked against the dense spectrum."""
    lam, _ = power_iteration(lambda x: op @ x, op.shape[0])
    if check_full:
        ev = np.linalg.eigvals(op)
        perm, _ = order_eigenvalues(ev)
        ev = ev[perm]
        if abs(ev[0].imag) > 1e-10 * abs(ev[0]):
            raise ConvergenceFailure("dominant eigenvalue is not real")
        if ev.size > 1 and abs(ev[1]) / abs(ev[0]) > 0.99:
            raise GapTooSmall(f"|L1/L0| = {abs(ev[1]) / abs(ev[0]):.4f}")
        if abs(lam - ev[0].real) > 1e-10 * abs(ev[0]):
            raise ConvergenceFailure(
                f"power iteration {lam!r} disagrees with decomposition {ev[0]!r}")
    return lam


def dominant_eigenvalue_params(p: ChainParams) -> float:
    """Lambda_max of t_q(0); it lives in the sector M = N."""
    block = _qtm.qtm_sector(0.0, p, p.N).real
    return dominant_eigenvalue(block)


def correlation_ratio(spec: SpectrumRecord, a: int, lam_max: complex | None = None) -> complex:
    """Lambda_a / Lambda_max, the finite Trotter number approximant of e^{-1/xi_a}."""
    ref = spec.eigenvalues[0] if lam_max is None else lam_max
    return complex(spec.eigenvalues[a] / ref)
