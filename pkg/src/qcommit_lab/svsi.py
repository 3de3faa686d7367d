"""Secretly-verifiable, statistically-invertible OWSGs and their IV-OWSG form.

Verification of the converted instance measures the inverting POVM and
accepts ``k'`` exactly when the outcome is ``k'``, so ``E_k' = Pi_k'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import TOL, Tolerances, ValidityError
from .owsg import IVOWSG, accept_table, bb84_pure, from_states
from .qla import POVM, check_density, pgm, proj


@dataclass(frozen=True)
class SVSIOWSG:
    lam: int
    key_probs: np.ndarray
    states: tuple[np.ndarray, ...]
    inv_povm: POVM
    tol_inv: float
    name: str = "custom"
    tol: Tolerances = field(default=TOL, compare=False, repr=False)

    def __post_init__(self):
        n = 1 << self.lam
        probs = np.asarray(self.key_probs, dtype=float)
        object.__setattr__(self, "key_probs", probs)
        if probs.shape != (n,) or abs(probs.sum() - 1.0) > self.tol.probability:
            raise ValidityError("key_probs must be a distribution over all keys")
        if len(self.states) != n:
            raise ValidityError(f"need {n} states, got {len(self.states)}")
        for k, s in enumerate(self.states):
            check_density(s, self.tol, f"phi_{k}")
        missing = [k for k in range(n) if k not in self.inv_povm.labels]
        if missing:
            raise ValidityError(f"inverting POVM has no outcome for keys {missing}")
        stray = [l for l in self.inv_povm.labels if not (isinstance(l, int) and 0 <= l < n)]
        if len(stray) > 1:
            raise ValidityError(f"at most one residual outcome allowed, got {stray}")
        t = self.inversion_table()
        diag = np.diag(t)
        off = t - np.diag(diag)
        slack = self.tol.probability
        if diag.min() < 1.0 - self.tol_inv - slack:
            raise ValidityError(f"Tr(Pi_k phi_k) = {diag.min():.6g} < 1 - tol_inv")
        if off.max() > self.tol_inv + slack:
            raise ValidityError(f"cross acceptance {off.max():.6g} exceeds tol_inv = {self.tol_inv}")

    @property
    def num_keys(self) -> int:
        return 1 << self.lam

    def inversion_table(self) -> np.ndarray:
        """``table[k', k] = Tr(Pi_k' phi_k)``."""
        pis = np.stack([self.inv_povm.element(k) for k in range(self.num_keys)])
        return np.einsum("pij,kji->pk", pis, np.stack(self.states)).real


def to_ivowsg(svsi: SVSIOWSG) -> IVOWSG:
    ver = [svsi.inv_povm.element(k) for k in range(svsi.num_keys)]
    return from_states(svsi.lam, svsi.states, ver, svsi.key_probs, f"iv[{svsi.name}]", svsi.tol)


def orthogonal_svsi(lam: int, tol_inv: float = 0.0) -> SVSIOWSG:
    n = 1 << lam
    states = tuple(proj(np.eye(n)[k]) for k in range(n))
    povm = POVM(tuple(range(n)), states)
    return SVSIOWSG(lam, np.full(n, 1.0 / n), states, povm, tol_inv, "orthogonal")


def near_orthogonal_svsi(overlap: float = 0.1, tol_inv: float = 0.01) -> SVSIOWSG:
    """Two qubit states with ``<s0|s1> = overlap``, inverted by their PGM."""
    s0 = np.array([1.0, 0.0], dtype=complex)
    s1 = np.array([overlap, math.sqrt(1.0 - overlap**2)], dtype=complex)
    states = (proj(s0), proj(s1))
    return SVSIOWSG(1, np.array([0.5, 0.5]), states, pgm(states, [0.5, 0.5]), tol_inv, "near-orthogonal")


def bb84_as_svsi(lam: int, tol_inv: float = 0.01) -> SVSIOWSG:
    """bb84 states with their PGM; fails statistical invertibility (raises)."""
    inst = bb84_pure(lam)
    probs = inst.key_probs
    return SVSIOWSG(lam, probs, inst.states, pgm(inst.states, probs), tol_inv, "bb84")


@dataclass(frozen=True)
class AccountingReport:
    total: float
    diagonal: float
    off_diagonal: float
    exact_guess: float
    off_bound: float
    bound: float
    holds: bool

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "diagonal": self.diagonal,
            "off_diagonal": self.off_diagonal,
            "exact_guess_prob": self.exact_guess,
            "off_diagonal_bound": self.off_bound,
            "bound": self.bound,
            "holds": self.holds,
        }


def security_accounting(svsi: SVSIOWSG, guesses: np.ndarray) -> AccountingReport:
    """Split the converted instance's win probability for a tabulated adversary.

    ``guesses[k, k']`` is the probability the adversary outputs ``k'`` given
    copies of ``phi_k``.  The diagonal term is bounded by the exact-guess
    probability and the off-diagonal term by ``tol_inv``.
    """
    g = np.asarray(guesses, dtype=float)
    n = svsi.num_keys
    if g.shape != (n, n):
        raise ValidityError(f"guess table must be {n}x{n}")
    if g.min() < 0 or np.abs(g.sum(axis=1) - 1.0).max() > svsi.tol.probability:
        raise ValidityError("each row of the guess table must be a distribution")
    table = accept_table(to_ivowsg(svsi))  # [k', k]
    probs = svsi.key_probs
    weighted = probs[:, None] * g * table.T  # [k, k']
    diag = float(np.trace(weighted))
    total = float(weighted.sum())
    off = total - diag
    exact = float(probs @ np.diag(g))
    off_mass = float(probs @ (g.sum(axis=1) - np.diag(g)))
    off_bound = svsi.tol_inv * off_mass
    bound = exact + svsi.tol_inv
    slack = svsi.tol.probability
    holds = diag <= exact + slack and off <= off_bound + slack and total <= bound + slack
    return AccountingReport(total, diag, off, exact, off_bound, bound, holds)
