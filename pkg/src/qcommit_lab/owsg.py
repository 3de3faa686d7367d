"""Finite IV-OWSG instances with exact verification probabilities.

An instance fixes a key distribution over ``{0,1}^lam``, the generated states
``phi_k`` on register A together with purifications ``|Phi_k>`` on A (x) B,
and one acceptance operator ``E_k'`` per key.  Keys are integers whose bit
``lam-1-i`` selects the ``i``-th qubit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import TOL, Tolerances, ValidityError
from .qla import LabeledState, RegisterLayout, check_density, hermitian_eig, is_hermitian, kron_all, proj, psd_sqrt

KINDS = ("bb84-pure", "bb84-depolarized", "constant", "orthogonal")

_ZERO = np.array([1.0, 0.0], dtype=complex)
_PLUS = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2)


def key_bits(k: int, lam: int) -> list[int]:
    return [(k >> (lam - 1 - i)) & 1 for i in range(lam)]


def purify(rho: np.ndarray, tol: Tolerances = TOL) -> tuple[np.ndarray, int]:
    """Purification ``sum_j sqrt(w_j)|e_j>|j>`` of ``rho``; returns ``(vec, dim_B)``.

    The purifying register has dimension equal to the numerical rank, so pure
    states get a one-dimensional B.
    """
    w, v = hermitian_eig(rho)
    keep = w > tol.psd
    w, v = w[keep], v[:, keep]
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    return (v * np.sqrt(w)).reshape(-1), len(w)


@dataclass(frozen=True)
class IVOWSG:
    """``states[k]`` is ``phi_k``; ``purifications[k]`` is ``|Phi_k>`` flattened over (A, B)."""

    lam: int
    key_probs: np.ndarray
    states: tuple[np.ndarray, ...]
    purifications: tuple[np.ndarray, ...]
    dim_a: int
    dim_b: int
    ver: tuple[np.ndarray, ...]
    name: str = "custom"
    tol: Tolerances = field(default=TOL, compare=False, repr=False)

    def __post_init__(self):
        n = 1 << self.lam
        probs = np.asarray(self.key_probs, dtype=float)
        object.__setattr__(self, "key_probs", probs)
        if probs.shape != (n,):
            raise ValidityError(f"key_probs must have {n} entries")
        if abs(probs.sum() - 1.0) > self.tol.probability or probs.min() < 0:
            raise ValidityError(f"key_probs must be a distribution (sum {probs.sum()!r})")
        if not (len(self.states) == len(self.purifications) == len(self.ver) == n):
            raise ValidityError("need one state, purification and acceptance operator per key")
        eye = np.eye(self.dim_a)
        for k in range(n):
            check_density(self.states[k], self.tol, f"phi_{k}")
            vec = self.purifications[k]
            if vec.shape != (self.dim_a * self.dim_b,):
                raise ValidityError(f"purification {k} has shape {vec.shape}")
            if abs(np.vdot(vec, vec).real - 1.0) > self.tol.norm:
                raise ValidityError(f"purification {k} is not normalized")
            m = vec.reshape(self.dim_a, self.dim_b)
            if np.abs(m @ m.conj().T - self.states[k]).max() > self.tol.trace:
                raise ValidityError(f"purification {k} does not reduce to phi_{k}")
            e = self.ver[k]
            if not is_hermitian(e, self.tol.povm):
                raise ValidityError(f"E_{k} is not Hermitian")
            w = np.linalg.eigvalsh(e)
            if w.min() < -self.tol.povm or np.linalg.eigvalsh(eye - e).min() < -self.tol.povm:
                raise ValidityError(f"E_{k} is not between 0 and I")

    @property
    def num_keys(self) -> int:
        return 1 << self.lam

    def purification(self, k: int) -> LabeledState:
        layout = RegisterLayout((("A", self.dim_a), ("B", self.dim_b)))
        return LabeledState(layout, frozenset(), {(): self.purifications[k]})

    def copies(self, k: int, t: int) -> np.ndarray:
        """``|Phi_k>^{(x)t}`` reordered to (B_1..B_t, A_1..A_t), as a (dim_b^t, dim_a^t) matrix."""
        m = self.purifications[k].reshape(self.dim_a, self.dim_b)
        out = np.ones((1, 1), dtype=complex)
        for _ in range(t):
            out = np.einsum("ab,ij->aibj", out, m).reshape(out.shape[0] * self.dim_a,
                                                          out.shape[1] * self.dim_b)
        return out.T.copy()

    def copies_state(self, k: int, t: int) -> np.ndarray:
        """``phi_k^{(x)t}`` on A_1..A_t."""
        return kron_all([self.states[k]] * t, self.tol) if t else np.ones((1, 1), dtype=complex)


def from_states(lam: int, states, ver, key_probs=None, name: str = "custom",
                tol: Tolerances = TOL) -> IVOWSG:
    """Build an instance from ``phi_k`` and ``E_k'``, purifying each state."""
    n = 1 << lam
    probs = np.full(n, 1.0 / n) if key_probs is None else np.asarray(key_probs, dtype=float)
    states = tuple(np.asarray(s, dtype=complex) for s in states)
    pur = [purify(s, tol) for s in states]
    dim_b = max(d for _, d in pur)
    dim_a = states[0].shape[0]
    vecs = []
    for vec, d in pur:
        m = np.zeros((dim_a, dim_b), dtype=complex)
        m[:, :d] = vec.reshape(dim_a, d)
        vecs.append(m.reshape(-1))
    return IVOWSG(lam, probs, states, tuple(vecs), dim_a, dim_b,
                  tuple(np.asarray(e, dtype=complex) for e in ver), name, tol)


def bb84_pure(lam: int, key_probs=None) -> IVOWSG:
    """Bit 0 -> |0>, bit 1 -> |+>; Ver projects onto the candidate's product state."""
    n = 1 << lam
    kets = [_product_ket(k, lam) for k in range(n)]
    states = tuple(proj(v) for v in kets)
    probs = np.full(n, 1.0 / n) if key_probs is None else np.asarray(key_probs, dtype=float)
    return IVOWSG(lam, probs, states, tuple(kets), 1 << lam, 1, states, "bb84-pure")


def bb84_depolarized(lam: int, eta: float, key_probs=None) -> IVOWSG:
    """Each qubit of the bb84 state passes a depolarizing channel of strength ``eta``.

    Ver keeps the noiseless projector, so ``accept(k, k) = (1 - eta/2)^lam``.
    The purification is the canonical ``vec(sqrt(phi_k))`` with ``dim_B = 2^lam``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValidityError(f"eta must lie in [0, 1], got {eta}")
    n = 1 << lam
    one = np.eye(2) / 2
    states, vecs, ver = [], [], []
    for k in range(n):
        qubits = [(1 - eta) * proj(_ZERO if b == 0 else _PLUS) + eta * one for b in key_bits(k, lam)]
        rho = kron_all(qubits)
        states.append(rho)
        vecs.append(psd_sqrt(rho).reshape(-1))
        ver.append(proj(_product_ket(k, lam)))
    probs = np.full(n, 1.0 / n) if key_probs is None else np.asarray(key_probs, dtype=float)
    return IVOWSG(lam, probs, tuple(states), tuple(vecs), 1 << lam, 1 << lam, tuple(ver),
                  f"bb84-depolarized({eta:g})")


def constant(lam: int, key_probs=None) -> IVOWSG:
    """Every key yields |0> on one qubit and Ver always accepts."""
    n = 1 << lam
    zero = proj(_ZERO)
    probs = np.full(n, 1.0 / n) if key_probs is None else np.asarray(key_probs, dtype=float)
    return IVOWSG(lam, probs, (zero,) * n, (_ZERO,) * n, 2, 1, (np.eye(2, dtype=complex),) * n,
                  "constant")


def orthogonal(lam: int, key_probs=None) -> IVOWSG:
    """``phi_k = |k><k|`` on lam qubits with projective verification."""
    n = 1 << lam
    kets = [np.eye(n, dtype=complex)[k] for k in range(n)]
    states = tuple(proj(v) for v in kets)
    probs = np.full(n, 1.0 / n) if key_probs is None else np.asarray(key_probs, dtype=float)
    return IVOWSG(lam, probs, states, tuple(kets), n, 1, states, "orthogonal")


def _product_ket(k: int, lam: int) -> np.ndarray:
    v = np.ones(1, dtype=complex)
    for b in key_bits(k, lam):
        v = np.kron(v, _ZERO if b == 0 else _PLUS)
    return v


@dataclass(frozen=True)
class ToyInstance:
    kind: str
    lam: int
    eta: float = 0.0
    key_probs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown instance kind {self.kind!r}; expected one of {KINDS}")
        if not 1 <= self.lam <= 8:
            raise ValueError(f"lambda must lie in 1..8, got {self.lam}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")

    def build(self) -> IVOWSG:
        probs = None if self.key_probs is None else np.asarray(self.key_probs, dtype=float)
        if self.kind == "bb84-pure":
            return bb84_pure(self.lam, probs)
        if self.kind == "bb84-depolarized":
            return bb84_depolarized(self.lam, self.eta, probs)
        if self.kind == "constant":
            return constant(self.lam, probs)
        return orthogonal(self.lam, probs)


# ---------------------------------------------------------------------------
# verification probabilities


def accept_prob(inst: IVOWSG, kp: int, k: int) -> float:
    """``Tr(E_k' phi_k)``."""
    return float(np.trace(inst.ver[kp] @ inst.states[k]).real)


def accept_table(inst: IVOWSG) -> np.ndarray:
    """``table[k', k] = Tr(E_k' phi_k)``."""
    ver = np.stack(inst.ver)
    st = np.stack(inst.states)
    return np.einsum("pij,kji->pk", ver, st).real


def correctness_prob(inst: IVOWSG) -> float:
    return float(inst.key_probs @ np.diag(accept_table(inst)))


def good_set(inst: IVOWSG, k: int, p: float, table: np.ndarray | None = None) -> frozenset[int]:
    """``{k' : accept(k', k) >= 1 - 1/p}``; ties within ``tol.threshold`` count as accepted."""
    if p <= 1:
        raise ValueError(f"p must exceed 1, got {p}")
    table = accept_table(inst) if table is None else table
    thr = 1.0 - 1.0 / p
    return frozenset(int(x) for x in np.flatnonzero(table[:, k] >= thr - inst.tol.threshold))


def uniform_guess_winprob(inst: IVOWSG, table: np.ndarray | None = None) -> float:
    table = accept_table(inst) if table is None else table
    return float(inst.key_probs @ table.sum(axis=0)) / inst.num_keys


def empirical_delta(inst: IVOWSG) -> float:
    """``-log2`` of the uniform-guess win probability (``inf`` if it is zero)."""
    w = uniform_guess_winprob(inst)
    return math.inf if w <= 0.0 else -math.log2(w)


@dataclass(frozen=True)
class GoodSetReport:
    lam: int
    p: float
    r: float
    sizes: tuple[int, ...]
    mass_T: float
    delta_emp: float
    uniform_guess: float
    mass_bound: float
    chain_lhs: float
    chain_holds: bool
    bound_holds: bool
    vacuous: bool
    pr_k_in_Gk_small: float
    pr_one_le_Gk_small: float
    sandwich_holds: bool

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "p": self.p,
            "r": self.r,
            "two_pow_r": 2.0**self.r,
            "G_sizes": list(self.sizes),
            "mass_T": self.mass_T,
            "delta_emp": self.delta_emp,
            "uniform_guess_winprob": self.uniform_guess,
            "mass_bound": self.mass_bound,
            "chain_lhs": self.chain_lhs,
            "chain_holds": self.chain_holds,
            "bound_holds": self.bound_holds,
            "bound_vacuous": self.vacuous,
            "pr_k_in_Gk_and_small": self.pr_k_in_Gk_small,
            "pr_1_le_Gk_le_2r": self.pr_one_le_Gk_small,
            "sandwich_holds": self.sandwich_holds,
        }


def good_set_report(inst: IVOWSG, p: float, r: float) -> GoodSetReport:
    """Exact good-set accounting for one ``(p, r)``.

    ``T`` is the set of keys with ``|G_k| > 2^r``; the trivial attack forces
    ``mass(T) * 2^r * 2^-lam * (1 - 1/p) <= uniform_guess``.
    """
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r}")
    table = accept_table(inst)
    sets = [good_set(inst, k, p, table) for k in range(inst.num_keys)]
    sizes = tuple(len(g) for g in sets)
    cap = 2.0**r
    probs = inst.key_probs
    in_t = np.array([s > cap for s in sizes])
    mass_t = float(probs[in_t].sum())
    win = uniform_guess_winprob(inst, table)
    delta = math.inf if win <= 0 else -math.log2(win)
    factor = cap * 2.0**-inst.lam * (1.0 - 1.0 / p)
    chain_lhs = mass_t * factor
    bound = (2.0**-delta) / factor
    small = np.array([1 <= s <= cap for s in sizes])
    own = np.array([k in sets[k] for k in range(inst.num_keys)])
    pr_own_small = float(probs[own & np.array([s <= cap for s in sizes])].sum())
    pr_small = float(probs[small].sum())
    slack = inst.tol.probability
    return GoodSetReport(
        lam=inst.lam, p=float(p), r=float(r), sizes=sizes, mass_T=mass_t, delta_emp=delta,
        uniform_guess=win, mass_bound=bound, chain_lhs=chain_lhs,
        chain_holds=chain_lhs <= win + slack,
        bound_holds=mass_t <= bound + slack,
        vacuous=bound >= 1.0,
        pr_k_in_Gk_small=pr_own_small, pr_one_le_Gk_small=pr_small,
        sandwich_holds=pr_small >= pr_own_small - slack,
    )
