"""Exact finite-dimensional quantum linear algebra.

States are plain ``numpy`` arrays: kets are 1-D complex vectors, density
matrices and operators are 2-D complex arrays.  Register bookkeeping is done
with :class:`RegisterLayout`; superpositions that carry large classical
registers are stored as :class:`LabeledState` so that only the small quantum
parts are ever dense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse

from .config import TOL, LayoutError, NumericError, Tolerances, ValidityError, check_cap

BOT = "bot"


# ---------------------------------------------------------------------------
# basics


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def proj(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def kron(a: np.ndarray, b: np.ndarray, tol: Tolerances = TOL) -> np.ndarray:
    """Tensor product in lexicographic block order, refusing oversized results."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    check_cap("kron", a.size * b.size, tol)
    return np.kron(a, b)


def kron_all(mats: Iterable[np.ndarray], tol: Tolerances = TOL) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = kron(out, m, tol)
    return out


def is_hermitian(m: np.ndarray, atol: float = TOL.hermitian) -> bool:
    return bool(np.allclose(m, m.conj().T, rtol=0.0, atol=atol))


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(m, dtype=complex)
    return np.linalg.eigh(0.5 * (m + m.conj().T))


def psd_sqrt(m: np.ndarray, tol: Tolerances = TOL) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues in [-psd, 0) are clipped to 0."""
    w, v = hermitian_eig(m)
    if w.size and w.min() < -tol.psd:
        raise ValidityError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def check_density(rho: np.ndarray, tol: Tolerances = TOL, name: str = "rho") -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidityError(f"{name} must be a square matrix, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValidityError(f"{name} has non-finite entries")
    if not is_hermitian(rho, tol.hermitian * max(1.0, float(np.abs(rho).max(initial=0.0)))):
        raise ValidityError(f"{name} is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol.trace:
        raise ValidityError(f"{name} has trace {tr!r}, expected 1")
    w = np.linalg.eigvalsh(rho)
    if w.min() < -tol.psd:
        raise ValidityError(f"{name} has negative eigenvalue {w.min():.3e}")
    return rho


def fidelity(rho: np.ndarray, sigma: np.ndarray, tol: Tolerances = TOL) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(sigma) rho sqrt(sigma)))**2``."""
    rho = check_density(rho, tol, "rho")
    sigma = check_density(sigma, tol, "sigma")
    if rho.shape != sigma.shape:
        raise ValidityError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    # sqrt(F) is the trace norm of A^dag B for any rho = A A^dag, sigma = B B^dag; singular
    # values avoid the sqrt(eps) noise of square-rooting near-zero eigenvalues
    s = np.linalg.svd(_factor(rho).conj().T @ _factor(sigma), compute_uv=False)
    return min(max(float(s.sum()) ** 2, 0.0), 1.0)


def _factor(m: np.ndarray) -> np.ndarray:
    """``A`` with ``A A^dag = m`` over the numerically nonzero spectrum."""
    w, v = hermitian_eig(m)
    keep = w > max(float(w.max()), 0.0) * m.shape[0] * np.finfo(float).eps
    return v[:, keep] * np.sqrt(w[keep])


def trace_distance(rho: np.ndarray, sigma: np.ndarray, tol: Tolerances = TOL) -> float:
    rho = check_density(rho, tol, "rho")
    sigma = check_density(sigma, tol, "sigma")
    if rho.shape != sigma.shape:
        raise ValidityError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    w = np.linalg.eigvalsh(rho - sigma)
    return min(max(0.5 * float(np.abs(w).sum()), 0.0), 1.0)


# ---------------------------------------------------------------------------
# registers


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "registers", tuple((str(n), int(d)) for n, d in self.registers))
        names = self.names
        if len(set(names)) != len(names):
            raise LayoutError(f"duplicate register names in {names}")
        for n, d in self.registers:
            if d < 1:
                raise LayoutError(f"register {n} has dimension {d}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.registers)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def dim_of(self, names: Iterable[str]) -> int:
        lookup = dict(self.registers)
        return math.prod(lookup[n] for n in names)

    def indices(self, keep: Iterable[str]) -> list[int]:
        keep = list(keep)
        unknown = [n for n in keep if n not in self.names]
        if unknown:
            raise LayoutError(f"unknown register(s) {unknown}; layout has {list(self.names)}")
        return sorted(self.names.index(n) for n in set(keep))

    def sub(self, keep: Iterable[str]) -> "RegisterLayout":
        return RegisterLayout(tuple(self.registers[i] for i in self.indices(keep)))


def partial_trace(rho: np.ndarray, layout: RegisterLayout, keep: Iterable[str],
                  tol: Tolerances = TOL) -> np.ndarray:
    """Trace out every register of ``layout`` not named in ``keep``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (layout.dim, layout.dim):
        raise LayoutError(f"rho has shape {rho.shape}, layout dimension is {layout.dim}")
    kept = layout.indices(keep)
    n = len(layout.dims)
    traced = [i for i in range(n) if i not in kept]
    t = rho.reshape(layout.dims + layout.dims)
    # bring (kept, traced | kept, traced) and contract the traced pair
    perm = kept + traced + [n + i for i in kept] + [n + i for i in traced]
    t = t.transpose(perm)
    dk = math.prod(layout.dims[i] for i in kept)
    dt = math.prod(layout.dims[i] for i in traced)
    t = t.reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def reduce_pure(vec: np.ndarray, layout: RegisterLayout, keep: Iterable[str],
                tol: Tolerances = TOL) -> np.ndarray:
    """``Tr_rest |v><v|`` without forming the full density matrix."""
    vec = np.asarray(vec, dtype=complex)
    if vec.shape != (layout.dim,):
        raise LayoutError(f"vector has shape {vec.shape}, layout dimension is {layout.dim}")
    kept = layout.indices(keep)
    traced = [i for i in range(len(layout.dims)) if i not in kept]
    dk = math.prod(layout.dims[i] for i in kept)
    check_cap("reduced state", dk * dk, tol)
    m = vec.reshape(layout.dims).transpose(kept + traced).reshape(dk, -1)
    return m @ m.conj().T


@dataclass(frozen=True)
class LabeledState:
    """A superposition ``sum_l |l>_classical (x) |v_l>_quantum``.

    ``layout`` orders every register; those named in ``classical`` carry basis
    labels (one integer per register, in layout order), the others are dense.
    ``blocks`` maps label tuples to flat vectors over the quantum registers
    (also in layout order).
    """

    layout: RegisterLayout
    classical: frozenset[str]
    blocks: Mapping[tuple[int, ...], np.ndarray]
    tol: Tolerances = field(default=TOL, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "classical", frozenset(self.classical))
        self.layout.indices(self.classical)
        cdims = self.classical_dims
        qdim = self.quantum_dim
        for label, v in self.blocks.items():
            if len(label) != len(cdims) or any(not 0 <= x < d for x, d in zip(label, cdims)):
                raise LayoutError(f"label {label} outside classical ranges {cdims}")
            if np.shape(v) != (qdim,):
                raise LayoutError(f"block {label} has shape {np.shape(v)}, expected ({qdim},)")
        n2 = self.norm_sq()
        if abs(n2 - 1.0) > self.tol.norm:
            raise ValidityError(f"labeled state has squared norm {n2!r}")

    @property
    def classical_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.layout.names if n in self.classical)

    @property
    def quantum_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.layout.names if n not in self.classical)

    @property
    def classical_dims(self) -> tuple[int, ...]:
        lookup = dict(self.layout.registers)
        return tuple(lookup[n] for n in self.classical_names)

    @property
    def quantum_dims(self) -> tuple[int, ...]:
        lookup = dict(self.layout.registers)
        return tuple(lookup[n] for n in self.quantum_names)

    @property
    def quantum_dim(self) -> int:
        return math.prod(self.quantum_dims)

    def norm_sq(self) -> float:
        return float(sum(np.vdot(v, v).real for v in self.blocks.values()))

    def inner(self, other: "LabeledState") -> complex:
        """``<self|other>``; layouts must coincide."""
        if self.layout != other.layout or self.classical != other.classical:
            raise LayoutError("inner product needs identical layouts")
        return complex(sum(np.vdot(v, other.blocks[l]) for l, v in self.blocks.items()
                           if l in other.blocks))

    def to_dense(self) -> np.ndarray:
        check_cap("dense labeled state", self.layout.dim, self.tol)
        names = self.layout.names
        out = np.zeros(self.layout.dims, dtype=complex)
        for label, v in self.blocks.items():
            index = []
            ci = 0
            for n in names:
                if n in self.classical:
                    index.append(label[ci])
                    ci += 1
                else:
                    index.append(slice(None))
            out[tuple(index)] += np.asarray(v).reshape(self.quantum_dims)
        return out.reshape(-1)


def reduce_labeled(state: LabeledState, keep: Iterable[str]) -> np.ndarray:
    """Reduced density matrix on ``keep`` (registers ordered as in the layout).

    Blocks are grouped by their traced-out classical labels; only blocks in the
    same group interfere, so ``rho = sum_g W_g W_g^dagger`` with ``W_g`` the
    stacked kept parts of the group.
    """
    keep = set(keep)
    state.layout.indices(keep)
    tol = state.tol
    cnames, qnames = state.classical_names, state.quantum_names
    cdims, qdims = state.classical_dims, state.quantum_dims
    kc = [i for i, n in enumerate(cnames) if n in keep]
    tc = [i for i, n in enumerate(cnames) if n not in keep]
    kq = [i for i, n in enumerate(qnames) if n in keep]
    tq = [i for i, n in enumerate(qnames) if n not in keep]
    dkc = math.prod(cdims[i] for i in kc)
    dkq = math.prod(qdims[i] for i in kq)
    dtq = math.prod(qdims[i] for i in tq)
    dk = dkc * dkq
    check_cap("reduced state", dk * dk, tol)

    kc_dims = [cdims[i] for i in kc]
    group_index: dict[tuple[int, ...], int] = {}
    rows, cols, vals = [], [], []
    for label in sorted(state.blocks):
        g = group_index.setdefault(tuple(label[i] for i in tc), len(group_index))
        v = np.asarray(state.blocks[label], dtype=complex)
        m = v.reshape(qdims).transpose(kq + tq).reshape(dkq, dtq) if qdims else v.reshape(1, 1)
        row = int(np.ravel_multi_index([label[i] for i in kc], kc_dims)) if kc else 0
        r, c = np.indices((dkq, dtq))
        rows.append((row * dkq + r).ravel())
        cols.append((g * dtq + c).ravel())
        vals.append(m.ravel())
    # duplicate (row, col) entries are summed, i.e. blocks sharing all labels interfere
    w = scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dk, max(1, len(group_index)) * dtq),
    )
    rho = (w @ w.conj().T).toarray()

    # reorder from (kept classical, kept quantum) to layout order
    kept_names = [cnames[i] for i in kc] + [qnames[i] for i in kq]
    lookup = dict(state.layout.registers)
    target = [n for n in state.layout.names if n in keep]
    if kept_names != target:
        dims = [lookup[n] for n in kept_names]
        perm = [kept_names.index(n) for n in target]
        nk = len(dims)
        rho = rho.reshape(dims + dims).transpose(perm + [nk + p for p in perm]).reshape(dk, dk)
    return rho


# ---------------------------------------------------------------------------
# measurements


@dataclass(frozen=True)
class POVM:
    labels: tuple[Hashable, ...]
    elements: tuple[np.ndarray, ...]
    tol: Tolerances = field(default=TOL, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "elements", tuple(np.asarray(e, dtype=complex) for e in self.elements))
        if len(self.labels) != len(self.elements) or not self.elements:
            raise ValidityError("POVM needs one element per label")
        if len(set(self.labels)) != len(self.labels):
            raise ValidityError("POVM labels must be unique")
        d = self.dim
        for lab, e in zip(self.labels, self.elements):
            if e.shape != (d, d):
                raise ValidityError(f"element {lab!r} has shape {e.shape}, expected {(d, d)}")
            if not is_hermitian(e, self.tol.povm):
                raise ValidityError(f"element {lab!r} is not Hermitian")
            if np.linalg.eigvalsh(e).min() < -self.tol.povm:
                raise ValidityError(f"element {lab!r} is not PSD")
        dev = np.abs(sum(self.elements) - np.eye(d)).max()
        if dev > self.tol.povm:
            raise ValidityError(f"POVM elements sum to identity only within {dev:.3e}")

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def element(self, label: Hashable) -> np.ndarray:
        return self.elements[self.labels.index(label)]

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        return np.array([np.trace(e @ rho).real for e in self.elements])


def pgm(states: Sequence[np.ndarray], priors: Sequence[float], tol: Tolerances = TOL) -> POVM:
    """Pretty-good measurement for the ensemble ``{(p_k, rho_k)}``.

    Outcome ``k`` is ``S^{-1/2} p_k rho_k S^{-1/2}`` with ``S = sum p_k rho_k``
    (pseudo-inverse on the support); the residual lands on :data:`BOT`.
    """
    priors = np.asarray(priors, dtype=float)
    if len(states) != len(priors) or not len(states):
        raise ValidityError("need one prior per state")
    if abs(priors.sum() - 1.0) > tol.probability or priors.min() < 0:
        raise ValidityError(f"priors must be a distribution, sum={priors.sum()!r}")
    states = [np.asarray(s, dtype=complex) for s in states]
    d = states[0].shape[0]
    s = sum(p * r for p, r in zip(priors, states))
    w, v = hermitian_eig(s)
    inv = np.where(w > tol.pgm_cutoff, 1.0 / np.sqrt(np.where(w > tol.pgm_cutoff, w, 1.0)), 0.0)
    s_inv_half = (v * inv) @ v.conj().T
    elements = []
    for p, r in zip(priors, states):
        m = s_inv_half @ (p * r) @ s_inv_half
        elements.append(0.5 * (m + m.conj().T))
    residual = np.eye(d) - sum(elements)
    residual = 0.5 * (residual + residual.conj().T)
    return POVM(tuple(range(len(states))) + (BOT,), tuple(elements) + (residual,), tol)


def naimark_dilate(povm: POVM) -> np.ndarray:
    """Unitary ``V`` on system (x) ancilla with ``V|v>|0> = sum_a sqrt(E_a)|v>|a>``.

    Ancilla index ``a`` follows ``povm.labels``; the columns with nonzero ancilla
    input are an orthonormal completion of the isometry.
    """
    tol = povm.tol
    d, n = povm.dim, len(povm.elements)
    check_cap("Naimark dilation", (d * n) ** 2, tol)
    iso = np.zeros((d, n, d), dtype=complex)
    for a, e in enumerate(povm.elements):
        iso[:, a, :] = psd_sqrt(e, tol)
    iso = iso.reshape(d * n, d)
    dev = np.abs(iso.conj().T @ iso - np.eye(d)).max()
    if dev > tol.unitary:
        raise NumericError(f"POVM isometry is not isometric (deviation {dev:.3e})")
    comp = scipy.linalg.null_space(iso.conj().T, rcond=1e-10)
    if comp.shape[1] != d * n - d:
        raise NumericError(f"orthogonal completion has rank {comp.shape[1]}, need {d * n - d}")
    v = np.zeros((d, n, d, n), dtype=complex)
    v[:, :, :, 0] = iso.reshape(d, n, d)
    rest = comp.reshape(d, n, d, n - 1) if n > 1 else None
    if rest is not None:
        v[:, :, :, 1:] = rest
    v = v.reshape(d * n, d * n)
    dev = np.abs(v.conj().T @ v - np.eye(d * n)).max()
    if dev > tol.unitary:
        raise NumericError(f"Naimark completion is not unitary (deviation {dev:.3e})")
    return v


def ancilla_statistics(v: np.ndarray, vec: np.ndarray, n: int) -> np.ndarray:
    """Outcome distribution from measuring the ancilla of ``V(|vec>|0>)``."""
    d = vec.shape[0]
    inp = np.zeros((d, n), dtype=complex)
    inp[:, 0] = vec
    out = (v @ inp.reshape(-1)).reshape(d, n)
    return (np.abs(out) ** 2).sum(axis=0)


def unitarity_defect(u: np.ndarray) -> float:
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


# ---------------------------------------------------------------------------
# Uhlmann


def uhlmann_unitary(a: np.ndarray, b: np.ndarray, dx: int, dy: int) -> tuple[np.ndarray, float]:
    """Unitary ``W`` on Y maximising ``|<b|(I_X (x) W)|a>|`` for kets on X (x) Y.

    Returns ``(W, max_overlap)`` where the maximum equals ``sqrt(F)`` of the
    X-reductions.
    """
    am = np.asarray(a, dtype=complex).reshape(dx, dy)
    bm = np.asarray(b, dtype=complex).reshape(dx, dy)
    # <b|(I x W)|a> = Tr(B^dag A W^T)
    u, s, vh = np.linalg.svd(bm.conj().T @ am)
    wt = vh.conj().T @ u.conj().T
    return wt.T, float(s.sum())


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
