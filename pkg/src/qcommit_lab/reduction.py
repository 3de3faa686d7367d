"""From a binding attack to an inversion adversary, with exact accounting.

A :class:`CheatingAttack` is a unitary on the reveal register R = (R1, R2,
R3) and an ancilla Z, started with Z in the advice state ``tau``.  It is given
either densely on (R1h, R1y, R2, R3, Z), or block-diagonally in the R1 label:
``block(h, y)`` is then a unitary on (R2, R3, Z).

The inversion adversary gets ``phi_k^{(x)t}`` on R2, draws ``h`` and ``y``
uniformly, runs the attack on ``|h, y>|Phi_k^t>|0>_R3|tau>`` and outputs the
R3 measurement.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .config import TOL, Tolerances, ValidityError, check_cap
from .commit import CommitmentPair, CommitmentParams, build_pair
from .hashfam import HashFamily
from .owsg import IVOWSG, accept_table
from .qla import unitarity_defect


@dataclass(frozen=True)
class CheatingAttack:
    z_dim: int
    tau: np.ndarray
    block: Callable[[int, int], np.ndarray] | None = None
    dense: np.ndarray | None = None
    name: str = "custom"
    tol: Tolerances = field(default=TOL, compare=False, repr=False)

    def __post_init__(self):
        if (self.block is None) == (self.dense is None):
            raise ValidityError("an attack is either block-diagonal or dense, not both")
        tau = np.asarray(self.tau, dtype=complex)
        object.__setattr__(self, "tau", tau)
        if tau.shape != (self.z_dim,):
            raise ValidityError(f"advice state has shape {tau.shape}, Z has dimension {self.z_dim}")
        if abs(np.vdot(tau, tau).real - 1.0) > self.tol.norm:
            raise ValidityError("advice state is not normalized")
        if self.dense is not None:
            d = np.asarray(self.dense, dtype=complex)
            object.__setattr__(self, "dense", d)
            if d.ndim != 2 or d.shape[0] != d.shape[1]:
                raise ValidityError(f"dense attack must be square, got {d.shape}")
            defect = unitarity_defect(d)
            if defect > self.tol.unitary:
                raise ValidityError(f"dense attack is not unitary (defect {defect:.3e})")

    def evolve(self, h: int, y: int, x: np.ndarray, fam: HashFamily, r3_dim: int) -> dict[tuple[int, int], np.ndarray]:
        """Apply ``I_C2 (x) U`` to ``|h,y>_R1 (x) X_{C2,R2} (x) |0>_R3 (x) |tau>_Z``.

        ``x`` is the (C2, R2) amplitude matrix.  Returns the output split by
        R1 label, each as an array over (C2, R2, R3, Z).
        """
        dc2, dr2 = x.shape
        inp = np.zeros((dc2, dr2, r3_dim, self.z_dim), dtype=complex)
        inp[:, :, 0, :] = x[:, :, None] * self.tau[None, None, :]
        tail = dr2 * r3_dim * self.z_dim
        if self.block is not None:
            u = self.block(h, y)
            if u.shape != (tail, tail):
                raise ValidityError(f"block unitary has shape {u.shape}, expected {(tail, tail)}")
            return {(h, y): (inp.reshape(dc2, tail) @ u.T).reshape(dc2, dr2, r3_dim, self.z_dim)}
        nr1 = fam.size * fam.range_size
        if self.dense.shape[0] != nr1 * tail:
            raise ValidityError(f"dense attack has dimension {self.dense.shape[0]}, "
                                f"R1 (x) R2 (x) R3 (x) Z has {nr1 * tail}")
        col = h * fam.range_size + y
        # only the columns for R1 = (h, y) contribute
        cols = self.dense[:, col * tail:(col + 1) * tail]
        out = (inp.reshape(dc2, tail) @ cols.T).reshape(dc2, nr1, dr2, r3_dim, self.z_dim)
        res = {}
        for idx in range(nr1):
            blk = out[:, idx]
            if np.any(blk):
                res[divmod(idx, fam.range_size)] = blk
        return res


def identity_attack(inst: IVOWSG, params: CommitmentParams, z_dim: int = 1) -> CheatingAttack:
    dim = inst.dim_a**params.t * inst.num_keys * z_dim
    eye = np.eye(dim, dtype=complex)
    return CheatingAttack(z_dim, np.eye(z_dim)[0], block=lambda h, y: eye, name="identity")


def dense_attack(unitary: np.ndarray, z_dim: int, tau: np.ndarray | None = None,
                 name: str = "dense") -> CheatingAttack:
    tau = np.eye(z_dim)[0] if tau is None else tau
    return CheatingAttack(z_dim, tau, dense=unitary, name=name)


# ---------------------------------------------------------------------------
# dense unitary files: little-endian uint64 dimension, then dim*dim complex128 row-major

_HEADER = struct.Struct("<Q")


def write_unitary(path: str | Path, u: np.ndarray) -> None:
    u = np.asarray(u, dtype="<c16")
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"unitary must be square, got {u.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(u.shape[0]))
        fh.write(np.ascontiguousarray(u).tobytes())


def read_unitary(path: str | Path, tol: Tolerances = TOL) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValidityError(f"{path}: truncated header")
    (dim,) = _HEADER.unpack_from(raw)
    check_cap(f"unitary file {path}", dim * dim, tol)
    body = raw[_HEADER.size:]
    if len(body) != dim * dim * 16:
        raise ValidityError(f"{path}: expected {dim * dim * 16} payload bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<c16").reshape(dim, dim).astype(complex)


# ---------------------------------------------------------------------------
# overlaps


@dataclass(frozen=True)
class AttackOverlap:
    z0_overlap: complex
    binding_norm_sq: float
    chain: dict

    @property
    def q(self) -> float:
        return math.inf if self.binding_norm_sq <= 0 else 1.0 / self.binding_norm_sq


def attack_overlap(pair: CommitmentPair, attack: CheatingAttack, G: frozenset[int] | None = None) -> AttackOverlap:
    """``<psi1|(I_C (x) U)|psi0>|tau>`` as a vector on Z, plus the binding chain terms.

    Chain terms (weights ``w = Pr[k]/|H|``, ``z_{k,h}`` the per-block Z vector):
    ``T0 = |sum w z|^2``, ``T1 = (sum w |z|)^2``, ``T2 = sum w |z|^2`` and
    ``T3 = sum w |<k|_R3 U ...|^2``, with ``T3`` split over ``k in G``.
    """
    inst, fam, t = pair.inst, pair.family, pair.params.t
    nk = inst.num_keys
    table = fam.table()
    total = np.zeros(attack.z_dim, dtype=complex)
    t1 = t2 = t3_in = t3_out = 0.0
    for k in range(nk):
        pk = float(inst.key_probs[k])
        if pk <= 0:
            continue
        x = inst.copies(k, t)
        w = pk / fam.size
        for h in range(fam.size):
            y = int(table[h, k])
            outs = attack.evolve(h, y, x, fam, nk)
            blk = outs.get((h, y))
            z = np.zeros(attack.z_dim, dtype=complex) if blk is None else \
                np.einsum("ab,abz->z", x.conj(), blk[:, :, k, :])
            total += w * z
            nz = float(np.vdot(z, z).real)
            t1 += w * math.sqrt(nz)
            t2 += w * nz
            r3 = sum(float(np.vdot(o[:, :, k, :], o[:, :, k, :]).real) for o in outs.values())
            if G is None or k in G:
                t3_in += w * r3
            else:
                t3_out += w * r3
    t0 = float(np.vdot(total, total).real)
    chain = {"T0": t0, "T1": t1 * t1, "T2": t2, "T3": t3_in + t3_out,
             "T3_in_G": t3_in, "T3_off_G": t3_out}
    return AttackOverlap(complex(total[0]), t0, chain)


# ---------------------------------------------------------------------------
# adversary


def acceptance_set(inst: IVOWSG, threshold: float = 0.5) -> frozenset[int]:
    """``G = {k : Pr[Ver(k, phi_k) accepts] >= threshold}``."""
    diag = np.diag(accept_table(inst))
    return frozenset(int(k) for k in np.flatnonzero(diag >= threshold - inst.tol.threshold))


def adversary_distribution(inst: IVOWSG, fam: HashFamily, attack: CheatingAttack, t: int) -> np.ndarray:
    """``out[k, k']``: probability the inversion adversary outputs ``k'`` on key ``k``."""
    nk = inst.num_keys
    out = np.zeros((nk, nk))
    scale = 1.0 / (fam.size * fam.range_size)
    for k in range(nk):
        x = inst.copies(k, t)
        acc = np.zeros(nk)
        for h in range(fam.size):
            for y in range(fam.range_size):
                for o in attack.evolve(h, y, x, fam, nk).values():
                    acc += (np.abs(o) ** 2).sum(axis=(0, 1, 3))
        out[k] = acc * scale
    return out


@dataclass(frozen=True)
class AdversaryReport:
    success_in_G: float
    win_prob: float
    q: float
    binding_norm_sq: float
    floor_two_r: int
    Y_size: int
    G: tuple[int, ...]
    min_accept_on_G: float
    restricted_in_G: float
    chain: dict
    checks: dict

    @property
    def bound_rhs(self) -> float:
        """``1 / (8 q floor(2^r))``."""
        return 1.0 / (8.0 * self.q * self.floor_two_r)

    @property
    def bound_rhs_before_acceptance(self) -> float:
        """``1 / (4 q floor(2^r))``."""
        return 1.0 / (4.0 * self.q * self.floor_two_r)

    @property
    def verdict(self) -> str:
        return "bound satisfied" if self.win_prob >= self.bound_rhs - TOL.probability else "bound violated"

    def as_dict(self) -> dict:
        return {
            "success_in_G": self.success_in_G,
            "win_prob": self.win_prob,
            "q": self.q,
            "binding_overlap_sq": self.binding_norm_sq,
            "floor_two_pow_r": self.floor_two_r,
            "Y_size": self.Y_size,
            "G": list(self.G),
            "min_accept_on_G": self.min_accept_on_G,
            "restricted_in_G": self.restricted_in_G,
            "bound_rhs_8q": self.bound_rhs,
            "bound_rhs_4q": self.bound_rhs_before_acceptance,
            "success_meets_4q": self.success_in_G >= self.bound_rhs_before_acceptance - TOL.probability,
            "win_meets_8q": self.win_prob >= self.bound_rhs - TOL.probability,
            "chain": self.chain,
            "checks": self.checks,
            "verdict": self.verdict,
        }


def run_adversary(inst: IVOWSG, fam: HashFamily, attack: CheatingAttack, params: CommitmentParams,
                  pair: CommitmentPair | None = None) -> AdversaryReport:
    """Exact success and win probabilities of the inversion adversary, and the chain checks."""
    if fam != params.family:
        raise ValidityError("hash family does not match the commitment parameters")
    pair = build_pair(inst, params) if pair is None else pair
    G = acceptance_set(inst)
    ov = attack_overlap(pair, attack, G)
    dist = adversary_distribution(inst, fam, attack, params.t)
    table = accept_table(inst)  # [k', k]
    probs = inst.key_probs
    in_g = np.array([k in G for k in range(inst.num_keys)])
    success = float((probs * np.diag(dist))[in_g].sum())
    win = float(np.einsum("k,kp,pk->", probs, dist, table))
    diag = np.diag(table)
    min_acc = float(diag[in_g].min()) if in_g.any() else 0.0
    ch = ov.chain
    ny = fam.range_size
    slack = 1e-12
    checks = {
        "T0_le_T1": ch["T0"] <= ch["T1"] + slack,
        "T1_le_T2": ch["T1"] <= ch["T2"] + slack,
        "T2_le_T3": ch["T2"] <= ch["T3"] + slack,
        "restriction_step": success >= ch["T3_in_G"] / ny - slack,
        "split_step": success * ny + ch["T3_off_G"] >= ov.binding_norm_sq - slack,
        "acceptance_step": win >= success * min_acc - slack,
        "half_acceptance_step": win >= success / 2 - slack,
    }
    return AdversaryReport(
        success_in_G=success, win_prob=win, q=ov.q, binding_norm_sq=ov.binding_norm_sq,
        floor_two_r=params.floor_two_r, Y_size=ny, G=tuple(sorted(G)), min_accept_on_G=min_acc,
        restricted_in_G=ch["T3_in_G"], chain=ch, checks=checks,
    )


# ---------------------------------------------------------------------------
# contradiction


@dataclass(frozen=True)
class Contradiction:
    lam: int
    delta: float
    q: float
    r: float
    margin_log2: float

    @property
    def positive(self) -> bool:
        return self.margin_log2 > 0

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "delta": self.delta, "q": self.q, "r": self.r,
                "log2_margin": self.margin_log2, "positive": self.positive}


def contradiction_sign(delta: float, q: float, r: float, lam: int = 0) -> Contradiction:
    """Sign of ``1/(8 q floor(2^r)) - 2^-delta``, computed as ``delta - log2(8 q floor(2^r))``."""
    if q <= 0 or r < 0:
        raise ValueError("need q > 0 and r >= 0")
    if math.isinf(delta):
        margin = math.inf
    else:
        margin = delta - (3.0 + math.log2(q) + math.log2(math.floor(2.0**r)))
    return Contradiction(lam, delta, q, r, margin)


def contradiction_check(report: AdversaryReport | None, delta_emp: float, q: float, r: float,
                        D: float, lambdas=()) -> dict:
    """Desk verdict at ``delta_emp`` and asymptotic verdicts for ``delta = (0.5 + D) lam``."""
    desk = contradiction_sign(delta_emp, q, r)
    scan = [contradiction_sign((0.5 + D) * lam, q, (0.5 + D / 2) * lam, lam) for lam in lambdas]
    positive = [c.lam for c in scan if c.positive]
    crossover = None
    for prev, cur in zip(scan, scan[1:]):
        if prev.positive != cur.positive:
            crossover = cur.lam
    out = {
        "desk": desk.as_dict(),
        "scan": [c.as_dict() for c in scan],
        "positive_lambdas": positive,
        "crossover_lambda": crossover,
    }
    if report is not None:
        out["desk_win_vs_threshold"] = report.win_prob - 2.0**-delta_emp if not math.isinf(delta_emp) else report.win_prob
    return out
