"""Commitment states built from an IV-OWSG, and their hiding metrics.

Register layout, in order::

    C1k  key k               classical, 2^lam
    C1h  hash index h        classical, |H|
    R1h  hash index h        classical, |H|
    R1y  hash value y        classical, 2^m
    C2   B_1..B_t            quantum,   dim_B^t
    R2   A_1..A_t            quantum,   dim_A^t
    R3   revealed key        classical, 2^lam

``psi_b = sum_{k,h} sqrt(Pr[k]/|H|) |k,h>|h,h(k)>|Phi_k^t>|x_b(k)>`` with
``x_0(k) = 0`` and ``x_1(k) = k``.  The commitment register is
``C = (C1k, C1h, C2)``; everything else is the reveal register.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import TOL, Tolerances, ValidityError, check_cap
from .hashfam import HashFamily
from .owsg import IVOWSG
from .qla import LabeledState, RegisterLayout, fidelity, reduce_labeled, trace_distance

C_REGISTERS = frozenset({"C1k", "C1h", "C2"})
R_REGISTERS = frozenset({"R1h", "R1y", "R2", "R3"})
CLASSICAL = frozenset({"C1k", "C1h", "R1h", "R1y", "R3"})


@dataclass(frozen=True)
class CommitmentParams:
    lam: int
    D: float = 1.0
    t: int = 1
    p: float = 2.0
    m_override: int | None = None

    def __post_init__(self):
        if self.lam < 1:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.D <= 0:
            raise ValueError(f"D must be positive, got {self.D}")
        if self.t < 0 or int(self.t) != self.t:
            raise ValueError(f"t must be a non-negative integer, got {self.t}")
        if self.p <= 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if self.m_override is not None and self.m_override < 1:
            raise ValueError(f"m must be positive, got {self.m_override}")

    @property
    def r(self) -> float:
        return (0.5 + self.D / 2.0) * self.lam

    @property
    def m(self) -> int:
        """Output bits; by default the smallest power-of-two range with ``|Y| >= 2 * 2^r``."""
        if self.m_override is not None:
            return self.m_override
        return math.ceil(self.r) + 1

    @property
    def floor_two_r(self) -> int:
        return math.floor(2.0**self.r)

    @property
    def family(self) -> HashFamily:
        return HashFamily(self.lam, self.m)

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "D": self.D,
            "t": self.t,
            "p": self.p,
            "r": self.r,
            "two_pow_r": 2.0**self.r,
            "floor_two_pow_r": self.floor_two_r,
            "m": self.m,
            "Y_size": 1 << self.m,
            "Y_at_least_two_floor_2r": (1 << self.m) >= 2 * self.floor_two_r,
            "H_size": self.family.size,
        }


@dataclass(frozen=True)
class CommitmentPair:
    psi0: LabeledState
    psi1: LabeledState
    inst: IVOWSG
    params: CommitmentParams

    @property
    def family(self) -> HashFamily:
        return self.params.family

    @property
    def layout(self) -> RegisterLayout:
        return self.psi0.layout

    @property
    def block_count(self) -> int:
        return len(self.psi0.blocks)


def commitment_layout(inst: IVOWSG, params: CommitmentParams) -> RegisterLayout:
    fam = params.family
    t = params.t
    return RegisterLayout((
        ("C1k", inst.num_keys),
        ("C1h", fam.size),
        ("R1h", fam.size),
        ("R1y", fam.range_size),
        ("C2", inst.dim_b**t),
        ("R2", inst.dim_a**t),
        ("R3", inst.num_keys),
    ))


def build_pair(inst: IVOWSG, params: CommitmentParams, tol: Tolerances = TOL) -> CommitmentPair:
    if params.lam != inst.lam:
        raise ValidityError(f"params.lam={params.lam} but instance has lam={inst.lam}")
    fam = params.family
    layout = commitment_layout(inst, params)
    qdim = layout.dim_of(["C2", "R2"])
    check_cap("commitment blocks", qdim * inst.num_keys * fam.size, tol)
    table = fam.table()
    blocks0, blocks1 = {}, {}
    for k in range(inst.num_keys):
        pk = float(inst.key_probs[k])
        if pk <= 0.0:
            continue
        vec = inst.copies(k, params.t).reshape(-1) * math.sqrt(pk / fam.size)
        for h in range(fam.size):
            y = int(table[h, k])
            blocks0[(k, h, h, y, 0)] = vec
            blocks1[(k, h, h, y, k)] = vec
    return CommitmentPair(
        LabeledState(layout, CLASSICAL, blocks0, tol),
        LabeledState(layout, CLASSICAL, blocks1, tol),
        inst, params,
    )


def reduced_commitments(pair: CommitmentPair) -> tuple[np.ndarray, np.ndarray]:
    return reduce_labeled(pair.psi0, C_REGISTERS), reduce_labeled(pair.psi1, C_REGISTERS)


@dataclass(frozen=True)
class HidingMetrics:
    td_C: float
    fid_C: float

    @property
    def fvdg_lower_margin(self) -> float:
        """``td - (1 - sqrt(F))``; non-negative by Fuchs-van de Graaf."""
        return self.td_C - (1.0 - math.sqrt(self.fid_C))

    @property
    def fvdg_upper_margin(self) -> float:
        """``sqrt(1 - F) - td``; non-negative by Fuchs-van de Graaf."""
        return math.sqrt(max(0.0, 1.0 - self.fid_C)) - self.td_C

    def as_dict(self) -> dict:
        return {
            "td_C": self.td_C,
            "fid_C": self.fid_C,
            "sqrt_fid_C": math.sqrt(self.fid_C),
            "fvdg_lower_margin": self.fvdg_lower_margin,
            "fvdg_upper_margin": self.fvdg_upper_margin,
        }


def hiding_metrics(pair: CommitmentPair) -> HidingMetrics:
    """Trace distance and fidelity of the two commitment-register reductions.

    ``sqrt(fid_C)`` is also the largest overlap any operation on the reveal
    register (with ancilla) can achieve between the two commitments.
    """
    rho0, rho1 = reduced_commitments(pair)
    tol = pair.psi0.tol
    return HidingMetrics(trace_distance(rho0, rho1, tol), fidelity(rho0, rho1, tol))


@dataclass(frozen=True)
class HidingVerdict:
    s: float
    fid_lower: float
    td_upper: float
    fid_ok: bool
    td_ok: bool

    @property
    def ok(self) -> bool:
        return self.fid_ok and self.td_ok

    def as_dict(self) -> dict:
        return {
            "s": self.s,
            "fid_lower_bound": self.fid_lower,
            "td_upper_bound": self.td_upper,
            "fid_ok": self.fid_ok,
            "td_ok": self.td_ok,
        }


def hiding_threshold_check(metrics: HidingMetrics, s: float, tol: float = 1e-9) -> HidingVerdict:
    """Check ``fid_C >= s^2`` and ``td_C <= sqrt(1 - s^2)`` for an overlap ``s``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    lower = s * s
    upper = math.sqrt(1.0 - lower)
    return HidingVerdict(s, lower, upper, metrics.fid_C >= lower - tol, metrics.td_C <= upper + tol)
