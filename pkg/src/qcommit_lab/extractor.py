"""Key extraction from the reveal register, and the unitary it induces.

Two layers:

* the classical extractor: estimate every verification probability
  (exactly, or by per-candidate sampling with a Hoeffding sample count),
  keep the candidates with estimate >= 3/4, and return the unique candidate
  that hashes to the revealed value;
* a concrete POVM on (R1, R2) realising extraction (pretty-good measurement
  on the copies, with outcomes that disagree with the hash relabelled to
  bot), its Naimark dilation, and ``U = V^dag CNOT_{Z->R3} V``.

Z carries one label per key plus bot (index ``2^lam``).  The CNOT adds the Z
label into R3 by bitwise XOR; bot leaves R3 untouched, so for ``k = 0`` the
bot outcome also lands on the all-zero reveal content.  That coincidence is
reported separately by :func:`summary_overlap`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .commit import CommitmentPair
from .config import TOL, DimensionCapError, Tolerances, ValidityError, check_cap
from .hashfam import HashFamily, HashFn
from .owsg import IVOWSG, accept_table
from .qla import BOT, POVM, naimark_dilate, pgm, unitarity_defect
from .reduction import CheatingAttack, attack_overlap

BACKENDS = ("exact", "sampled")


@dataclass(frozen=True)
class ShadowConfig:
    epsilon: float = 1 / 8
    omega: float | None = None
    threshold: float = 3 / 4
    backend: str = "exact"
    t_samples: int | None = None

    def __post_init__(self):
        if not 0 < self.epsilon < self.threshold < 1:
            raise ValueError("need 0 < epsilon < threshold < 1")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.omega is not None and not 0 < self.omega < 1:
            raise ValueError(f"omega must lie in (0, 1), got {self.omega}")

    def omega_for(self, lam: int) -> float:
        return 2.0**-lam if self.omega is None else self.omega

    def samples_for(self, lam: int) -> int:
        if self.t_samples is not None:
            return self.t_samples
        return hoeffding_samples(1 << lam, self.epsilon, self.omega_for(lam))


def hoeffding_samples(num_observables: int, epsilon: float, omega: float) -> int:
    """Trials per observable so that all estimates are epsilon-accurate w.p. >= 1 - omega."""
    return math.ceil(math.log(2 * num_observables / omega) / (2 * epsilon**2))


def shadow_estimate(inst: IVOWSG, k: int, cfg: ShadowConfig, rng: np.random.Generator | None = None,
                    table: np.ndarray | None = None) -> np.ndarray:
    """Estimates ``b[k']`` of ``Pr[Ver(k', phi_k) accepts]`` for every candidate."""
    table = accept_table(inst) if table is None else table
    p = np.clip(table[:, k], 0.0, 1.0)
    if cfg.backend == "exact":
        return p.copy()
    if rng is None:
        raise ValueError("the sampled backend needs a seeded generator")
    n = cfg.samples_for(inst.lam)
    streams = rng.spawn(len(p))
    return np.array([s.binomial(n, q) / n for s, q in zip(streams, p)])


def build_list(est: np.ndarray, cfg: ShadowConfig, tol: Tolerances = TOL) -> frozenset[int]:
    return frozenset(int(x) for x in np.flatnonzero(np.asarray(est) >= cfg.threshold - tol.threshold))


def extract(h: HashFn, y: int, L) -> int | None:
    """The unique candidate of ``L`` hashing to ``y``; ``None`` stands for bot."""
    hits = [x for x in L if h(x) == y]
    return hits[0] if len(hits) == 1 else None


def shadow_failure_rate(inst: IVOWSG, cfg: ShadowConfig, runs: int, seed: int) -> tuple[float, int]:
    """Fraction of seeded runs where some estimate misses by more than epsilon."""
    table = accept_table(inst)
    fails = 0
    for child in np.random.SeedSequence(seed).spawn(runs):
        rng = np.random.default_rng(child)
        k = int(rng.choice(inst.num_keys, p=inst.key_probs))
        est = shadow_estimate(inst, k, cfg, rng, table)
        fails += bool(np.any(np.abs(est - table[:, k]) > cfg.epsilon))
    return fails / runs, cfg.samples_for(inst.lam)


# ---------------------------------------------------------------------------
# classical success probability


@dataclass(frozen=True)
class ExtractionReport:
    backend: str
    success: float
    per_key_success: tuple[float, ...]
    G_sizes: tuple[int, ...]
    L_sizes: tuple[int, ...]
    pr_k_in_L_sub_G: float
    pairwise_bounds: tuple[float, ...]
    sandwich: tuple[bool, ...]
    Y_size: int

    def as_dict(self) -> dict:
        return {
            "backend": self.backend,
            "success_prob": self.success,
            "per_key_success": list(self.per_key_success),
            "G_sizes": list(self.G_sizes),
            "L_sizes": list(self.L_sizes),
            "pr_k_in_L_subset_G": self.pr_k_in_L_sub_G,
            "pairwise_bounds": list(self.pairwise_bounds),
            "sandwich_holds": list(self.sandwich),
            "Y_size": self.Y_size,
        }


def success_given_lists(inst: IVOWSG, fam: HashFamily, lists, backend: str = "exact") -> ExtractionReport:
    """Enumerate every hash function for the given per-key candidate lists."""
    table = accept_table(inst)
    hv = fam.table()
    tol = inst.tol.threshold
    per_key, g_sizes, l_sizes, bounds, sandwich = [], [], [], [], []
    in_l_sub_g = 0.0
    for k in range(inst.num_keys):
        L = sorted(lists[k])
        p = table[:, k]
        G = {int(x) for x in np.flatnonzero(p >= 0.5 - tol)}
        top = {int(x) for x in np.flatnonzero(p >= 7 / 8 - tol)}
        g_sizes.append(len(G))
        l_sizes.append(len(L))
        bounds.append(1.0 - (len(G) - 1) / fam.range_size)
        sandwich.append(top <= set(L) <= G)
        if k in L and set(L) <= G:
            in_l_sub_g += float(inst.key_probs[k])
        if k not in L:
            per_key.append(0.0)
            continue
        same = hv[:, L] == hv[:, [k]]
        per_key.append(float(np.mean(same.sum(axis=1) == 1)))
    success = float(np.dot(inst.key_probs, per_key))
    return ExtractionReport(backend, success, tuple(per_key), tuple(g_sizes), tuple(l_sizes),
                            in_l_sub_g, tuple(bounds), tuple(sandwich), fam.range_size)


def success_prob_exact(inst: IVOWSG, fam: HashFamily, cfg: ShadowConfig = ShadowConfig()) -> ExtractionReport:
    if cfg.backend != "exact":
        raise ValueError("success_prob_exact needs the exact backend")
    table = accept_table(inst)
    lists = [build_list(shadow_estimate(inst, k, cfg, table=table), cfg, inst.tol) for k in range(inst.num_keys)]
    return success_given_lists(inst, fam, lists)


def success_prob_sampled(inst: IVOWSG, fam: HashFamily, cfg: ShadowConfig, seed: int) -> ExtractionReport:
    """One sampled list per key (lists and hash are independent given the key)."""
    table = accept_table(inst)
    lists = []
    for k, child in enumerate(np.random.SeedSequence(seed).spawn(inst.num_keys)):
        est = shadow_estimate(inst, k, cfg, np.random.default_rng(child), table)
        lists.append(build_list(est, cfg, inst.tol))
    return success_given_lists(inst, fam, lists, backend="sampled")


# ---------------------------------------------------------------------------
# POVM realisation


@dataclass(frozen=True)
class ExtractorPOVM:
    """``Pi^(a) = sum_{h,y} |h,y><h,y| (x) M^(h,y,a)``, stored per ``(h, y)`` block."""

    fam: HashFamily
    base: POVM
    relabel: bool = True
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def labels(self) -> tuple:
        return self.base.labels

    @property
    def num_keys(self) -> int:
        return self.fam.num_keys

    def pattern(self, h: int, y: int) -> tuple[int, ...]:
        if not self.relabel:
            return tuple(range(self.num_keys))
        row = self.fam.table()[h]
        return tuple(int(x) for x in np.flatnonzero(row == y))

    def block(self, h: int, y: int) -> POVM:
        return self.block_for_pattern(self.pattern(h, y))

    def block_for_pattern(self, key: tuple[int, ...]) -> POVM:
        """Keep the PGM elements for keys in ``key``, send the rest to bot."""
        if key not in self._cache:
            keep = set(key)
            zero = np.zeros_like(self.base.elements[0])
            elems = [self.base.element(x) if x in keep else zero for x in range(self.num_keys)]
            dropped = [self.base.element(x) for x in range(self.num_keys) if x not in keep]
            elems.append(self.base.element(BOT) + sum(dropped, zero))
            self._cache[key] = POVM(self.base.labels, tuple(elems), self.base.tol)
        return self._cache[key]

    def to_dense(self, tol: Tolerances = TOL) -> POVM:
        nr1 = self.fam.size * self.fam.range_size
        d = self.base.dim
        check_cap("dense extractor POVM", (nr1 * d) ** 2 * len(self.labels), tol)
        elems = []
        for a in range(len(self.labels)):
            e = np.zeros((nr1, d, nr1, d), dtype=complex)
            for h in range(self.fam.size):
                for y in range(self.fam.range_size):
                    i = h * self.fam.range_size + y
                    e[i, :, i, :] = self.block(h, y).elements[a]
            elems.append(e.reshape(nr1 * d, nr1 * d))
        return POVM(self.labels, tuple(elems), tol)


def build_extractor_povm(inst: IVOWSG, fam: HashFamily, t: int, relabel: bool = True) -> ExtractorPOVM:
    """PGM over ``{phi_k^t}`` with priors ``Pr[k]``, relabelled per hash block."""
    if fam.lam != inst.lam:
        raise ValidityError("hash family and instance disagree on lambda")
    dim = inst.dim_a**t
    check_cap("extractor PGM", dim * dim * (inst.num_keys + 1), inst.tol)
    states = [inst.copies_state(k, t) for k in range(inst.num_keys)]
    return ExtractorPOVM(fam, pgm(states, inst.key_probs, inst.tol), relabel)


@dataclass(frozen=True)
class SummaryOverlap:
    key_sum: float
    bot_coincidence: float

    @property
    def total(self) -> float:
        return self.key_sum + self.bot_coincidence


def summary_overlap(inst: IVOWSG, povm: ExtractorPOVM, t: int) -> SummaryOverlap:
    """``sum_{k,h} Pr[k]/|H| <Pi^(k)>`` on ``|h,h(k)>|Phi_k^t>``, and the bot/zero-key term."""
    fam = povm.fam
    hv = fam.table()
    key_sum = coincidence = 0.0
    for k in range(inst.num_keys):
        pk = float(inst.key_probs[k])
        if pk <= 0:
            continue
        rho = inst.copies_state(k, t)
        w = pk / fam.size
        for h in range(fam.size):
            blk = povm.block(h, int(hv[h, k]))
            key_sum += w * float(np.trace(blk.elements[k] @ rho).real)
            if k == 0:
                coincidence += w * float(np.trace(blk.elements[-1] @ rho).real)
    return SummaryOverlap(key_sum, coincidence)


def cnot_z_to_r3(num_keys: int) -> np.ndarray:
    """Permutation on (R3, Z): ``|r, a> -> |r XOR a, a>``; bot (``a = num_keys``) is inert."""
    nz = num_keys + 1
    p = np.zeros((num_keys, nz, num_keys, nz))
    for r in range(num_keys):
        for a in range(nz):
            p[(r ^ a) if a < num_keys else r, a, r, a] = 1.0
    return p.reshape(num_keys * nz, num_keys * nz)


def extraction_unitary(block: POVM, num_keys: int) -> tuple[np.ndarray, np.ndarray]:
    """``(V, U)`` with ``V`` the Naimark dilation on (R2, Z) and ``U = V^dag CNOT V`` on (R2, R3, Z)."""
    v = naimark_dilate(block)
    d, nz = block.dim, len(block.labels)
    vt = v.reshape(d, nz, d, nz)
    eye_r3 = np.eye(num_keys)
    # V (x) I_R3 with axes ordered (R2, R3, Z)
    vfull = np.einsum("azbw,rs->arzbsw", vt, eye_r3).reshape(d * num_keys * nz, d * num_keys * nz)
    cfull = np.kron(np.eye(d), cnot_z_to_r3(num_keys))
    return v, vfull.conj().T @ cfull @ vfull


def extractor_attack(povm: ExtractorPOVM, name: str = "extractor") -> CheatingAttack:
    nk = povm.num_keys

    @lru_cache(maxsize=None)
    def by_pattern(pattern: tuple[int, ...]) -> np.ndarray:
        _, u = extraction_unitary(povm.block_for_pattern(pattern), nk)
        return u

    def block(h: int, y: int) -> np.ndarray:
        return by_pattern(povm.pattern(h, y))

    return CheatingAttack(nk + 1, np.eye(nk + 1)[0], block=block, name=name)


@dataclass(frozen=True)
class UhlmannReport:
    naimark_overlap: float
    imag_part: float
    summary: SummaryOverlap
    binding_norm_sq: float
    max_unitarity_defect: float
    path: str

    @property
    def agreement(self) -> float:
        return abs(self.naimark_overlap - self.summary.total)

    def as_dict(self) -> dict:
        return {
            "naimark_overlap": self.naimark_overlap,
            "imag_part": self.imag_part,
            "summary_key_sum": self.summary.key_sum,
            "summary_bot_coincidence": self.summary.bot_coincidence,
            "summary_total": self.summary.total,
            "two_path_gap": self.agreement,
            "binding_overlap_sq": self.binding_norm_sq,
            "max_unitarity_defect": self.max_unitarity_defect,
            "path": self.path,
        }


def uhlmann_unitary_overlap(pair: CommitmentPair, povm: ExtractorPOVM) -> UhlmannReport:
    """``<psi1|<0|_Z U |psi0>|0>_Z`` through the materialised dilations.

    ``U`` is block-diagonal in the R1 label, so one dilation per distinct
    hash-preimage pattern is materialised.  If even one block exceeds the
    dense cap the POVM-sum path alone is reported.
    """
    inst, t = pair.inst, pair.params.t
    summary = summary_overlap(inst, povm, t)
    nk = inst.num_keys
    d = povm.base.dim
    try:
        check_cap("extraction unitary block", (d * nk * (nk + 1)) ** 2, inst.tol)
    except DimensionCapError:
        return UhlmannReport(summary.total, 0.0, summary, float("nan"), float("nan"), "povm-sum")
    attack = extractor_attack(povm)
    ov = attack_overlap(pair, attack)
    defects = []
    for pattern in sorted({povm.pattern(h, y) for h in range(povm.fam.size) for y in range(povm.fam.range_size)}):
        v, u = extraction_unitary(povm.block_for_pattern(pattern), nk)
        defects.append(max(unitarity_defect(v), unitarity_defect(u)))
    return UhlmannReport(ov.z0_overlap.real, ov.z0_overlap.imag, summary, ov.binding_norm_sq,
                         max(defects), "naimark-blockwise")
