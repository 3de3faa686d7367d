"""Pairwise-independent hashing ``x -> top_m(a*x + b)`` over GF(2^n).

Keys are ``lam``-bit words embedded in GF(2^n) with ``n = max(lam, m)``; the
output is the top ``m`` bits of the field element.  Since ``x -> (a*x + b,
a*x' + b)`` is a bijection of GF(2^n)^2 for ``x != x'``, every truncation is
exactly pairwise independent.

Reduction polynomials (bit ``i`` is the coefficient of ``x^i``):

====  ============  =========================
 n     polynomial    as integer
====  ============  =========================
 1     x + 1         0b11
 2     x^2+x+1       0b111
 3     x^3+x+1       0b1011
 4     x^4+x+1       0b10011
 5     x^5+x^2+1     0b100101
 6     x^6+x+1       0b1000011
 7     x^7+x+1       0b10000011
 8     x^8+x^4+x^3+x+1  0b100011011
====  ============  =========================
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterator

import numpy as np

IRREDUCIBLE = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011011,
}
MAX_FIELD_BITS = 8


def gf_mul(a: int, b: int, n: int) -> int:
    """Carry-less product of ``a`` and ``b`` reduced modulo ``IRREDUCIBLE[n]``."""
    poly = IRREDUCIBLE[n]
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> n:
            a ^= poly
    return out


@lru_cache(maxsize=None)
def mul_table(n: int) -> np.ndarray:
    size = 1 << n
    t = np.zeros((size, size), dtype=np.int64)
    for a in range(size):
        for b in range(size):
            t[a, b] = gf_mul(a, b, n)
    t.setflags(write=False)
    return t


@dataclass(frozen=True)
class HashFamily:
    lam: int
    m: int

    def __post_init__(self):
        if self.lam < 1 or self.m < 1:
            raise ValueError(f"need lam >= 1 and m >= 1, got lam={self.lam}, m={self.m}")
        if self.field_bits > MAX_FIELD_BITS:
            raise ValueError(f"max(lam, m) = {self.field_bits} exceeds the enumerable cap {MAX_FIELD_BITS}")

    @property
    def field_bits(self) -> int:
        return max(self.lam, self.m)

    @property
    def size(self) -> int:
        return 1 << (2 * self.field_bits)

    @property
    def range_size(self) -> int:
        return 1 << self.m

    @property
    def num_keys(self) -> int:
        return 1 << self.lam

    def member(self, index: int) -> "HashFn":
        """The ``index``-th function in lexicographic ``(a, b)`` order."""
        n = self.field_bits
        if not 0 <= index < self.size:
            raise IndexError(index)
        return HashFn(index >> n, index & ((1 << n) - 1), self)

    def table(self) -> np.ndarray:
        """``table[i, x]`` is the value of the ``i``-th member on key ``x``."""
        return _table(self.lam, self.m)


@dataclass(frozen=True)
class HashFn:
    a: int
    b: int
    family: HashFamily

    def __post_init__(self):
        top = 1 << self.family.field_bits
        if not (0 <= self.a < top and 0 <= self.b < top):
            raise ValueError(f"(a, b) = ({self.a}, {self.b}) out of GF(2^{self.family.field_bits})")

    @property
    def index(self) -> int:
        return (self.a << self.family.field_bits) | self.b

    def __call__(self, x: int) -> int:
        return evaluate(self, x)


def evaluate(h: HashFn, x: int) -> int:
    fam = h.family
    if not 0 <= x < fam.num_keys:
        raise ValueError(f"key {x} outside {{0,1}}^{fam.lam}")
    n = fam.field_bits
    return (gf_mul(h.a, x, n) ^ h.b) >> (n - fam.m)


@lru_cache(maxsize=32)
def _table(lam: int, m: int) -> np.ndarray:
    n = max(lam, m)
    mt = mul_table(n)
    size = 1 << n
    a = np.repeat(np.arange(size), size)
    b = np.tile(np.arange(size), size)
    xs = np.arange(1 << lam)
    t = (mt[a][:, xs] ^ b[:, None]) >> (n - m)
    t.setflags(write=False)
    return t


def enumerate_family(fam: HashFamily) -> Iterator[HashFn]:
    for i in range(fam.size):
        yield fam.member(i)


def sample(fam: HashFamily, rng: np.random.Generator) -> HashFn:
    return fam.member(int(rng.integers(fam.size)))


def pairwise_check(fam: HashFamily, members: np.ndarray | None = None) -> float:
    """Max over ``x != x'``, ``y``, ``y'`` of ``|Pr[h(x)=y, h(x')=y'] - 2^-2m|``.

    ``members`` restricts the enumeration to a subset of member indices (used
    for negative controls).  The joint counts are exact integers, so a true
    pairwise-independent family returns exactly ``0.0``.
    """
    t = fam.table()
    if members is not None:
        t = t[np.asarray(members)]
    count = t.shape[0]
    ny = fam.range_size
    target = count / ny**2  # exact when count is a multiple of ny^2
    worst = 0.0
    nk = fam.num_keys
    for x in range(nk):
        for xp in range(x + 1, nk):
            joint = np.bincount(t[:, x] * ny + t[:, xp], minlength=ny * ny)
            dev = float(np.abs(joint - target).max()) / count
            worst = max(worst, dev)
    return worst


def write_golden_csv(fam: HashFamily, path: str | Path) -> None:
    """Rows ``a,b,x,h(x)`` over the whole family."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b", "x", "h(x)"])
        for h in enumerate_family(fam):
            for x in range(fam.num_keys):
                w.writerow([h.a, h.b, x, h(x)])
