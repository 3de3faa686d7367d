import csv
from pathlib import Path

import numpy as np
import pytest

from qcommit_lab.hashfam import (IRREDUCIBLE, HashFamily, HashFn, enumerate_family, gf_mul, pairwise_check, sample,
                                 write_golden_csv)

FIXTURES = Path(__file__).parent / "fixtures"


def _poly_mod_reducible(poly: int, n: int) -> bool:
    # brute force: any divisor of degree 1..n//2
    for d in range(1, n // 2 + 1):
        for q in range(1 << d, 1 << (d + 1)):
            r = poly
            while r.bit_length() >= q.bit_length():
                r ^= q << (r.bit_length() - q.bit_length())
            if r == 0:
                return True
    return False


@pytest.mark.parametrize("n", sorted(IRREDUCIBLE))
def test_table_polynomials_are_irreducible(n):
    poly = IRREDUCIBLE[n]
    assert poly.bit_length() == n + 1
    assert not _poly_mod_reducible(poly, n)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_field_axioms(n):
    size = 1 << n
    for a in range(1, size):
        inv = [b for b in range(1, size) if gf_mul(a, b, n) == 1]
        assert len(inv) == 1
    for a in range(size):
        for b in range(size):
            assert gf_mul(a, b, n) == gf_mul(b, a, n)


def test_golden_table_l2_m1(tmp_path):
    fam = HashFamily(2, 1)
    rows = list(csv.DictReader(open(FIXTURES / "hash_l2_m1.csv")))
    assert len(rows) == fam.size * fam.num_keys
    for r in rows:
        h = HashFn(int(r["a"]), int(r["b"]), fam)
        assert h(int(r["x"])) == int(r["h(x)"])
    out = tmp_path / "g.csv"
    write_golden_csv(fam, out)
    assert out.read_text() == (FIXTURES / "hash_l2_m1.csv").read_text()


def test_top_bit_member():
    fam = HashFamily(2, 1)
    h = HashFn(1, 0, fam)
    assert [h(x) for x in range(4)] == [0, 0, 1, 1]


def test_table_agrees_with_members():
    fam = HashFamily(3, 2)
    t = fam.table()
    for h in enumerate_family(fam):
        assert [h(x) for x in range(8)] == t[h.index].tolist()


@pytest.mark.parametrize("lam,m", [(2, 1), (2, 2), (3, 1), (3, 2), (4, 2), (2, 4), (1, 3)])
def test_pairwise_exact(lam, m):
    assert pairwise_check(HashFamily(lam, m)) == 0.0


def test_pairwise_negative_control():
    fam = HashFamily(2, 1)
    # members with a != 0 only: b is uniform but a restricted, so joints skew
    keep = np.array([i for i in range(fam.size) if fam.member(i).a != 0])
    assert pairwise_check(fam, keep) > 0.05


def test_family_bounds():
    with pytest.raises(ValueError):
        HashFamily(9, 1)
    with pytest.raises(ValueError):
        HashFn(4, 0, HashFamily(2, 1))
    with pytest.raises(ValueError):
        HashFamily(2, 1).member(0)(4)


def test_sample_is_seeded():
    fam = HashFamily(3, 2)
    a = [sample(fam, np.random.default_rng(9)).index for _ in range(3)]
    b = [sample(fam, np.random.default_rng(9)).index for _ in range(3)]
    assert a == b
