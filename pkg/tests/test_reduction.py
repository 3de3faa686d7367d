import math

import numpy as np
import pytest

from qcommit_lab.commit import CommitmentParams, build_pair
from qcommit_lab.config import ValidityError
from qcommit_lab.extractor import build_extractor_povm, extraction_unitary, extractor_attack
from qcommit_lab.owsg import bb84_pure, constant, empirical_delta, orthogonal
from qcommit_lab.qla import random_unitary
from qcommit_lab.reduction import (CheatingAttack, acceptance_set, contradiction_check, contradiction_sign,
                                   dense_attack, identity_attack, read_unitary, run_adversary, write_unitary)


def _setup(inst, lam, **kw):
    params = CommitmentParams(lam, **kw)
    return params, build_pair(inst, params)


def test_identity_attack_bb84():
    inst = bb84_pure(2)
    params, pair = _setup(inst, 2)
    rep = run_adversary(inst, params.family, identity_attack(inst, params), params, pair)
    # R3 stays at 0: succeeds only on key 0, and wins with the mean acceptance of candidate 0
    assert rep.success_in_G == pytest.approx(0.25, abs=1e-12)
    assert rep.win_prob == pytest.approx((1 + 0.5 + 0.5 + 0.25) / 4, abs=1e-12)
    assert all(rep.checks.values())


def test_projective_attack_orthogonal():
    inst = orthogonal(2)
    params, pair = _setup(inst, 2)
    attack = extractor_attack(build_extractor_povm(inst, params.family, 1, relabel=False))
    rep = run_adversary(inst, params.family, attack, params, pair)
    assert rep.success_in_G == pytest.approx(1.0, abs=1e-12)
    assert rep.win_prob == pytest.approx(1.0, abs=1e-12)
    assert rep.q == pytest.approx(1.0, abs=1e-12)


def test_extractor_attack_bb84_bound():
    inst = bb84_pure(2)
    params, pair = _setup(inst, 2)
    rep = run_adversary(inst, params.family, extractor_attack(build_extractor_povm(inst, params.family, 1)),
                        params, pair)
    assert rep.verdict == "bound satisfied"
    assert rep.win_prob >= 1 / (8 * rep.q * params.floor_two_r)
    assert all(rep.checks.values())
    assert rep.chain["T3_off_G"] == 0.0
    assert rep.G == (0, 1, 2, 3)


def test_acceptance_set_constant():
    assert acceptance_set(constant(1)) == frozenset({0, 1})


def test_dense_path_matches_blocks():
    # the block-diagonal attack, assembled densely over R1, must give the same report
    inst = bb84_pure(1)
    params, pair = _setup(inst, 1)
    fam = params.family
    povm = build_extractor_povm(inst, fam, 1)
    block = extractor_attack(povm)
    tail = inst.dim_a * inst.num_keys * (inst.num_keys + 1)
    nr1 = fam.size * fam.range_size
    u = np.zeros((nr1 * tail, nr1 * tail), dtype=complex)
    for h in range(fam.size):
        for y in range(fam.range_size):
            i = h * fam.range_size + y
            u[i * tail:(i + 1) * tail, i * tail:(i + 1) * tail] = extraction_unitary(povm.block(h, y), 2)[1]
    dense = dense_attack(u, inst.num_keys + 1)
    a = run_adversary(inst, fam, block, params, pair)
    b = run_adversary(inst, fam, dense, params, pair)
    assert a.win_prob == pytest.approx(b.win_prob, abs=1e-12)
    assert a.binding_norm_sq == pytest.approx(b.binding_norm_sq, abs=1e-12)
    assert a.success_in_G == pytest.approx(b.success_in_G, abs=1e-12)


def test_random_dense_attack_chain():
    inst = bb84_pure(1)
    params, pair = _setup(inst, 1, m_override=1)
    fam = params.family
    dim = fam.size * fam.range_size * inst.dim_a * inst.num_keys * 2
    u = random_unitary(dim, np.random.default_rng(0))
    rep = run_adversary(inst, fam, dense_attack(u, 2), params, pair)
    assert all(rep.checks.values())
    assert 0.0 <= rep.win_prob <= 1.0


def test_unitary_file_roundtrip(tmp_path):
    u = random_unitary(6, np.random.default_rng(2))
    path = tmp_path / "u.bin"
    write_unitary(path, u)
    raw = path.read_bytes()
    assert len(raw) == 8 + 36 * 16
    assert int.from_bytes(raw[:8], "little") == 6
    assert np.array_equal(read_unitary(path), u)
    path.write_bytes(raw[:-3])
    with pytest.raises(ValidityError):
        read_unitary(path)


def test_attack_validation():
    with pytest.raises(ValidityError):
        CheatingAttack(2, np.array([1.0, 1.0]), block=lambda h, y: None)
    with pytest.raises(ValidityError):
        dense_attack(np.ones((4, 4)), 1)


def _positive_exact(delta: int, q: int, r_num: int, r_den: int, lam: int) -> bool:
    # 2^delta > 8 q floor(2^(lam r_num / r_den)) in integers
    e = lam * r_num
    if e % r_den == 0:
        fl = 1 << (e // r_den)
    else:
        assert r_den == 4
        fl = math.isqrt(math.isqrt(1 << e))
    return (1 << delta) > 8 * q * fl


def test_contradiction_lambda_40():
    c = contradiction_sign(1.5 * 40, 4, 1.0 * 40)
    assert c.positive


def test_contradiction_insecure_instance():
    assert empirical_delta(constant(2)) == 0.0
    for q in (1, 4, 100):
        for r in (0, 1, 3.5):
            assert not contradiction_sign(0.0, q, r).positive


def test_contradiction_scan_crossover():
    # D = 1/2: delta = lam, r = 3 lam / 4, q = 8
    out = contradiction_check(None, 0.0, 8, 0.0, 0.5, range(8, 129))
    for row in out["scan"]:
        assert row["positive"] == _positive_exact(row["lambda"], 8, 3, 4, row["lambda"])
    assert out["crossover_lambda"] == 25


def test_contradiction_d1_q4():
    # D = 1: delta = 3 lam / 2, r = lam; exact integer comparison on even lambda
    out = contradiction_check(None, 0.0, 4, 0.0, 1.0, range(2, 41, 2))
    for row in out["scan"]:
        lam = row["lambda"]
        assert row["positive"] == _positive_exact(3 * lam // 2, 4, 1, 1, lam)
    assert out["positive_lambdas"] == list(range(12, 41, 2))
