import math

import numpy as np
import pytest

from qcommit_lab.config import ValidityError
from qcommit_lab.owsg import (ToyInstance, accept_prob, accept_table, bb84_pure, constant, correctness_prob,
                              empirical_delta, from_states, good_set, good_set_report, key_bits, orthogonal,
                              uniform_guess_winprob)
from qcommit_lab.qla import proj


def test_key_bits_msb_first():
    assert key_bits(0b10, 2) == [1, 0]
    assert key_bits(0b011, 3) == [0, 1, 1]


def test_bb84_accept_column_for_zero_key():
    inst = bb84_pure(2)
    # |<0|+>|^2 = 1/2 per differing bit
    assert accept_table(inst)[:, 0] == pytest.approx([1.0, 0.5, 0.5, 0.25], abs=1e-12)


@pytest.mark.parametrize("lam", [1, 2, 3, 4])
def test_bb84_uniform_guess_closed_form(lam):
    inst = bb84_pure(lam)
    assert uniform_guess_winprob(inst) == pytest.approx(0.75**lam, abs=1e-12)
    assert empirical_delta(inst) == pytest.approx(-lam * math.log2(0.75), abs=1e-12)
    assert correctness_prob(inst) == pytest.approx(1.0, abs=1e-12)


def test_depolarized_correctness():
    inst = ToyInstance("bb84-depolarized", 2, eta=0.25).build()
    assert correctness_prob(inst) == pytest.approx((1 - 0.25 / 2) ** 2, abs=1e-12)
    assert inst.dim_b == 4


def test_constant_and_orthogonal_extremes():
    c = constant(2)
    assert uniform_guess_winprob(c) == pytest.approx(1.0, abs=1e-12)
    assert empirical_delta(c) == pytest.approx(0.0, abs=1e-12)
    o = orthogonal(3)
    assert uniform_guess_winprob(o) == pytest.approx(1 / 8, abs=1e-12)
    assert np.allclose(accept_table(o), np.eye(8))


def test_good_sets_bb84_l2():
    inst = bb84_pure(2)
    # p = 2: threshold 1/2 keeps k and its two one-bit neighbours
    assert good_set(inst, 0, 2) == frozenset({0, 1, 2})
    assert all(len(good_set(inst, k, 2)) == 3 for k in range(4))
    assert all(good_set(inst, k, 8) == frozenset({k}) for k in range(4))


def test_good_set_report_bb84_mass_zero():
    rep = good_set_report(bb84_pure(2), p=8, r=1)
    assert rep.mass_T == 0.0
    assert rep.chain_holds and rep.bound_holds


def test_good_set_report_constant_vacuous():
    rep = good_set_report(constant(2), p=2, r=1)
    assert rep.mass_T == pytest.approx(1.0)
    assert rep.vacuous
    assert rep.chain_holds


@pytest.mark.parametrize("lam", [2, 3, 4])
@pytest.mark.parametrize("p", [2, 8])
@pytest.mark.parametrize("r", [0, 1, 2])
def test_good_set_report_chain(lam, p, r):
    rep = good_set_report(bb84_pure(lam), p, r)
    assert rep.chain_lhs <= rep.uniform_guess + 1e-12
    assert rep.sandwich_holds


def test_nonuniform_keys():
    probs = [0.7, 0.1, 0.1, 0.1]
    inst = bb84_pure(2, probs)
    table = accept_table(inst)
    expected = sum(probs[k] * table[:, k].sum() for k in range(4)) / 4
    assert uniform_guess_winprob(inst) == pytest.approx(expected, abs=1e-12)


def test_invalid_instances():
    with pytest.raises(ValidityError):
        bb84_pure(2, [0.5, 0.5, 0.5, 0.5])
    with pytest.raises(ValidityError):
        from_states(1, [proj(np.array([1, 0]))] * 2, [np.diag([1.5, 0])] * 2)
    with pytest.raises(ValueError):
        ToyInstance("nope", 2)


def test_purification_reduces_to_state():
    inst = ToyInstance("bb84-depolarized", 1, eta=0.5).build()
    for k in range(2):
        m = inst.purifications[k].reshape(inst.dim_a, inst.dim_b)
        assert np.allclose(m @ m.conj().T, inst.states[k])
    x = inst.copies(1, 2)
    assert x.shape == (inst.dim_b**2, inst.dim_a**2)
    # reduce over C2 (rows) to get phi^{(x)2}
    assert np.allclose(x.T @ x.conj(), inst.copies_state(1, 2))
    assert accept_prob(inst, 1, 1) == pytest.approx(0.75, abs=1e-12)
