import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcommit_lab.commit import (C_REGISTERS, CommitmentParams, build_pair, hiding_metrics, hiding_threshold_check,
                                reduced_commitments)
from qcommit_lab.config import DimensionCapError, Tolerances
from qcommit_lab.owsg import ToyInstance
from qcommit_lab.qla import fidelity, reduce_pure, trace_distance

# dense-oracle values (full state vector, scipy sqrtm fidelity), frozen at first build
GOLDEN_BB84_L2_M1 = (0.35891504294495535, 0.8405397885168093)


def _pair(kind, lam, **kw):
    inst = ToyInstance(kind, lam).build()
    return build_pair(inst, CommitmentParams(lam, **kw))


def test_params_defaults():
    p = CommitmentParams(4)
    assert p.r == 4.0
    assert p.m == 5
    assert (1 << p.m) >= 2 * 2**p.r
    assert CommitmentParams(2, m_override=1).m == 1
    with pytest.raises(ValueError):
        CommitmentParams(2, t=-1)


def test_block_count_bb84_l2():
    pair = _pair("bb84-pure", 2, m_override=2)
    assert pair.block_count == 4 * 16
    # the default m = 3 exceeds lambda, so the field grows to GF(2^3)
    assert _pair("bb84-pure", 2).block_count == 4 * 64
    assert pair.psi0.quantum_dim == 4
    assert pair.psi0.norm_sq() == pytest.approx(1.0, abs=1e-10)
    assert pair.psi1.norm_sq() == pytest.approx(1.0, abs=1e-10)


def test_labels_follow_definition():
    pair = _pair("bb84-pure", 2)
    table = pair.family.table()
    for (k, h, h2, y, r3) in pair.psi0.blocks:
        assert h == h2 and y == table[h, k] and r3 == 0
    for (k, h, h2, y, r3) in pair.psi1.blocks:
        assert r3 == k


def test_t_zero_is_classical():
    pair = _pair("bb84-pure", 1, t=0)
    assert pair.psi0.quantum_dim == 1
    m = hiding_metrics(pair)
    assert 0.0 <= m.td_C <= 1.0


def test_golden_hiding_bb84_l2_m1():
    m = hiding_metrics(_pair("bb84-pure", 2, m_override=1))
    assert m.td_C == pytest.approx(GOLDEN_BB84_L2_M1[0], abs=1e-10)
    assert m.fid_C == pytest.approx(GOLDEN_BB84_L2_M1[1], abs=1e-10)


def test_labeled_reduction_matches_dense():
    pair = _pair("bb84-pure", 1)
    dense0 = pair.psi0.to_dense()
    dense1 = pair.psi1.to_dense()
    rho0, rho1 = reduced_commitments(pair)
    r0 = reduce_pure(dense0, pair.layout, C_REGISTERS)
    r1 = reduce_pure(dense1, pair.layout, C_REGISTERS)
    assert np.allclose(rho0, r0, atol=1e-12) and np.allclose(rho1, r1, atol=1e-12)
    m = hiding_metrics(pair)
    assert m.td_C == pytest.approx(trace_distance(r0, r1), abs=1e-12)
    assert m.fid_C == pytest.approx(fidelity(r0, r1), abs=1e-10)


def test_orthogonal_reductions_coincide():
    m = hiding_metrics(_pair("orthogonal", 2))
    assert m.td_C == pytest.approx(0.0, abs=1e-12)
    assert m.fid_C == pytest.approx(1.0, abs=1e-9)


def test_reduction_structure_constant_l1():
    pair = _pair("constant", 1)
    fam = pair.family
    table = fam.table()
    rho0, rho1 = reduced_commitments(pair)
    d = pair.layout.dim_of(["C2"])
    shape = (2, fam.size, d, 2, fam.size, d)
    r0, r1 = rho0.reshape(shape), rho1.reshape(shape)
    # psi1 is block diagonal across keys; psi0 has coherence exactly when h(k) = h(k')
    assert np.abs(r1[0, :, :, 1]).max() == 0.0
    for h in range(fam.size):
        cross = abs(r0[0, h, 0, 1, h, 0])
        if table[h, 0] == table[h, 1]:
            assert cross > 0
        else:
            assert cross == 0.0


def test_cap_error():
    inst = ToyInstance("bb84-pure", 2).build()
    with pytest.raises(DimensionCapError):
        build_pair(inst, CommitmentParams(2), Tolerances(dense_cap=100))


def test_threshold_check_forms():
    m = hiding_metrics(_pair("orthogonal", 1))
    assert hiding_threshold_check(m, 1.0).ok
    v = hiding_threshold_check(m, 0.5)
    assert v.td_upper == pytest.approx(math.sqrt(0.75))
    with pytest.raises(ValueError):
        hiding_threshold_check(m, 1.5)


@settings(max_examples=12, deadline=None)
@given(kind=st.sampled_from(["bb84-pure", "constant", "orthogonal", "bb84-depolarized"]),
       lam=st.integers(1, 2), t=st.integers(0, 1), m=st.integers(1, 3))
def test_norms_and_fvdg(kind, lam, t, m):
    inst = ToyInstance(kind, lam, eta=0.3 if kind == "bb84-depolarized" else 0.0).build()
    pair = build_pair(inst, CommitmentParams(lam, t=t, m_override=m))
    assert pair.psi0.norm_sq() == pytest.approx(1.0, abs=1e-10)
    assert pair.psi1.norm_sq() == pytest.approx(1.0, abs=1e-10)
    met = hiding_metrics(pair)
    assert met.fvdg_lower_margin >= -1e-9
    assert met.fvdg_upper_margin >= -1e-9
