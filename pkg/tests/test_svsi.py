import numpy as np
import pytest

from qcommit_lab.config import ValidityError
from qcommit_lab.owsg import correctness_prob, uniform_guess_winprob
from qcommit_lab.svsi import bb84_as_svsi, near_orthogonal_svsi, orthogonal_svsi, security_accounting, to_ivowsg


@pytest.mark.parametrize("lam", [1, 2, 3])
def test_orthogonal_conversion(lam):
    iv = to_ivowsg(orthogonal_svsi(lam))
    assert correctness_prob(iv) == pytest.approx(1.0, abs=1e-12)
    assert uniform_guess_winprob(iv) == pytest.approx(2.0**-lam, abs=1e-12)


def test_near_orthogonal_is_valid():
    sv = near_orthogonal_svsi(0.1, 0.01)
    t = sv.inversion_table()
    assert t[0, 0] >= 0.99 and t[0, 1] <= 0.01


def test_bb84_is_not_invertible():
    with pytest.raises(ValidityError):
        bb84_as_svsi(2)


def test_accounting_identity_guesser():
    sv = orthogonal_svsi(2)
    rep = security_accounting(sv, np.eye(4))
    assert rep.total == pytest.approx(1.0)
    assert rep.off_diagonal == pytest.approx(0.0)
    assert rep.holds


def test_accounting_random_adversaries():
    rng = np.random.default_rng(11)
    for sv in (orthogonal_svsi(2), near_orthogonal_svsi()):
        for _ in range(50):
            g = rng.dirichlet(np.ones(sv.num_keys), size=sv.num_keys)
            rep = security_accounting(sv, g)
            assert rep.holds
            assert rep.total <= rep.exact_guess + sv.tol_inv + 1e-12


def test_accounting_rejects_bad_tables():
    sv = orthogonal_svsi(1)
    with pytest.raises(ValidityError):
        security_accounting(sv, np.ones((2, 2)))
    with pytest.raises(ValidityError):
        security_accounting(sv, np.eye(3))
