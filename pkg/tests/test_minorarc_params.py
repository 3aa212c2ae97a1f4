from fractions import Fraction

import pytest

from primepoints.errors import ParameterError
from primepoints.minorarc_params import (
    C0,
    EPS_LADDER,
    caseI_parameters,
    codim_bound,
    codim_chain_check,
    derive_parameters,
    rank_concentration_bound,
)


def test_codim_bound_examples():
    assert codim_bound(2) == 1064
    assert codim_bound(3) == 8996
    assert codim_bound(2) < 2**8 * 3**4 * 5**2 * 8 * 9 * 16
    with pytest.raises(ValueError):
        codim_bound(1)


def test_C0_examples():
    assert [C0(d) for d in (2, 3, 4)] == [17, 65, 193]


def test_kappa_example():
    p = derive_parameters(2, 1064)
    assert float(p.kappa) == pytest.approx(1064 / 96 - 1 - 1e-3)
    assert float(p.kappa) == pytest.approx(10.0823, abs=1e-4)
    assert p.kappa > 2
    assert p.lam == Fraction(1, 12) and p.sigma == Fraction(1, 24) and p.H == 12


def test_rank_concentration_example():
    assert rank_concentration_bound(1064, 12, 17) == Fraction(877, 12)


@pytest.mark.parametrize("d", range(2, 9))
def test_threshold_passes_for_every_degree(d):
    p = derive_parameters(d, codim_bound(d))
    assert all(v > 0 for v in p.constraints().values())
    assert 2 * p.theta0 + p.gamma < Fraction(5, 12)
    assert p.gamma > 2 * p.theta0 + 2 * p.lam
    assert p.eps in EPS_LADDER


@pytest.mark.parametrize("d", range(2, 9))
def test_chain_reproduces_bound(d):
    rep = codim_chain_check(d)
    assert rep["holds"]


def test_fixed_small_slack_fails_at_threshold():
    with pytest.raises(ParameterError) as err:
        derive_parameters(2, 1064, eps=1e-3)
    assert "5/12" in err.value.inequality or "5/24" in err.value.inequality
    derive_parameters(2, 1064, eps=1e-5)


def test_below_threshold_names_inequality():
    with pytest.raises(ParameterError, match="K >"):
        derive_parameters(2, 500)
    with pytest.raises(ValueError):
        derive_parameters(1, 100)


def test_large_codim_fixed_slack():
    p = derive_parameters(2, 5000, eps=1e-3)
    assert p.eps == Fraction(1, 1000)
    d = p.to_dict()
    assert d["lam"] == pytest.approx(1 / 12) and set(d["constraints"]) == set(p.constraints())


def test_caseI_examples():
    assert caseI_parameters(2)["pointwise_saving"] == 2.125
    assert caseI_parameters(3)["pointwise_saving"] == 4.0625
    assert caseI_parameters(2, 0.05)["varsigma_max"] == pytest.approx(0.05)
    with pytest.raises(ValueError):
        caseI_parameters(2, 0)
