import cmath
import itertools
import math

import numpy as np
import pytest

from primepoints.arithmetic import characters_mod
from primepoints.errors import ParameterError
from primepoints.expsums import complete_sum_A
from primepoints.forms import IntegerPolynomial, diagonal_form, standard_quadric
from primepoints.majorarcs import (
    ArcParameters,
    Slot,
    W_integral,
    arc_rows,
    arcs_for,
    build_arcs,
    local_density_identity,
    local_factor,
    oscillatory_I,
    oscillatory_I_many,
    predict_main_term,
    singular_integral_J,
    singular_series_partial,
    singular_series_report,
    singular_series_terms,
    unit_zero_count,
)
from primepoints.quadrature import QuadSpec, adaptive_1d
from primepoints.weights import WeightFamily, make_bump

X0 = (0.3, 0.4, 0.4, 0.3)


@pytest.fixture(scope="module")
def unit_family(bump):
    return WeightFamily(1.0, X0, bump)


# ------------------------------------------------------------ arcs

def test_build_arcs_example():
    arcs, rep = build_arcs(ArcParameters(0.1, 0.005, 0.215, 1e4))
    assert sorted((a.q, a.a) for a in arcs) == [(1, 0), (1, 1), (2, 1)]
    assert not rep["overlap"]
    assert [r["center"] for r in arc_rows(arcs)] == [0.0, 1.0, 0.5]


def test_arcs_disjoint_for_small_width():
    _, rep = arcs_for(2, 1e4 ** (0.1 + 1 / 12 - 2))
    assert not rep["overlap"] and rep["total_measure"] > 0
    _, rep = arcs_for(5, 0.05)
    assert rep["overlap"] and rep["total_measure"] is None


def test_arc_parameter_constraints():
    with pytest.raises(ParameterError, match="5/12"):
        ArcParameters(0.15, 0.001, 0.2, 1e4)
    with pytest.raises(ParameterError, match="gamma >"):
        ArcParameters(0.05, 0.05, 0.1, 1e4)
    with pytest.raises(ParameterError):
        ArcParameters(-0.1, 0.01, 0.2, 1e4)


def test_arc_contains():
    arcs, _ = arcs_for(3, 0.01)
    third = next(a for a in arcs if (a.q, a.a) == (3, 1))
    assert third.contains(0.335) and not third.contains(0.35)


# ------------------------------------------------------------ singular series

def test_series_small_Q(quadric):
    assert singular_series_partial(quadric, 1) == 1.0
    assert singular_series_partial(quadric, 2) == pytest.approx(2.0)


def test_series_is_real_and_methods_agree(quadric):
    direct = singular_series_terms(quadric, 60, method="direct")
    mult = singular_series_terms(quadric, 60)
    assert np.max(np.abs(direct - mult)) < 1e-9
    assert np.max(np.abs(np.cumsum(mult.imag))) < 1e-9
    with pytest.raises(ValueError):
        singular_series_terms(quadric, 0)


def test_series_cubic_form_is_real():
    F = diagonal_form([1, 2, -3], 3)
    terms = singular_series_terms(F, 40)
    assert np.max(np.abs(np.cumsum(terms.imag))) < 1e-9


def test_series_cauchy_tails_decrease(quadric):
    rep = singular_series_report(quadric, 256)
    incr = [rep["increments"][q] for q in (8, 16, 32, 64, 128, 256)]
    assert all(a > b for a, b in zip(incr, incr[1:]))


def test_local_factor_example(quadric):
    n1 = sum(1 for h in itertools.product((1, 2), repeat=4) if quadric(h) % 3 == 0)
    assert unit_zero_count(quadric, 3, 1) == n1
    assert local_factor(quadric, 3, 1) == pytest.approx(3 * n1 / 16)


def test_local_factor_without_unit_solutions():
    # units mod 3 square to 1, so x1^2 + x2^2 is 2 on every unit pair
    F = diagonal_form([1, 1], 2)
    assert [local_factor(F, 3, k) for k in (1, 2, 3)] == [0.0, 0.0, 0.0]


@pytest.mark.parametrize("p,k", [(2, 1), (2, 3), (3, 1), (3, 2), (5, 1), (7, 1)])
def test_local_identity(quadric, p, k):
    rep = local_density_identity(quadric, p, k)
    assert rep["rel_error"] < 1e-9


def test_local_identity_generic_form():
    G = IntegerPolynomial(3, [((2, 0, 0), 1), ((0, 1, 1), 2), ((0, 0, 2), -1)])
    for p, k in [(2, 2), (3, 2)]:
        assert local_density_identity(G, p, k)["rel_error"] < 1e-9


def test_series_term_matches_complete_sums(quadric):
    q = 9
    units = [a for a in range(q) if math.gcd(a, q) == 1]
    expect = sum(complete_sum_A(q, a, quadric) for a in units) / 6**4
    assert abs(singular_series_terms(quadric, 9)[9] - expect) < 1e-12


# ------------------------------------------------------------ integrals

def test_I_at_zero(quadric, unit_family, bump):
    assert oscillatory_I(quadric, unit_family, 0.0).real == pytest.approx(bump.integral() ** 4, rel=1e-10)


def test_I_conjugate_symmetry(quadric, unit_family):
    for tau in (0.7, 5.0, 33.0):
        assert abs(oscillatory_I(quadric, unit_family, -tau) - oscillatory_I(quadric, unit_family, tau).conjugate()) < 1e-12


def test_I_decay(quadric, unit_family):
    taus = np.geomspace(10, 1000, 25)
    vals = np.abs(oscillatory_I_many(quadric, unit_family, taus))
    slope = np.polyfit(np.log(taus), np.log(vals), 1)[0]
    assert slope <= -0.9
    assert np.max(taus * vals) < 10 * vals[0] * taus[0]


def test_I_generic_tensor_rule(bump):
    fam = WeightFamily(1.0, (0.4, 0.4), bump)
    F = IntegerPolynomial(2, [((2, 0), 1), ((1, 1), 1)])
    tau = 3.0
    brute = 0j
    xs = np.linspace(0.32, 0.48, 801)
    w = bump(xs - 0.4)
    X1, X2 = np.meshgrid(xs, xs, indexing="ij")
    vals = np.outer(w, w) * np.exp(2j * np.pi * tau * (X1**2 + X1 * X2))
    brute = np.trapezoid(np.trapezoid(vals, xs, axis=1), xs)
    assert abs(oscillatory_I(F, fam, tau) - brute) < 1e-7


def test_J_positive_with_small_tail(quadric, unit_family):
    J = singular_integral_J(quadric, unit_family, 64)
    assert J.value > 0 and abs(J.imag) < 1e-12
    assert J.tail < 1e-6 * J.value
    assert not J.gradient_vanishes_in_support


def _curve_oracle(bump, grad):
    val, _, _ = adaptive_1d(lambda s: bump(s - 0.4) ** 2 / (grad * s), 0.32, 0.48, QuadSpec(tol=1e-15))
    return val


def test_J_against_coarea_diagonal(bump):
    fam = WeightFamily(1.0, (0.4, 0.4), bump)
    J = singular_integral_J(diagonal_form([1, -1], 2), fam, 64)
    assert J.value == pytest.approx(_curve_oracle(bump, 2.0), rel=1e-4)


def test_J_against_coarea_generic(bump):
    # x1^2 + x1 x2 - 2 x2^2 = (x1 - x2)(x1 + 2 x2)
    fam = WeightFamily(1.0, (0.4, 0.4), bump)
    F = IntegerPolynomial(2, [((2, 0), 1), ((1, 1), 1), ((0, 2), -2)])
    J = singular_integral_J(F, fam, 64)
    assert J.value == pytest.approx(_curve_oracle(bump, 3.0), rel=1e-4)


def test_J_vanishes_off_variety():
    fam = WeightFamily(1.0, (0.2, 0.7), make_bump(0.02))
    J = singular_integral_J(diagonal_form([1, -1], 2), fam, 64)
    assert abs(J.value) < 1e-6


# ------------------------------------------------------------ W integrals

@pytest.fixture(scope="module")
def w_family(bump):
    return WeightFamily(60.0, (0.3, 0.4), bump)


@pytest.mark.parametrize("F", [diagonal_form([1, -1], 2), IntegerPolynomial(2, [((2, 0), 1), ((1, 1), -1)])])
def test_W_all_integrated_is_rescaled_I(F, w_family):
    X, tau = w_family.X, 2.3e-4
    unit = WeightFamily(1.0, w_family.x0, w_family.omega)
    lhs = W_integral(F, w_family, tau)
    rhs = X**2 * oscillatory_I(F, unit, X**2 * tau, QuadSpec(tol=1e-12))
    assert abs(lhs - rhs) < 1e-7 * abs(rhs)


def test_W_damped_with_beta_one(w_family):
    F = diagonal_form([1, -1], 2)
    damp = W_integral(F, w_family, 1e-4, [Slot("damp"), Slot("integrate")], beta_tilde=1.0)
    assert abs(damp - W_integral(F, w_family, 1e-4)) < 1e-10 * abs(damp)


def test_W_sum_versus_integral(bump):
    F = diagonal_form([1, -1], 2)
    fam = WeightFamily(200.0, (0.3, 0.4), bump)
    tau = 3e-5
    full = W_integral(F, fam, tau)
    mixed = W_integral(F, fam, tau, [Slot("sum"), Slot("integrate")])
    # replacing one integral by its Riemann sum costs far less than the size of W
    assert abs(full - mixed) < 1e-3 * fam.X ** (2 - 1 + 0.1 + 0.01)
    assert abs(full - mixed) < 0.05 * abs(full)


def test_W_character_slot(w_family):
    F = diagonal_form([1, -1], 2)
    chi = characters_mod(5)[1]
    val = W_integral(F, w_family, 1e-4, [Slot("char", chi), Slot("integrate")])
    xs = w_family.integer_range(0)
    from primepoints.arithmetic import SieveTable

    lam = SieveTable(60).lambda_star_array()
    disc = sum(w_family.psi(0, x) * chi(x) * lam[x] * cmath.exp(2j * math.pi * 1e-4 * x * x) for x in xs)
    integ = W_integral(diagonal_form([-1], 2), WeightFamily(60.0, (0.4,), w_family.omega), 1e-4)
    assert abs(val - disc * integ) < 1e-8 * abs(val)


def test_W_slot_validation(w_family):
    F = diagonal_form([1, -1], 2)
    with pytest.raises(ValueError):
        W_integral(F, w_family, 0.1, [Slot("integrate")])
    with pytest.raises(ValueError):
        Slot("char")
    with pytest.raises(ValueError):
        Slot("bogus")
    with pytest.raises(ValueError):
        W_integral(F, w_family, 0.1, [Slot("damp"), Slot("integrate")])


# ------------------------------------------------------------ prediction

def test_prediction_constant_positive(quadric, bump):
    fam = WeightFamily(500, X0, bump)
    rep = predict_main_term(quadric, fam, Q=32, T_cutoff=32, require_positive=True, oracle_count=1000.0)
    assert rep.c > 0 and rep.predicted == pytest.approx(rep.c * 500**2)
    assert rep.rel_error == pytest.approx(abs(rep.predicted - 1000) / 1000)
    assert set(rep.to_dict()) >= {"series_partial", "integral_J", "c", "predicted", "rel_error"}
