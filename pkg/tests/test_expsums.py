import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from primepoints.arithmetic import SieveTable, characters_mod
from primepoints.errors import BudgetExceeded
from primepoints.expsums import (
    ExpSumContext,
    LatticeCountSpec,
    S_alpha,
    S_star_alpha,
    WeylInput,
    block_reconstruction,
    complete_sum_A,
    complete_sum_bound_check,
    dyadic_block_S,
    dyadic_blocks,
    lattice_count_M,
    rational_approx_from_gamma,
    rational_scan,
    shrink_count_Y,
    shrink_ratio,
    star_gap,
    translated_block_sum,
    weyl_chain_check,
)
from primepoints.forms import IntegerForm, IntegerPolynomial, bihomogenize, diagonal_form, multilinear_tensor
from primepoints.forms import MultilinearTensor
from primepoints.weights import DyadicIndexPair, DyadicPair, WeightFamily


def e(x):
    return cmath.exp(2j * math.pi * x)


@pytest.fixture(scope="module")
def qctx(quadric, quad_family):
    return ExpSumContext(quadric, quad_family)


@pytest.fixture(scope="module")
def ctx2(bump):
    """Two-variable context small enough for block sums."""
    fam = WeightFamily(300, (0.3, 0.4), bump)
    return ExpSumContext(diagonal_form([1, -2], 2), fam)


def test_S_at_zero_is_positive_weighted_count(qctx):
    s0 = S_alpha(qctx, 0)
    axes = [qctx.axis(i) for i in range(4)]
    expect = math.prod(float(np.sum(w)) for _, w in axes)
    assert abs(s0.imag) < 1e-9 * abs(s0)
    assert s0.real == pytest.approx(expect, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3, allow_nan=False))
def test_S_periodic_and_conjugate(qctx, alpha):
    s = S_alpha(qctx, alpha)
    scale = abs(S_alpha(qctx, 0))
    assert abs(S_alpha(qctx, alpha + 1) - s) < 1e-9 * scale
    assert abs(S_alpha(qctx, -alpha) - s.conjugate()) < 1e-9 * scale


def test_exact_rational_matches_float(qctx):
    a = Fraction(7, 31)
    assert abs(S_alpha(qctx, a) - S_alpha(qctx, 7 / 31)) < 1e-8 * abs(S_alpha(qctx, 0))
    scan = rational_scan(qctx, 31, [7])
    assert abs(scan[0] - S_alpha(qctx, a)) < 1e-8 * abs(S_alpha(qctx, 0))


def test_S_star_single_variable(bump):
    fam = WeightFamily(100, (0.5,), bump)
    ctx = ExpSumContext(diagonal_form([1], 2), fam)
    ps = [p for p in SieveTable(100).primes() if 42 <= p <= 58]
    expect = math.fsum(fam.psi(0, p) * math.log(p) for p in ps)
    assert S_star_alpha(ctx, 0).real == pytest.approx(expect, rel=1e-12)


def test_S_star_real_for_even_values(bump):
    fam = WeightFamily(200, (0.3, 0.6), bump)
    ctx = ExpSumContext(diagonal_form([2, 4], 2), fam)
    assert abs(S_star_alpha(ctx, Fraction(1, 2)).imag) < 1e-9
    assert S_star_alpha(ctx, 0).real <= S_alpha(ctx, 0).real


def test_star_gap_is_reported(qctx):
    gap = star_gap(qctx, 0.3)
    assert gap["gap"] >= 0 and gap["ratio"] < 10


def test_orthogonality_via_rational_scan(qctx):
    from primepoints.oracle import brute_count, discrete_orthogonality_check

    rep = discrete_orthogonality_check(qctx.form, qctx.family)
    assert rep["rel_error"] < 1e-6
    assert rep["rhs"] == pytest.approx(brute_count(qctx.form, qctx.family).weighted)


def test_budget_is_enforced(quadric, quad_family):
    ctx = ExpSumContext(quadric, quad_family, budget=100)
    with pytest.raises(BudgetExceeded):
        S_alpha(ctx, 0.1)


# ------------------------------------------------------------ complete sums

def test_complete_sum_examples():
    F = diagonal_form([1, 1], 2)
    assert complete_sum_A(1, 0, F) == 1
    assert abs(complete_sum_A(3, 1, F) - 4 * e(2 / 3)) < 1e-12
    G = IntegerPolynomial(3, [((1, 2, 0), 3), ((0, 0, 1), 1)])
    assert abs(complete_sum_A(2, 1, G) - e(G((1, 1, 1)) / 2)) < 1e-12


def test_complete_sum_errors():
    F = diagonal_form([1, 1], 2)
    with pytest.raises(ValueError):
        complete_sum_A(0, 1, F)
    with pytest.raises(ValueError):
        complete_sum_A(6, 3, F)


def test_complete_sum_generic_matches_brute():
    G = IntegerPolynomial(2, [((2, 1), 1), ((0, 2), -3), ((1, 1), 2)])
    chi = characters_mod(7)[2]
    q, a = 7, 3
    brute = sum(chi(x).conjugate() * e(a * G((x, y)) / q) for x in range(1, 7) for y in range(1, 7))
    assert abs(complete_sum_A(q, a, G, [chi, None]) - brute) < 1e-9


def test_complete_sum_multiplicative(quadric):
    # CRT: 1/(q1 q2) = inv(q2)/q1 + inv(q1)/q2 mod 1
    for q1, q2 in [(3, 5), (4, 7), (5, 9)]:
        for a in (1, 2):
            if math.gcd(a, q1 * q2) != 1:
                continue
            lhs = complete_sum_A(q1 * q2, a, quadric)
            rhs = complete_sum_A(q1, a * pow(q2, -1, q1), quadric) * complete_sum_A(q2, a * pow(q1, -1, q2), quadric)
            assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(rhs))
            assert abs(lhs) == pytest.approx(abs(complete_sum_A(q1, a * pow(q2, -1, q1), quadric))
                                             * abs(complete_sum_A(q2, a * pow(q1, -1, q2), quadric)))


def test_bound_check_table(quadric):
    assert complete_sum_bound_check(1, quadric, 4)["ratio"] <= 1
    for q in [p for p in range(2, 50) if all(p % k for k in range(2, p))]:
        row = complete_sum_bound_check(q, quadric, codim=4, n_char_samples=2)
        assert math.isfinite(row["ratio"]) and row["max_abs"] <= (q - 1) ** 4 + 1e-9


# ------------------------------------------------------------ dyadic blocks

def test_blocks_rebuild_S(ctx2):
    rng = np.random.default_rng(3)
    for alpha in [0.0] + list(rng.random(10)):
        rep = block_reconstruction(ctx2, alpha)
        assert rep["rel_error"] < 1e-6


def test_block_outside_support_is_zero(ctx2):
    far = DyadicIndexPair((DyadicPair(0, 1), DyadicPair(0, 1)))
    assert dyadic_block_S(ctx2, far, 0.3) == 0


def test_translated_block_resums_exactly(bump):
    fam = WeightFamily(120, (0.3, 0.4), bump)
    ctx = ExpSumContext(diagonal_form([1, -1], 2), fam)
    blocks = [b for b in dyadic_blocks(ctx) if abs(dyadic_block_S(ctx, b, 0)) > 0]
    for b in blocks[:4]:
        rep = translated_block_sum(ctx, b, 0.37, active=[0])
        assert rep["abs_error"] <= 1e-9 * max(1.0, abs(rep["block"]))


# ------------------------------------------------------------ Weyl chain

def _random_input(rng, h, B, alpha=None):
    terms = []
    for i in range(h):
        for j in range(i, h):
            ex = [0] * h
            ex[i] += 1
            ex[j] += 1
            terms.append((tuple(ex), int(rng.integers(-3, 4))))
    phase = IntegerPolynomial(h, terms)
    if phase.is_zero():
        phase = IntegerPolynomial(h, [((2,) + (0,) * (h - 1), 1)])
    w = rng.uniform(-1, 1, size=(B + 1,) * h)
    return WeylInput(phase, w, float(rng.random()) if alpha is None else alpha)


def test_weyl_t1_is_equality():
    inp = _random_input(np.random.default_rng(1), 2, 4)
    lhs, rhs = weyl_chain_check(inp, 1)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_weyl_t2_random_alpha(seed):
    inp = _random_input(np.random.default_rng(seed), 2, 6)
    lhs, rhs = weyl_chain_check(inp, 2)
    assert lhs <= rhs * (1 + 1e-12)


def test_weyl_alpha_zero_counts():
    rng = np.random.default_rng(9)
    inp = _random_input(rng, 2, 4, alpha=0.0)
    inp.weights = np.abs(inp.weights)
    lhs, rhs = weyl_chain_check(inp, 2)
    assert lhs <= rhs * (1 + 1e-12)


def test_weyl_cubic_t3():
    rng = np.random.default_rng(4)
    phase = IntegerPolynomial(1, [((3,), 2), ((1,), 1)])
    inp = WeylInput(phase, rng.uniform(0, 1, size=(6,)), 0.2137)
    lhs, rhs = weyl_chain_check(inp, 3)
    assert lhs <= rhs * (1 + 1e-12)


def test_weyl_rejects_t0():
    with pytest.raises(ValueError):
        weyl_chain_check(_random_input(np.random.default_rng(0), 1, 3), 0)


# ------------------------------------------------------------ lattice counts

@pytest.fixture(scope="module")
def square_tensor():
    return multilinear_tensor(bihomogenize(diagonal_form([1], 2)))


def test_lattice_full_count_at_zero(square_tensor):
    spec = LatticeCountSpec(square_tensor, 0, 2, 1, 0.01)
    assert lattice_count_M(spec) == 5**2 * 3
    T2 = multilinear_tensor(bihomogenize(diagonal_form([1, 3], 2)))
    assert lattice_count_M(LatticeCountSpec(T2, 0.123, 1, 1, 0.6)) == 3 ** 4 * 3**2


def test_lattice_toy_example(square_tensor):
    spec = LatticeCountSpec(square_tensor, Fraction(1, 4), 1, 1, 0.3)
    brute = sum(
        1
        for u1 in (-1, 0, 1)
        for u2 in (-1, 0, 1)
        for v1 in (-1, 0, 1)
        if min((Fraction(1, 4) * 4 * u1 * u2 * v1) % 1, 1 - (Fraction(1, 4) * 4 * u1 * u2 * v1) % 1) < 0.3
    )
    assert lattice_count_M(spec) == brute == 27


def test_lattice_monotone(square_tensor):
    counts_P = [lattice_count_M(LatticeCountSpec(square_tensor, 0.1234, 3, 2, P)) for P in (0.05, 0.1, 0.2, 0.4)]
    assert counts_P == sorted(counts_P)
    counts_U = [lattice_count_M(LatticeCountSpec(square_tensor, 0.1234, U, 2, 0.1)) for U in (1, 2, 3, 4)]
    assert counts_U == sorted(counts_U)


def test_lattice_spec_validation(square_tensor):
    with pytest.raises(ValueError):
        LatticeCountSpec(square_tensor, 0.1, 1, 1, 0)
    with pytest.raises(ValueError):
        LatticeCountSpec(square_tensor, 0.1, -1, 1, 0.1)


def test_rational_approx_examples():
    toy = MultilinearTensor(1, 2, {((0, 0), (0, 0)): 3})
    spec = LatticeCountSpec(toy, Fraction(1, 3), 1, 1, 0.1)
    assert rational_approx_from_gamma(spec) == (3, 1, 0)
    zero = MultilinearTensor(1, 2, {})
    assert rational_approx_from_gamma(LatticeCountSpec(zero, math.sqrt(2) - 1, 2, 2, 0.01)) is None


def test_rational_approx_q_below_max_gamma(square_tensor):
    spec = LatticeCountSpec(square_tensor, 0.2718, 3, 2, 0.2)
    q, a, gap = rational_approx_from_gamma(spec)
    assert q <= 4 * 3 * 3 * 2
    assert gap == pytest.approx(abs(0.2718 * q - a))


# ------------------------------------------------------------ shrink counts

def test_shrink_zero_matrix_examples():
    c = np.zeros((2, 2))
    assert shrink_count_Y(c, [1.0, 1.0], 1.0) == 1
    y1 = shrink_count_Y(c, [1.0, 2.0], 2.0)
    y2 = shrink_count_Y(c, [1.0, 2.0], 4.0)
    assert y1 <= y2 <= 4**4 * y1


def test_shrink_ratio_measured_constant():
    rng = np.random.default_rng(0)
    for _ in range(5):
        a = rng.uniform(-5, 5, size=(2, 2))
        rep = shrink_ratio((a + a.T) / 2, rng.uniform(1, 40, 2), 0.25, 1.0)
        assert rep["normalised"] <= 4**2


def test_shrink_validation():
    with pytest.raises(ValueError):
        shrink_count_Y(np.array([[0, 1], [2, 0]]), [1, 1], 1)
    with pytest.raises(ValueError):
        shrink_count_Y(np.zeros((2, 2)), [1, 0], 1)
