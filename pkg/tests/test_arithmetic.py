import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from primepoints.arithmetic import (
    ExceptionalZeroConfig,
    SieveTable,
    characters_mod,
    conductor_decompose,
    divisor_lcm_sum,
    euler_phi,
    induce,
    lambda_star,
    moebius,
    mu_log_convolution,
    primes,
    principal_character,
    sieve,
    von_mangoldt,
)
from primepoints.errors import BudgetExceeded


def trial_division_is_prime(n):
    return n >= 2 and all(n % k for k in range(2, math.isqrt(n) + 1))


def test_small_prime_lists():
    assert primes(10) == [2, 3, 5, 7]
    assert primes(2) == [2]


def test_prime_count_against_trial_division():
    ps = primes(10_000)
    assert len(ps) == 1229
    assert ps == [n for n in range(10_001) if trial_division_is_prime(n)]


def test_sieve_guards():
    with pytest.raises(ValueError):
        sieve(1)
    with pytest.raises(BudgetExceeded):
        SieveTable(10**6, max_limit=10**5)


def test_spf_is_identity_on_primes():
    s = SieveTable(5000)
    ps = s.primes()
    assert np.all(s.spf[ps] == ps)
    assert s.is_prime(4999) and not s.is_prime(4997)


def test_mangoldt_examples():
    assert von_mangoldt(8) == pytest.approx(math.log(2))
    assert lambda_star(9) == 0.0
    assert von_mangoldt(9) == pytest.approx(math.log(3))
    assert von_mangoldt(1) == 0.0
    assert lambda_star(7) == pytest.approx(math.log(7))


def test_moebius_and_phi():
    assert moebius(6) == 1 and moebius(12) == 0 and moebius(30) == -1
    assert euler_phi(12) == 4
    assert euler_phi(1) == 1


def test_mu_log_examples():
    assert mu_log_convolution(8) == pytest.approx(math.log(2))
    assert mu_log_convolution(6) == pytest.approx(0.0, abs=1e-12)
    assert mu_log_convolution(1) == 0.0


def test_sieve_arrays_match_scalar_functions():
    s = SieveTable(2000)
    lam, lst, mu, phi = s.lambda_array(), s.lambda_star_array(), s.mobius_array(), s.phi_array()
    for x in range(1, 2001):
        assert lam[x] == pytest.approx(von_mangoldt(x), abs=1e-12)
        assert lst[x] == pytest.approx(lambda_star(x), abs=1e-12)
        assert mu[x] == moebius(x)
        assert phi[x] == euler_phi(x)


def test_mangoldt_is_mu_star_log_up_to_1e5():
    s = SieveTable(100_000)
    assert np.max(np.abs(s.mu_log_array()[1:] - s.lambda_array()[1:])) < 1e-9


def test_characters_mod_1_and_5():
    (chi,) = characters_mod(1)
    assert chi.is_principal and chi(0) == 1
    chars = characters_mod(5)
    assert len(chars) == 4 and chars[0].is_principal
    assert any(c.rotation(2) == Fraction(1, 4) for c in chars)
    gen = next(c for c in chars if c.rotation(2) == Fraction(1, 4))
    assert gen(2) == pytest.approx(1j)
    assert gen(5) == 0


def test_characters_mod_8():
    chars = characters_mod(8)
    assert len(chars) == 4
    assert chars[0].exponent == 2
    assert all(c.is_real for c in chars)


def test_conductor_examples():
    prim, r = conductor_decompose(principal_character(6))
    assert r == 1 and prim.modulus == 1
    chi4 = next(c for c in characters_mod(4) if not c.is_principal)
    lifted = induce(chi4, 8)
    prim, r = conductor_decompose(lifted)
    assert r == 4 and prim == chi4
    for chi in characters_mod(7)[1:]:
        assert conductor_decompose(chi) == (chi, 7)


def test_character_arithmetic_is_exact():
    chars = characters_mod(13)
    a, b = chars[1], chars[5]
    prod = a * b
    for r in range(1, 13):
        assert prod.rotation(r) == (a.rotation(r) + b.rotation(r)) % 1
    assert (a * a.conj()).is_principal


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 50), st.data())
def test_orthogonality(q, data):
    units = [r for r in range(1, q + 1) if math.gcd(r, q) == 1]
    a = data.draw(st.sampled_from(units))
    b = data.draw(st.sampled_from(units))
    chars = characters_mod(q)
    assert len(chars) == euler_phi(q)
    total = sum(c(a) * c(b).conjugate() for c in chars)
    expect = euler_phi(q) if (a - b) % q == 0 else 0
    assert abs(total - expect) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.data())
def test_character_axioms(q, data):
    chars = characters_mod(q)
    chi = data.draw(st.sampled_from(chars))
    assert chi(1) == 1
    x, y = data.draw(st.integers(0, 500)), data.draw(st.integers(0, 500))
    assert abs(chi(x * y) - chi(x) * chi(y)) < 1e-12
    if math.gcd(x, q) > 1:
        assert chi(x) == 0
    else:
        assert abs(chi(x) ** chi.exponent - 1) < 1e-9


def test_divisor_lcm_sum_examples():
    assert divisor_lcm_sum(1, 1, 2) == pytest.approx(1.0)
    assert divisor_lcm_sum(3, 1, 2) == pytest.approx(1 + 1 / 4 + 2 / 9)
    pairs = [(1, 1), (1, 2), (2, 1), (2, 2)]
    expect = sum(euler_phi(a) * euler_phi(b) / math.lcm(a, b) ** 3 for a, b in pairs)
    assert divisor_lcm_sum(2, 2, 3) == pytest.approx(expect, rel=1e-12)


def test_divisor_lcm_sum_is_bounded_as_B_doubles():
    vals = [divisor_lcm_sum(2**k, 2, 3) for k in range(4, 13)]
    ratios = [b / a for a, b in zip(vals, vals[1:])]
    # growth slows (log-like), so value / B^eps is eventually decreasing
    assert all(r1 > r2 for r1, r2 in zip(ratios, ratios[1:]))
    eps = 0.3
    scaled = [v / 2 ** (k * eps) for k, v in zip(range(4, 13), vals)]
    assert all(x > y for x, y in zip(scaled, scaled[1:]))


def test_divisor_lcm_sum_budget():
    with pytest.raises(BudgetExceeded):
        divisor_lcm_sum(2**12, 6, 7, budget=10**5)


def test_exceptional_zero_config():
    ExceptionalZeroConfig(3, 0.9)
    with pytest.raises(ValueError):
        ExceptionalZeroConfig(3, 0.4)
    with pytest.raises(ValueError):
        ExceptionalZeroConfig(0, 0.9)


def test_character_values_are_roots_of_unity():
    for chi in characters_mod(36):
        v = chi.values()
        units = [r for r in range(36) if math.gcd(r, 36) == 1]
        assert np.allclose(np.abs(v[units]), 1.0)
        assert cmath.isclose(chi(1), 1)
