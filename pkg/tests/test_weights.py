import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from primepoints.arithmetic import SieveTable
from primepoints.expsums import ExpSumContext, block_coordinate_weights
from primepoints.forms import diagonal_form
from primepoints.weights import (
    DyadicPair,
    DyadicScheme,
    WeightFamily,
    enumerate_Xi,
    make_bump,
    partition_weight,
    psi,
    role_split,
    varpi,
)


def test_bump_examples(bump):
    assert bump(0.0) == pytest.approx(math.exp(-1))
    assert bump(0.08) == 0.0 and bump(-0.08) == 0.0
    ys = np.linspace(-0.1, 0.1, 41)
    assert np.array_equal(bump(ys), bump(-ys))
    assert np.all(bump(ys) >= 0)


def test_bump_rejects_bad_delta():
    with pytest.raises(ValueError):
        make_bump(0.0)
    with pytest.raises(ValueError):
        make_bump(-1.0)


def test_bump_derivatives_match_finite_differences(bump):
    y = np.linspace(-0.07, 0.07, 29)
    h = 1e-5
    for k in range(1, bump.M0 + 1):
        fd = (bump.derivative(y + h, k - 1) - bump.derivative(y - h, k - 1)) / (2 * h)
        exact = bump.derivative(y, k)
        assert np.allclose(fd, exact, rtol=1e-5, atol=1e-6 * bump.c_achieved)


def test_c_achieved_bounds_all_derivatives(bump):
    grid = np.linspace(-bump.delta, bump.delta, 20_001)
    for k in range(bump.M0 + 1):
        assert np.max(np.abs(bump.derivative(grid, k))) <= bump.c_achieved * (1 + 1e-9)
    with pytest.raises(ValueError):
        bump.derivative(0.0, bump.M0 + 1)


def test_family_support_must_stay_inside_unit_interval(bump):
    with pytest.raises(ValueError):
        WeightFamily(100, (0.05, 0.5), bump)
    with pytest.raises(ValueError):
        WeightFamily(100, (0.5, 0.95), bump)


def test_psi_and_varpi(quad_family):
    f = quad_family
    assert psi(f, 1, 0.4 * f.X) == pytest.approx(math.exp(-1))
    a, b = f.bounds(0)
    assert psi(f, 0, a * f.X - 1) == 0.0 and psi(f, 0, b * f.X + 1) == 0.0
    assert varpi(f, (30, 40, 40, 30)) == pytest.approx(math.exp(-4))
    assert varpi(f, (30, 40, 40, 90)) == 0.0
    with pytest.raises(IndexError):
        psi(f, 4, 10)
    with pytest.raises(ValueError):
        varpi(f, (30, 40))


def test_integer_range_covers_support(quad_family):
    xs = quad_family.integer_range(0)
    assert xs[0] == 22 and xs[-1] == 38


def test_partition_of_unity_to_1e5():
    sc = DyadicScheme(2.0)
    x = np.arange(1, 100_001, dtype=float)
    top = math.ceil(math.log2(100_000)) + 2
    total = sum(sc.Psi_T(t, x) for t in range(top + 1))
    assert np.max(np.abs(total - 1.0)) < 1e-9
    assert sum(partition_weight(sc, 2.0**t, 17) for t in range(8)) == pytest.approx(1.0, abs=1e-12)


def test_partition_support_and_grid():
    sc = DyadicScheme(2.0)
    assert partition_weight(sc, 1, 2.0) == 0.0 and partition_weight(sc, 1, 5.0) == 0.0
    x = np.linspace(0.01, 300, 5000)
    for t in range(6):
        T = 2.0**t
        vals = sc.Psi_T(t, x)
        outside = (x < T / 2) | (x > 2 * T)
        assert np.all(vals[outside] == 0)
        assert np.max(np.abs(vals)) <= 2.0
    with pytest.raises(ValueError):
        partition_weight(sc, 3.0, 1.0)
    with pytest.raises(ValueError):
        DyadicScheme(1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.1, 4.0), st.floats(1.0, 1e5))
def test_partition_of_unity_any_theta(theta, x):
    sc = DyadicScheme(theta)
    top = math.ceil(math.log(x, theta)) + 2
    assert abs(sum(sc.Psi_T(t, x) for t in range(top + 1)) - 1.0) < 1e-9


def test_enumerate_Xi_example():
    fam = WeightFamily(1000, (0.3,), make_bump(0.05))
    pairs = enumerate_Xi(fam, DyadicScheme(2.0), 0)
    sums = {p.s + p.t for p in pairs}
    assert sums == set(range(6, 11))
    assert len(pairs) == sum(e + 1 for e in range(6, 11))
    for p in pairs:
        assert 62.5 <= p.M * p.N <= 1400


def test_enumerate_Xi_grows_like_log_squared():
    fam = WeightFamily(1000, (0.3,), make_bump(0.05))
    ratios = []
    for k in range(6):
        X = 1000 * 2**k
        n = len(enumerate_Xi(fam.with_X(X), DyadicScheme(), 0))
        ratios.append(n / math.log(X) ** 2)
    assert max(ratios) < 2 * min(ratios)


def test_role_split_examples():
    r = role_split(DyadicPair(2, 6))
    assert r.U == 4 and r.k_kind == "mu" and r.l_kind == "log"
    r = role_split(DyadicPair(6, 2))
    assert r.U == 4 and r.k_kind == "log"
    r = role_split(DyadicPair(3, 3))
    assert r.k_kind == "mu"
    assert np.all(np.abs(r.K(r.u_range())) <= 1.0)


def test_role_split_weights_are_log_bounded():
    r = role_split(DyadicPair(3, 9))
    assert np.max(np.abs(r.L(r.v_range()))) <= math.log(2**10)


@pytest.mark.parametrize("X", [600, 3000])
def test_dyadic_rebuild_of_mangoldt_weight(X):
    fam = WeightFamily(X, (0.3,), make_bump(0.08))
    ctx = ExpSumContext(diagonal_form([1], 1), fam)
    sc = DyadicScheme()
    xs = fam.integer_range(0)
    total = np.zeros(len(xs))
    for pair in enumerate_Xi(fam, sc, 0):
        px, c = block_coordinate_weights(ctx, pair, 0, sc)
        total[np.searchsorted(xs, px)] += c
    lam = SieveTable(X).lambda_array()[xs]
    expect = lam * fam.psi(0, xs)
    big = np.abs(expect) > 0
    assert np.all(np.abs(total[big] - expect[big]) <= 1e-6 * np.abs(expect[big]))
    assert np.max(np.abs(total[~big])) < 1e-9
