"""Ground truth by enumeration: weighted prime counts, Fourier inversion and
finite-field probes of singular loci."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import BudgetExceeded, ContractViolation
from .expsums import DEFAULT_BUDGET, ExpSumContext, rational_scan
from .forms import IntegerPolynomial, PolyLike, as_poly, diagonal_coefficients, gradient
from .weights import WeightFamily


@dataclass
class CountReport:
    """Result of a weighted zero count.

    ``weighted`` is the sum of ``prod psi_i(x_i) Lambda(x_i)`` over zeros,
    ``raw`` the number of zeros with nonzero weight and ``enumeration`` the
    number of tuples (or table entries) visited.
    """

    X: float
    weighted: float
    raw: int
    enumeration: int
    wall_time: float = field(default=0.0, compare=False)
    method: str = "brute"

    def to_dict(self, include_time: bool = True) -> dict:
        out = asdict(self)
        if not include_time:
            out.pop("wall_time")
        return out


def _context(F: PolyLike, family: WeightFamily, budget: int) -> ExpSumContext:
    from .forms import IntegerForm

    poly = as_poly(F)
    form = F if isinstance(F, IntegerForm) else IntegerForm(poly)
    return ExpSumContext(form, family, budget=budget)


def brute_count(F: PolyLike, family: WeightFamily, star: bool = False, budget: int = DEFAULT_BUDGET,
                ctx: ExpSumContext | None = None) -> CountReport:
    """Enumerate every weighted tuple of prime powers (primes only with ``star``)."""
    t0 = time.perf_counter()
    ctx = ctx or _context(F, family, budget)
    axes = [ctx.axis(i, star) for i in range(ctx.n)]
    size = math.prod(len(a[0]) for a in axes)
    if size > budget:
        raise BudgetExceeded(f"brute count needs {size} tuples, budget is {budget}")
    coeffs, exps = as_poly(ctx.form).kernel_arrays()
    if size == 0:
        weighted, raw = 0.0, 0
    else:
        weighted, raw = _kernels.zero_count(coeffs, exps, [a[0] for a in axes], [a[1] for a in axes])
    return CountReport(family.X, weighted, raw, size, time.perf_counter() - t0, "brute")


def _half_table(coeffs, d, axes, idx):
    vals = np.zeros(1, dtype=np.int64)
    wts = np.ones(1)
    for i in idx:
        xs, w = axes[i]
        term = coeffs[i] * xs.astype(np.int64) ** d
        vals = (vals[:, None] + term[None, :]).ravel()
        wts = (wts[:, None] * w[None, :]).ravel()
    uniq, inv = np.unique(vals, return_inverse=True)
    inv = inv.ravel()
    return uniq, np.bincount(inv, weights=wts, minlength=len(uniq)), np.bincount(inv, minlength=len(uniq))


def diagonal_fast_count(F: PolyLike, family: WeightFamily, star: bool = False, budget: int = DEFAULT_BUDGET,
                        ctx: ExpSumContext | None = None) -> CountReport:
    """Meet-in-the-middle count for ``sum c_i x_i^d = 0``.

    The first half of the coordinates is tabulated by value, the second half by
    negated value, and the two tables are joined on equal keys.
    """
    t0 = time.perf_counter()
    diag = diagonal_coefficients(F)
    if diag is None:
        raise ValueError("diagonal_fast_count needs a diagonal form")
    d, coeffs = diag
    ctx = ctx or _context(F, family, budget)
    axes = [ctx.axis(i, star) for i in range(ctx.n)]
    n = len(axes)
    left_idx, right_idx = list(range(n // 2)), list(range(n // 2, n))
    size_l = math.prod(len(axes[i][0]) for i in left_idx)
    size_r = math.prod(len(axes[i][0]) for i in right_idx)
    if size_l + size_r > budget:
        raise BudgetExceeded(f"half tables need {size_l + size_r} entries, budget is {budget}")
    bound = sum(abs(c) * max((int(x) for x in axes[i][0]), default=0) ** d for i, c in enumerate(coeffs))
    if bound >= 2**62:
        raise BudgetExceeded("partial sums exceed int64")
    lv, lw, lc = _half_table(coeffs, d, axes, left_idx)
    rv, rw, rc = _half_table(coeffs, d, axes, right_idx)
    pos = np.searchsorted(rv, -lv)
    pos_c = np.minimum(pos, len(rv) - 1)
    hit = (pos < len(rv)) & (rv[pos_c] == -lv)
    weighted = math.fsum((lw[hit] * rw[pos_c[hit]]).tolist())
    raw = int(np.sum(lc[hit] * rc[pos_c[hit]]))
    return CountReport(family.X, weighted, raw, size_l + size_r, time.perf_counter() - t0, "meet-in-the-middle")


def discrete_orthogonality_check(F: PolyLike, family: WeightFamily, budget: int = DEFAULT_BUDGET) -> dict:
    """``(1/Q) sum_j S(j/Q)`` against the brute-force weighted count, ``Q = 2 max|F| + 1``."""
    poly = as_poly(F)
    if poly.is_zero():
        raise ValueError("the zero form is excluded")
    ctx = _context(F, family, budget)
    vals, w = ctx.phase_data()
    Q = 2 * int(np.max(np.abs(vals))) + 1 if len(vals) else 1
    if Q * len(vals) > budget * 10:
        raise BudgetExceeded(f"orthogonality check needs {Q} x {len(vals)} terms")
    scan = rational_scan(ctx, Q)
    lhs = complex(math.fsum(scan.real), math.fsum(scan.imag)) / Q
    rhs = brute_count(F, family, budget=budget, ctx=ctx).weighted
    err = abs(lhs - rhs) / abs(rhs) if rhs else abs(lhs)
    return {"Q": Q, "lhs": lhs.real, "lhs_imag": lhs.imag, "rhs": rhs, "rel_error": err}


# ------------------------------------------------------------ finite-field probes

def singular_locus_system(F: PolyLike) -> list[IntegerPolynomial]:
    """The partial derivatives of ``F``."""
    return [g for g in gradient(F)]


def second_block_system(G: PolyLike, h: int) -> list[IntegerPolynomial]:
    """Derivatives of ``G(u; v)`` in the ``v`` variables (indices ``h..2h-1``)."""
    poly = as_poly(G)
    if poly.n != 2 * h:
        raise ValueError("expected 2h variables")
    return [poly.derivative(h + i) for i in range(h)]


def _system_arrays(system: Sequence[IntegerPolynomial]):
    m = system[0].n
    coeffs, exps, owner = [], [], []
    for j, poly in enumerate(system):
        if poly.n != m:
            raise ValueError("system polynomials must share variables")
        for e, c in poly.terms:
            coeffs.append(c)
            exps.append(e)
            owner.append(j)
    return (np.array(coeffs, dtype=np.int64), np.array(exps, dtype=np.int64).reshape(len(coeffs), m),
            np.array(owner, dtype=np.int64), m)


def count_points(system: Sequence[IntegerPolynomial], p: int, mode: str = "exhaustive", samples: int = 200_000,
                 seed: int = 0, budget: int = DEFAULT_BUDGET) -> float:
    """Number of common zeros in ``F_p^m`` (exact, or a sampled estimate)."""
    coeffs, exps, owner, m = _system_arrays(system)
    if mode == "exhaustive":
        if p**m > budget:
            raise BudgetExceeded(f"{p}^{m} points exceed the budget {budget}")
        if len(coeffs) == 0:
            return float(p**m)
        return float(_kernels.variety_count(coeffs, exps, owner, len(system), p, m))
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    pts = rng.integers(0, p, size=(samples, m), dtype=np.int64)
    vals = np.zeros((len(system), samples), dtype=np.int64)
    for k in range(len(coeffs)):
        t = np.full(samples, int(coeffs[k]) % p, dtype=np.int64)
        for i in range(m):
            if exps[k, i]:
                t = (t * _kernels.pow_mod_vec(pts[:, i], int(exps[k, i]), p)) % p
        vals[owner[k]] = (vals[owner[k]] + t) % p
    hits = int(np.count_nonzero(np.all(vals == 0, axis=0)))
    return max(1.0, hits / samples * p**m)


@dataclass
class CodimProbe:
    """Heuristic dimension estimate of an affine variety from point counts over ``F_p``.

    The estimate takes the largest rounded ``log_p`` count over the probed
    primes; it is not a certificate.
    """

    primes: tuple[int, ...]
    counts: tuple[float, ...]
    ambient: int
    dimension: int
    codim: int
    mode: str
    heuristic: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def codim_probe(system: PolyLike | Sequence[IntegerPolynomial], primes: Sequence[int] = (5, 7),
                mode: str = "exhaustive", samples: int = 200_000, seed: int = 0,
                budget: int = DEFAULT_BUDGET) -> CodimProbe:
    """Probe ``codim`` of a variety.

    A single form is replaced by its gradient system (the singular locus).
    For diagonal forms and primes not dividing ``d`` times any coefficient the
    probe must return codimension ``n``.
    """
    if isinstance(system, (list, tuple)):
        polys = list(system)
        diag = None
    else:
        polys = singular_locus_system(system)
        diag = diagonal_coefficients(system)
    m = polys[0].n
    counts = tuple(count_points(polys, p, mode, samples, seed, budget) for p in primes)
    dims = [min(m, max(0, round(math.log(c, p)))) if c >= 1 else 0 for c, p in zip(counts, primes)]
    dim = max(dims)
    probe = CodimProbe(tuple(primes), counts, m, dim, m - dim, mode)
    if diag is not None and mode == "exhaustive":
        d, cs = diag
        good = [p for p in primes if all((d * c) % p for c in cs)]
        for p, cnt in zip(primes, counts):
            if p in good and cnt != 1:
                raise ContractViolation(f"diagonal form has singular points mod {p}")
    return probe
