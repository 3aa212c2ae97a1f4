"""Exponential sums over prime-weighted boxes and their lattice-point counters.

All phases ``e(theta) = exp(2 pi i theta)`` are formed from exact integer
values of the form: rational frequencies use exact residues and a
root-of-unity table, real frequencies are range-reduced in extended
precision before the trigonometric call.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .arithmetic import DirichletCharacter, SieveTable, character_group, euler_phi, induce
from .errors import BudgetExceeded
from .forms import IntegerForm, IntegerPolynomial, MultilinearTensor, PolyLike, as_poly, diagonal_coefficients
from .weights import DyadicIndexPair, DyadicPair, DyadicScheme, WeightFamily, enumerate_Xi, role_split

DEFAULT_BUDGET = 20_000_000
_RATIONAL_DEN_LIMIT = 20_000_000

Alpha = float | Fraction


# ------------------------------------------------------------ phases

def _frac_parts(alpha: float, values: np.ndarray) -> np.ndarray:
    """``alpha * values mod 1`` computed in extended precision."""
    a = np.longdouble(alpha)
    prod = a * values.astype(np.longdouble)
    return (prod - np.floor(prod)).astype(np.float64)


def weighted_phase_sum(values: np.ndarray, weights: np.ndarray, alpha: Alpha) -> complex:
    """``sum_k weights_k e(alpha values_k)`` for integer ``values``."""
    values = np.asarray(values)
    weights = np.asarray(weights, dtype=np.float64)
    if values.dtype == object:
        if isinstance(alpha, Fraction):
            res = np.array([int(v) * alpha.numerator % alpha.denominator for v in values], dtype=np.int64)
            return complex(_kernels.rational_phase_sums(weights, res, alpha.denominator, [1])[0])
        theta = np.array([float((Fraction(alpha) * int(v)) % 1) for v in values])
        return _kernels.phase_sum(weights, theta)
    if isinstance(alpha, Fraction):
        if alpha.denominator <= _RATIONAL_DEN_LIMIT:
            q = alpha.denominator
            res = np.mod(values, q).astype(np.int64)
            return complex(_kernels.rational_phase_sums(weights, res, q, [alpha.numerator % q])[0])
        alpha = float(alpha)
    return _kernels.phase_sum(weights, _frac_parts(float(alpha), values))


def _aggregate(values: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge equal integer values, summing their weights."""
    keep = weights != 0
    values, weights = values[keep], weights[keep]
    uniq, inv = np.unique(values, return_inverse=True)
    return uniq, np.bincount(inv.ravel(), weights=weights, minlength=len(uniq))


def _outer_product(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1)
    for v in vectors:
        out = np.multiply.outer(out, np.asarray(v, dtype=np.float64)).ravel()
    return out


def _box_sum_data(form: PolyLike, axes: Sequence[np.ndarray], weights: Sequence[np.ndarray], budget: int):
    size = math.prod(len(a) for a in axes)
    if size > budget:
        raise BudgetExceeded(f"box has {size} points, budget is {budget}")
    poly = as_poly(form)
    if size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    coeffs, exps = poly.kernel_arrays()
    bound = sum(abs(int(c)) * math.prod(max((abs(int(x)) for x in a), default=0) ** int(e) for a, e in zip(axes, ex))
                for c, ex in zip(coeffs, exps))
    if bound < 2**62:
        vals = _kernels.box_values(coeffs, exps, [np.asarray(a, dtype=np.int64) for a in axes])
    else:
        grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        vals = poly.eval_many(grid.astype(object))
    w = _outer_product(weights)
    if vals.dtype == object:
        return vals, w
    return _aggregate(vals, w)


# ------------------------------------------------------------ contexts

@dataclass
class ExpSumContext:
    """Form, weight family and sieve behind ``S(alpha)``.

    Parameters
    ----------
    form : IntegerForm
    family : WeightFamily
        Must have ``family.n == form.n``.
    sieve : SieveTable, optional
        Built on demand up to ``ceil(X)``.
    budget : int
        Largest number of box points enumerated.
    """

    form: IntegerForm
    family: WeightFamily
    sieve: SieveTable | None = None
    budget: int = DEFAULT_BUDGET
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.form.n != self.family.n:
            raise ValueError("form and weight family disagree on the number of variables")
        need = max(2, math.ceil(self.family.X))
        if self.sieve is None:
            self.sieve = SieveTable(need)
        elif self.sieve.limit < need:
            raise ValueError(f"sieve covers {self.sieve.limit} < X={self.family.X}")

    @property
    def X(self) -> float:
        return self.family.X

    @property
    def n(self) -> int:
        return self.form.n

    def axis(self, i: int, star: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Integers with nonzero weight on coordinate ``i`` and their weights ``psi_i * Lambda``."""
        key = ("axis", i, star)
        if key not in self._cache:
            xs = self.family.integer_range(i)
            lam = self.sieve.lambda_star_array() if star else self.sieve.lambda_array()
            w = lam[xs] * self.family.psi(i, xs)
            keep = w != 0
            self._cache[key] = (xs[keep], w[keep])
        return self._cache[key]

    def box_size(self, star: bool = False) -> int:
        return math.prod(len(self.axis(i, star)[0]) for i in range(self.n))

    def phase_data(self, star: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Distinct values of ``F`` on the weighted box with aggregated weights."""
        key = ("data", star)
        if key not in self._cache:
            axes = [self.axis(i, star) for i in range(self.n)]
            self._cache[key] = _box_sum_data(self.form, [a[0] for a in axes], [a[1] for a in axes], self.budget)
        return self._cache[key]


def S_alpha(ctx: ExpSumContext, alpha: Alpha) -> complex:
    """``sum_x prod_i psi_i(x_i) Lambda(x_i) e(alpha F(x))``."""
    vals, w = ctx.phase_data(False)
    return weighted_phase_sum(vals, w, alpha)


def S_star_alpha(ctx: ExpSumContext, alpha: Alpha) -> complex:
    """As :func:`S_alpha` with prime weights ``Lambda*`` only."""
    vals, w = ctx.phase_data(True)
    return weighted_phase_sum(vals, w, alpha)


def star_gap(ctx: ExpSumContext, alpha: Alpha) -> dict:
    """``|S - S*|`` against the reference scale ``X^(n - 1/2) (log X)^n``."""
    gap = abs(S_alpha(ctx, alpha) - S_star_alpha(ctx, alpha))
    scale = ctx.X ** (ctx.n - 0.5) * math.log(ctx.X) ** ctx.n
    return {"gap": gap, "scale": scale, "ratio": gap / scale}


def rational_scan(ctx: ExpSumContext, Q: int, js: Iterable[int] | None = None, star: bool = False) -> np.ndarray:
    """``S(j/Q)`` for each ``j`` (all ``0 <= j < Q`` by default)."""
    vals, w = ctx.phase_data(star)
    js = np.arange(Q, dtype=np.int64) if js is None else np.asarray(list(js), dtype=np.int64)
    if vals.dtype == object:
        return np.array([weighted_phase_sum(vals, w, Fraction(int(j), Q)) for j in js])
    return _kernels.rational_phase_sums(w, np.mod(vals, Q).astype(np.int64), Q, js)


def scan_rows(ctx: ExpSumContext, alphas: Sequence[Alpha], star: bool = False) -> list[dict]:
    """Rows ``alpha, re, im, abs`` for CSV output."""
    rows = []
    fn = S_star_alpha if star else S_alpha
    for a in alphas:
        s = fn(ctx, a)
        rows.append({"alpha": float(a), "re": s.real, "im": s.imag, "abs": abs(s)})
    return rows


# ------------------------------------------------------------ complete sums

def _normalise_chars(q: int, n: int, chars) -> list[DirichletCharacter | None]:
    if chars is None:
        return [None] * n
    chars = list(chars)
    if len(chars) != n:
        raise ValueError(f"need {n} character slots, got {len(chars)}")
    out = []
    for chi in chars:
        if chi is None or chi.is_principal:
            out.append(None)
        elif chi.modulus == q:
            out.append(chi)
        elif q % chi.modulus == 0:
            out.append(induce(chi, q))
        else:
            raise ValueError(f"character modulus {chi.modulus} does not divide {q}")
    return out


def _conj_rotations(q: int, chars: Sequence[DirichletCharacter | None]) -> tuple[np.ndarray, int]:
    """Rotation table ``(n, phi(q))`` of the conjugate characters on the units."""
    units = character_group(q).units
    E = math.lcm(1, *[c.exponent for c in chars if c is not None])
    rots = np.zeros((len(chars), len(units)), dtype=np.int64)
    for i, c in enumerate(chars):
        if c is not None:
            rots[i] = (-(c.rot[units] * (E // c.exponent))) % E
    return rots, E


@functools.lru_cache(maxsize=512)
def _histogram(q: int, poly: IntegerPolynomial, rot_bytes: bytes, n_slots: int, E: int) -> np.ndarray:
    units = character_group(q).units
    rots = np.frombuffer(rot_bytes, dtype=np.int64).reshape(n_slots, len(units))
    coeffs, exps = poly.kernel_arrays()
    out = _kernels.residue_histogram(coeffs, exps, q, units, rots, E)
    out.setflags(write=False)
    return out


def _exact_sum(hist: np.ndarray, q: int, E: int, a_values: np.ndarray) -> np.ndarray:
    """``sum_{r,s} H[r,s] e(a r / q + s / E)`` with integer bucket counts mod ``lcm(q, E)``."""
    L = math.lcm(q, E)
    r_idx, s_idx = np.nonzero(hist)
    cnt = hist[r_idx, s_idx]
    base = (s_idx * (L // E)) % L
    ang = 2.0 * np.pi * np.arange(L) / L
    cos_t, sin_t = np.cos(ang), np.sin(ang)
    out = np.empty(len(a_values), dtype=complex)
    for j, a in enumerate(a_values):
        k = (base + (int(a) % q) * r_idx * (L // q)) % L
        buckets = np.bincount(k, weights=cnt.astype(np.float64), minlength=L)
        nz = np.nonzero(buckets)[0]
        out[j] = complex(math.fsum(buckets[nz] * cos_t[nz]), math.fsum(buckets[nz] * sin_t[nz]))
    return out


def _slot_hist(q: int, poly: IntegerPolynomial, chars: Sequence[DirichletCharacter | None], budget: int):
    rots, E = _conj_rotations(q, chars)
    size = euler_phi(q) ** poly.n
    if size > budget:
        raise BudgetExceeded(f"complete sum mod {q} needs {size} terms, budget is {budget}")
    return _histogram(q, poly, rots.tobytes(), len(chars), E), E


def complete_sums_all_a(q: int, F: PolyLike, chars=None, a_values=None, budget: int = DEFAULT_BUDGET) -> dict[int, complex]:
    """``A(q, a)`` for every ``a`` in ``a_values`` (default: all units mod ``q``)."""
    if q < 1:
        raise ValueError("q must be a positive integer")
    poly = as_poly(F)
    n = poly.n
    units = character_group(q).units
    if a_values is None:
        a_values = units
    a_values = np.array([int(a) for a in a_values], dtype=np.int64)
    for a in a_values:
        if math.gcd(int(a), q) != 1:
            raise ValueError(f"a={a} is not coprime to q={q}")
    if q == 1:
        return {int(a): 1 + 0j for a in a_values}
    slots = _normalise_chars(q, n, chars)
    diag = diagonal_coefficients(poly)
    if diag is not None and n > 1:
        d, coeffs = diag
        total = np.ones(len(a_values), dtype=complex)
        for i, c in enumerate(coeffs):
            one = IntegerPolynomial(1, [((d,), c)])
            hist, E = _slot_hist(q, one, [slots[i]], budget)
            total *= _exact_sum(hist, q, E, a_values)
        return {int(a): complex(v) for a, v in zip(a_values, total)}
    hist, E = _slot_hist(q, poly, slots, budget)
    vals = _exact_sum(hist, q, E, a_values)
    return {int(a): complex(v) for a, v in zip(a_values, vals)}


def complete_sum_A(q: int, a: int, F: PolyLike, char_assignment=None, budget: int = DEFAULT_BUDGET) -> complex:
    """``sum over h in (Z/qZ)^{*n} of prod_i conj(chi_i)(h_i) e(a F(h) / q)``.

    ``char_assignment`` holds one character (or ``None`` for principal) per
    variable; a character of modulus dividing ``q`` is induced up to ``q``.
    """
    if q == 0:
        raise ValueError("q must be nonzero")
    if math.gcd(int(a), int(q)) != 1:
        raise ValueError(f"a={a} is not coprime to q={q}")
    return complete_sums_all_a(abs(int(q)), F, char_assignment, [int(a) % abs(int(q))], budget)[int(a) % abs(int(q))]


def complete_sum_bound_check(q: int, F: PolyLike, codim: float, eps: float = 0.0, n_char_samples: int = 8,
                             seed: int = 0, budget: int = DEFAULT_BUDGET) -> dict:
    """Largest ``|A(q, a; chi)|`` over all ``a`` and sampled character tuples versus
    ``q^(n - codim / (2 (2d - 1) 4^d) + eps)``.

    The principal tuple is always included; further tuples are drawn with a
    seeded generator.
    """
    poly = as_poly(F)
    n, d = poly.n, poly.degree
    bound = q ** (n - codim / (2 * (2 * d - 1) * 4**d) + eps)
    tuples: list = [None]
    if q > 1 and n_char_samples > 0:
        from .arithmetic import characters_mod

        chars = characters_mod(q)
        rng = np.random.default_rng(seed)
        for _ in range(n_char_samples):
            tuples.append([chars[int(k)] for k in rng.integers(0, len(chars), size=n)])
    best = 0.0
    for tup in tuples:
        vals = complete_sums_all_a(q, poly, tup, budget=budget)
        best = max(best, max(abs(v) for v in vals.values()))
    return {"q": q, "max_abs": best, "bound": bound, "ratio": best / bound}


# ------------------------------------------------------------ dyadic blocks

def block_coordinate_weights(ctx: ExpSumContext, pair: DyadicPair, i: int,
                             scheme: DyadicScheme | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``c(x) = psi_i(x) sum_{uv = x} K(u) L(v)`` on the support of ``psi_i``."""
    key = ("block", i, pair.s, pair.t, pair.Theta)
    if key in ctx._cache:
        return ctx._cache[key]
    scheme = scheme or DyadicScheme(pair.Theta)
    rs = role_split(pair, scheme, ctx.sieve)
    xs = ctx.family.integer_range(i)
    if len(xs) == 0:
        out = (xs, np.zeros(0))
    else:
        lo, hi = int(xs[0]), int(xs[-1])
        u = rs.u_range()
        v = rs.v_range()
        u = u[u <= hi]
        v = v[v <= hi]
        acc = np.zeros(hi - lo + 1)
        if len(u) and len(v):
            ku, lv = rs.K(u), rs.L(v)
            prod = np.multiply.outer(u, v)
            wts = np.multiply.outer(ku, lv)
            ok = (prod >= lo) & (prod <= hi) & (wts != 0)
            acc += np.bincount((prod[ok] - lo).ravel(), weights=wts[ok].ravel(), minlength=hi - lo + 1)
        c = acc * ctx.family.psi(i, xs)
        keep = c != 0
        out = (xs[keep], c[keep])
    ctx._cache[key] = out
    return out


def dyadic_blocks(ctx: ExpSumContext, scheme: DyadicScheme | None = None) -> list[DyadicIndexPair]:
    """Every ``(M, N)`` in the product of the per-coordinate sets ``Xi``."""
    scheme = scheme or DyadicScheme()
    per = [enumerate_Xi(ctx.family, scheme, i) for i in range(ctx.n)]
    return [DyadicIndexPair(tuple(p)) for p in itertools.product(*per)]


def dyadic_block_S(ctx: ExpSumContext, index_pair: DyadicIndexPair, alpha: Alpha) -> complex:
    """``S(M, N; alpha)``: the block of ``S`` with ``u_i v_i`` split on dyadic boxes."""
    if len(index_pair.pairs) != ctx.n:
        raise ValueError("one dyadic pair per coordinate is required")
    axes = [block_coordinate_weights(ctx, p, i) for i, p in enumerate(index_pair.pairs)]
    if any(len(a[0]) == 0 for a in axes):
        return 0j
    vals, w = _box_sum_data(ctx.form, [a[0] for a in axes], [a[1] for a in axes], ctx.budget)
    return weighted_phase_sum(vals, w, alpha)


def block_reconstruction(ctx: ExpSumContext, alpha: Alpha, scheme: DyadicScheme | None = None) -> dict:
    """Sum of all dyadic blocks compared with ``S(alpha)``."""
    blocks = dyadic_blocks(ctx, scheme)
    parts = [dyadic_block_S(ctx, b, alpha) for b in blocks]
    total = complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))
    direct = S_alpha(ctx, alpha)
    return {
        "blocks": len(blocks),
        "sum_blocks": total,
        "S": direct,
        "rel_error": abs(total - direct) / max(abs(direct), 1e-300),
    }


# ------------------------------------------------------------ block translation

@dataclass
class BlockContext:
    """One translated sub-box of a dyadic block.

    The first ``h`` coordinates (``active``) carry the ``(u, v)`` variables;
    the remaining ones are fixed to the products ``x_tilde``.

    Attributes
    ----------
    ell, ell_prime : tuple of int
        Sub-box indices ``0 <= ell_i <= U_i / U_min`` (same for ``V``).
    x_tilde : tuple of int
        Values of the inactive coordinates, in index order.
    """

    ctx: ExpSumContext
    index_pair: DyadicIndexPair
    active: tuple[int, ...]
    ell: tuple[int, ...]
    ell_prime: tuple[int, ...]
    x_tilde: tuple[int, ...]
    scheme: DyadicScheme = field(default_factory=DyadicScheme)

    def __post_init__(self):
        h = len(self.active)
        if not (len(self.ell) == len(self.ell_prime) == h):
            raise ValueError("one sub-box index per active coordinate")
        if len(self.x_tilde) != self.ctx.n - h:
            raise ValueError("x_tilde must fix every inactive coordinate")
        for i, (l, lp) in enumerate(zip(self.ell, self.ell_prime)):
            if not 0 <= l <= self.ell_max(i) or not 0 <= lp <= self.ell_prime_max(i):
                raise ValueError(f"sub-box index out of range at active slot {i}")

    @property
    def h(self) -> int:
        return len(self.active)

    @property
    def inactive(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.ctx.n) if i not in self.active)

    def _pairs(self):
        return [self.index_pair.pairs[i] for i in self.active]

    @property
    def U_list(self) -> list[float]:
        return [p.U for p in self._pairs()]

    @property
    def V_list(self) -> list[float]:
        return [p.V for p in self._pairs()]

    @property
    def U_min(self) -> float:
        return min(self.U_list)

    @property
    def V_min(self) -> float:
        return min(self.V_list)

    @property
    def U(self) -> float:
        return self.scheme.Theta * self.U_min

    @property
    def V(self) -> float:
        return self.scheme.Theta * self.V_min

    def ell_max(self, i: int) -> int:
        return math.floor(self.U_list[i] / self.U_min + 1e-12)

    def ell_prime_max(self, i: int) -> int:
        return math.floor(self.V_list[i] / self.V_min + 1e-12)

    def W(self, i: int) -> float:
        th = self.scheme.Theta
        return self.U_list[i] / th + self.ell[i] * th * self.U_min

    def W_prime(self, i: int) -> float:
        th = self.scheme.Theta
        return self.V_list[i] / th + self.ell_prime[i] * th * self.V_min

    @property
    def w(self) -> tuple[int, ...]:
        return tuple(math.ceil(self.W(i) - 1e-12) for i in range(self.h))

    @property
    def w_prime(self) -> tuple[int, ...]:
        return tuple(math.ceil(self.W_prime(i) - 1e-12) for i in range(self.h))

    def _split(self, i: int):
        return role_split(self._pairs()[i], self.scheme, self.ctx.sieve)

    def K_axis(self, i: int) -> np.ndarray:
        """``K_i(u + w_i)`` times both indicators, for ``u = 0..floor(U)``."""
        th = self.scheme.Theta
        Ui, wi = self.U_list[i], self.w[i]
        u = np.arange(0, math.floor(self.U + 1e-12) + 1, dtype=np.int64)
        x = u + wi
        ok = (x >= Ui / th - 1e-12) & (x <= Ui * th + 1e-12) & (u < self.W(i) + self.U - wi)
        out = np.zeros(len(u))
        if ok.any():
            out[ok] = self._split(i).K(x[ok])
        return out

    def L_axis(self, i: int) -> np.ndarray:
        th = self.scheme.Theta
        Vi, wi = self.V_list[i], self.w_prime[i]
        v = np.arange(0, math.floor(self.V + 1e-12) + 1, dtype=np.int64)
        x = v + wi
        ok = (x >= Vi / th - 1e-12) & (x <= Vi * th + 1e-12) & (v < self.W_prime(i) + self.V - wi)
        out = np.zeros(len(v))
        if ok.any():
            out[ok] = self._split(i).L(x[ok])
        return out

    def g_polynomial(self) -> IntegerPolynomial:
        """``g(u, v) = F((u_1 + w_1)(v_1 + w'_1), ..., x_tilde)`` in ``2h`` variables."""
        h = self.h
        images = [None] * self.ctx.n
        for k, i in enumerate(self.active):
            uk = IntegerPolynomial.variable(2 * h, k) + self.w[k]
            vk = IntegerPolynomial.variable(2 * h, h + k) + self.w_prime[k]
            images[i] = uk * vk
        for i, val in zip(self.inactive, self.x_tilde):
            images[i] = IntegerPolynomial.constant(2 * h, int(val))
        return as_poly(self.ctx.form).substitute(images)

    def psi_grid(self) -> np.ndarray:
        """``prod_i psi_i((u_i + w_i)(v_i + w'_i))`` on the ``(u, v)`` grid, shape ``(|u|,)*h + (|v|,)*h``."""
        h = self.h
        nu = math.floor(self.U + 1e-12) + 1
        nv = math.floor(self.V + 1e-12) + 1
        out = np.ones((nu,) * h + (nv,) * h)
        for k, i in enumerate(self.active):
            x = np.multiply.outer(np.arange(nu) + self.w[k], np.arange(nv) + self.w_prime[k])
            shape = [1] * (2 * h)
            shape[k], shape[h + k] = nu, nv
            out = out * self.ctx.family.psi(i, x).reshape(shape)
        return out

    def weights_grid(self) -> np.ndarray:
        """``K(u) L(v) psi(u; v)`` on the full grid."""
        h = self.h
        out = self.psi_grid()
        for k in range(h):
            shape = [1] * (2 * h)
            shape[k] = -1
            out = out * self.K_axis(k).reshape(shape)
            shape = [1] * (2 * h)
            shape[h + k] = -1
            out = out * self.L_axis(k).reshape(shape)
        return out

    def E(self, alpha: Alpha) -> complex:
        """``sum over u in [0, U]^h, v in [0, V]^h of K(u) L(v) psi(u; v) e(alpha g(u, v))``."""
        w = self.weights_grid()
        nz = np.nonzero(w)
        if len(nz[0]) == 0:
            return 0j
        pts = np.stack(nz, axis=1).astype(np.int64)
        vals = self.g_polynomial().eval_many(pts)
        return weighted_phase_sum(vals, w[nz], alpha)

    def weyl_input(self, v: Sequence[int], alpha: Alpha) -> "WeylInput":
        """The ``u``-sum ``T_v`` at a fixed ``v``: phase ``g(., v)`` and weights ``K(u) psi(u; v)``."""
        h = self.h
        v = [int(x) for x in v]
        g = self.g_polynomial()
        images = [IntegerPolynomial.variable(h, k) for k in range(h)] + [IntegerPolynomial.constant(h, x) for x in v]
        phase = g.substitute(images)
        psi = self.psi_grid()[(slice(None),) * h + tuple(v)]
        a = psi.copy()
        for k in range(h):
            shape = [1] * h
            shape[k] = -1
            a = a * self.K_axis(k).reshape(shape)
        return WeylInput(phase, a, alpha)


def translated_block_sum(ctx: ExpSumContext, index_pair: DyadicIndexPair, alpha: Alpha,
                         active: Sequence[int] | None = None, scheme: DyadicScheme | None = None) -> dict:
    """Re-sum a dyadic block over tail values and translated sub-boxes.

    Returns the block value, the re-summed value and the number of
    sub-boxes visited.
    """
    scheme = scheme or DyadicScheme(index_pair.pairs[0].Theta)
    active = tuple(range(ctx.n)) if active is None else tuple(active)
    inactive = [i for i in range(ctx.n) if i not in active]
    tails = [block_coordinate_weights(ctx, index_pair.pairs[i], i, scheme) for i in inactive]
    template = BlockContext(ctx, index_pair, active, (0,) * len(active), (0,) * len(active),
                            tuple(0 for _ in inactive), scheme)
    ell_ranges = [range(template.ell_max(k) + 1) for k in range(len(active))]
    ellp_ranges = [range(template.ell_prime_max(k) + 1) for k in range(len(active))]
    parts = []
    visited = 0
    tail_iter = itertools.product(*[range(len(t[0])) for t in tails])
    for idx in tail_iter:
        x_t = tuple(int(tails[j][0][k]) for j, k in enumerate(idx))
        wt = math.prod(float(tails[j][1][k]) for j, k in enumerate(idx))
        for ell in itertools.product(*ell_ranges):
            for ellp in itertools.product(*ellp_ranges):
                blk = BlockContext(ctx, index_pair, active, ell, ellp, x_t, scheme)
                parts.append(wt * blk.E(alpha))
                visited += 1
    total = complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))
    direct = dyadic_block_S(ctx, index_pair, alpha)
    return {"block": direct, "resummed": total, "sub_boxes": visited, "abs_error": abs(total - direct)}


# ------------------------------------------------------------ Weyl differencing

@dataclass
class WeylInput:
    """A weighted sum ``T = sum_{u in {0..B}^h} a(u) e(alpha phase(u))``."""

    phase: IntegerPolynomial
    weights: np.ndarray
    alpha: Alpha

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        h = self.phase.n
        if self.weights.ndim != h or len(set(self.weights.shape)) > 1:
            raise ValueError("weights must be a cube with one axis per variable")

    @property
    def h(self) -> int:
        return self.phase.n

    @property
    def B(self) -> int:
        return self.weights.shape[0] - 1

    def T(self) -> complex:
        nz = np.nonzero(self.weights)
        if len(nz[0]) == 0:
            return 0j
        pts = np.stack(nz, axis=1).astype(np.int64)
        return weighted_phase_sum(self.phase.eval_many(pts), self.weights[nz], self.alpha)


def weyl_chain_check(inp: WeylInput, t: int, budget: int = DEFAULT_BUDGET) -> tuple[float, float]:
    """Both sides of the ``t``-fold weighted Weyl differencing inequality.

    ``lhs = |T|^(2^(t-1))`` and ``rhs = |U^D|^(2^(t-1) - t)`` times the sum over
    ``u_1..u_{t-1}`` in ``U^D`` of ``|sum_z prod_eps a(eps.u + z) e(F_t(u, z))|``.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    h, B = inp.h, inp.B
    lhs = abs(inp.T()) ** (2 ** (t - 1))
    side = 2 * B + 1
    n_shift = side ** (h * (t - 1))
    if n_shift * (B + 1) ** h * 2 ** (t - 1) > budget:
        raise BudgetExceeded("Weyl chain enumeration exceeds the budget")
    eps_list = list(itertools.product((0, 1), repeat=t - 1))
    signs = np.array([(-1) ** sum(e) for e in eps_list], dtype=np.int64)
    a = inp.weights
    span = np.arange(-B, B + 1)
    shift_grid = np.stack([g.ravel() for g in np.meshgrid(*([span] * h), indexing="ij")], axis=1)
    terms = []
    for combo in itertools.product(range(len(shift_grid)), repeat=t - 1):
        us = shift_grid[list(combo)] if combo else np.zeros((0, h), dtype=np.int64)
        offs = np.array([np.asarray(e, dtype=np.int64) @ us for e in eps_list], dtype=np.int64).reshape(len(eps_list), h)
        lo = -offs.min(axis=0)
        hi = B - offs.max(axis=0)
        if np.any(hi < lo):
            continue
        zs = np.stack([g.ravel() for g in np.meshgrid(*[np.arange(l, u + 1) for l, u in zip(lo, hi)],
                                                     indexing="ij")], axis=1)
        w = np.ones(len(zs))
        for off in offs:
            w = w * a[tuple((zs + off).T)]
        keep = w != 0
        if not keep.any():
            continue
        zs, w = zs[keep], w[keep]
        # F_t(u_1..u_{t-1}, z) = C - sum_eps sign(eps) g(eps.u + z), C constant in z
        shifted = np.zeros(len(zs), dtype=object if inp.phase.degree > 6 else np.int64)
        const = 0
        for s, off in zip(signs, offs):
            shifted = shifted + int(s) * inp.phase.eval_many(zs + off)
            const += int(s) * int(inp.phase.eval_many(off.reshape(1, h))[0])
        phase_vals = const - shifted
        terms.append(abs(weighted_phase_sum(phase_vals, w, inp.alpha)))
    rhs = float(side**h) ** (2 ** (t - 1) - t) * math.fsum(terms)
    return lhs, rhs


# ------------------------------------------------------------ lattice counters

@dataclass(frozen=True)
class LatticeCountSpec:
    """Inputs of the small-fractional-part counters.

    In full mode (``fixed_u`` and ``fixed_v`` both ``None``) the count runs over
    ``u_1..u_d`` in ``[-U', U']^h`` and ``v_1..v_{d-1}`` in ``[-V', V']^h``. With
    ``fixed_u`` (``d - 1`` vectors) and ``fixed_v`` (``d - 1`` vectors) it runs over
    the remaining ``u`` only.
    """

    tensor: MultilinearTensor
    alpha: Alpha
    U_prime: float
    V_prime: float
    P: float
    fixed_u: tuple | None = None
    fixed_v: tuple | None = None

    def __post_init__(self):
        if not self.P > 0:
            raise ValueError("threshold P must be positive")
        if self.U_prime < 0 or self.V_prime < 0:
            raise ValueError("box bounds must be non-negative")
        if (self.fixed_u is None) != (self.fixed_v is None):
            raise ValueError("fixed_u and fixed_v must be given together")
        d = self.tensor.d
        if self.fixed_u is not None and (len(self.fixed_u) != d - 1 or len(self.fixed_v) != d - 1):
            raise ValueError(f"fixed mode needs {d - 1} vectors in each group")

    @property
    def full_mode(self) -> bool:
        return self.fixed_u is None


def _cube(h: int, bound: float, copies: int) -> np.ndarray:
    b = math.floor(bound + 1e-12)
    span = np.arange(-b, b + 1, dtype=np.int64)
    if copies == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*([span] * (h * copies)), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _slot_products(points: np.ndarray, h: int, copies: int) -> np.ndarray:
    """Rows of ``prod_s x_s[j_s]`` over multi-indices ``j`` in C order."""
    out = np.ones((points.shape[0], 1), dtype=np.int64)
    for s in range(copies):
        block = points[:, s * h : (s + 1) * h]
        out = (out[:, :, None] * block[:, None, :]).reshape(points.shape[0], -1)
    return out


def _contracted(spec: LatticeCountSpec, budget: int):
    T = spec.tensor
    h, d = T.h, T.d
    dense = T.dense().reshape(h**d, h ** (d - 1), h)
    if spec.full_mode:
        us = _cube(h, spec.U_prime, d)
        vs = _cube(h, spec.V_prime, d - 1)
    else:
        last = _cube(h, spec.U_prime, 1)
        fixed = np.concatenate([np.asarray(x, dtype=np.int64) for x in spec.fixed_u]) if d > 1 else np.zeros(0, np.int64)
        us = np.concatenate([np.broadcast_to(fixed, (last.shape[0], fixed.size)), last], axis=1)
        vs = np.concatenate([np.asarray(x, dtype=np.int64) for x in spec.fixed_v]).reshape(1, -1) if d > 1 \
            else np.zeros((1, 0), np.int64)
    if us.shape[0] * vs.shape[0] > budget:
        raise BudgetExceeded(f"lattice enumeration of {us.shape[0] * vs.shape[0]} points exceeds {budget}")
    pu = _slot_products(us, h, d)
    tu = (pu @ dense.reshape(h**d, -1)).reshape(us.shape[0], h ** (d - 1), h)
    wv = _slot_products(vs, h, d - 1)
    return us, vs, tu, wv


def lattice_count_M(spec: LatticeCountSpec, budget: int = DEFAULT_BUDGET) -> int:
    """Number of lattice points with ``||alpha Gamma(u; v, e_i)|| < P`` for every ``i``."""
    _, _, tu, wv = _contracted(spec, budget)
    return _kernels.small_norm_count(tu, wv, spec.alpha, spec.P)


def approximation_spec(tensor: MultilinearTensor, alpha: Alpha, U: float, V: float, theta_prime: float) -> LatticeCountSpec:
    """Spec for the count with ``Q1 = V^(theta' - 1)``, ``Q2 = V^theta' / U``."""
    d = tensor.d
    Q1 = V ** (theta_prime - 1.0)
    Q2 = V**theta_prime / U
    return LatticeCountSpec(tensor, alpha, Q2 * U, Q1 * V, Q1 ** (d - 1) * Q2**d / V)


def rational_approx_from_gamma(spec: LatticeCountSpec, budget: int = DEFAULT_BUDGET):
    """Rational approximation read off a counted point with nonzero ``Gamma``.

    Returns ``(q, a, |q alpha - a|)`` with the smallest available ``q``, or
    ``None`` when every counted point has ``Gamma(u; v, e_i) = 0`` for all ``i``.
    """
    _, _, tu, wv = _contracted(spec, budget)
    alpha = spec.alpha
    best = None
    step = max(1, (1 << 20) // max(1, wv.shape[0] * tu.shape[2]))
    for start in range(0, tu.shape[0], step):
        g = np.einsum("aki,bk->abi", tu[start : start + step], wv)
        if isinstance(alpha, Fraction):
            r = np.mod(alpha.numerator * g, alpha.denominator)
            small = np.minimum(r, alpha.denominator - r) < spec.P * alpha.denominator
        else:
            x = float(alpha) * g
            f = x - np.floor(x)
            small = np.minimum(f, 1.0 - f) < spec.P
        counted = small.all(axis=2)
        cand = np.abs(g[counted])
        cand = cand[cand != 0]
        if cand.size:
            m = int(cand.min())
            best = m if best is None else min(best, m)
    if best is None:
        return None
    a = round(alpha * best) if isinstance(alpha, Fraction) else int(round(float(alpha) * best))
    gap = abs(alpha * best - a) if isinstance(alpha, Fraction) else abs(float(alpha) * best - a)
    return best, int(a), gap


def shrink_count_Y(c: np.ndarray, gammas: Sequence[float], Z: float) -> int:
    """``#{y in Z^{2h}: |y_i| < gamma_i Z, |sum_j c_ij y_j - y_{h+i}| < Z / gamma_i}``.

    ``c`` may be any real symmetric ``h x h`` matrix.
    """
    c = np.asarray(c, dtype=np.float64)
    g = np.asarray(gammas, dtype=np.float64)
    h = len(g)
    if c.shape != (h, h):
        raise ValueError("c must be h x h")
    if not np.allclose(c, c.T):
        raise ValueError("c must be symmetric")
    if np.any(g <= 0) or Z <= 0:
        raise ValueError("gammas and Z must be positive")
    bounds = np.ceil(g * Z).astype(np.int64)
    return _kernels.shrink_count(c, g, Z, bounds)


def shrink_ratio(c: np.ndarray, gammas: Sequence[float], Z1: float, Z2: float) -> dict:
    """``Y(Z2) / Y(Z1)`` normalised by ``(Z2 / Z1)^h``."""
    y1, y2 = shrink_count_Y(c, gammas, Z1), shrink_count_Y(c, gammas, Z2)
    h = len(gammas)
    ratio = y2 / y1
    return {"Y1": y1, "Y2": y2, "ratio": ratio, "normalised": ratio / (Z2 / Z1) ** h}
