"""Exact sparse multivariate integer polynomials.

Polynomials are immutable, keep their monomials in graded lexicographic
order (highest total degree first) and use Python integers throughout, so
evaluation and every transformation below are exact. Variable indices are
0-based.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

Exponents = tuple[int, ...]


@dataclass(frozen=True)
class Monomial:
    exponents: Exponents
    coeff: int

    @property
    def degree(self) -> int:
        return sum(self.exponents)


def _grlex_key(exps: Exponents):
    return (-sum(exps), tuple(-e for e in exps))


class IntegerPolynomial:
    """Sparse polynomial in ``n`` variables with integer coefficients.

    Parameters
    ----------
    n : int
        Number of variables.
    terms : mapping or iterable of (exponents, coeff)
        Duplicate exponent vectors are merged; zero coefficients dropped.
    """

    __slots__ = ("_n", "_terms", "_hash")

    def __init__(self, n: int, terms: Mapping[Exponents, int] | Iterable[tuple[Exponents, int]] = ()):
        if n < 0:
            raise ValueError("variable count must be non-negative")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Exponents, int] = {}
        for exps, c in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != n:
                raise ValueError(f"exponent vector {exps} does not have length {n}")
            if any(e < 0 for e in exps):
                raise ValueError("negative exponent")
            if int(c) != c:
                raise TypeError("coefficients must be integers")
            acc[exps] = acc.get(exps, 0) + int(c)
        ordered = sorted(((e, c) for e, c in acc.items() if c != 0), key=lambda t: _grlex_key(t[0]))
        self._n = n
        self._terms = tuple(ordered)
        self._hash = None

    # construction helpers
    @classmethod
    def zero(cls, n: int) -> "IntegerPolynomial":
        return cls(n)

    @classmethod
    def constant(cls, n: int, c: int) -> "IntegerPolynomial":
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n: int, i: int) -> "IntegerPolynomial":
        exps = [0] * n
        exps[i] = 1
        return cls(n, {tuple(exps): 1})

    @property
    def n(self) -> int:
        return self._n

    @property
    def terms(self) -> tuple[tuple[Exponents, int], ...]:
        return self._terms

    @property
    def monomials(self) -> tuple[Monomial, ...]:
        return tuple(Monomial(e, c) for e, c in self._terms)

    def as_dict(self) -> dict[Exponents, int]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e, _ in self._terms), default=-1)

    def is_homogeneous(self, d: int | None = None) -> bool:
        degs = {sum(e) for e, _ in self._terms}
        if not degs:
            return True
        return len(degs) == 1 and (d is None or degs == {d})

    def coefficient(self, exps: Sequence[int]) -> int:
        return self.as_dict().get(tuple(exps), 0)

    # arithmetic
    def _check_same(self, other: "IntegerPolynomial") -> None:
        if other.n != self.n:
            raise ValueError(f"variable counts differ: {self.n} vs {other.n}")

    def __add__(self, other):
        if isinstance(other, int):
            other = IntegerPolynomial.constant(self.n, other)
        self._check_same(other)
        return IntegerPolynomial(self.n, itertools.chain(self._terms, other._terms))

    __radd__ = __add__

    def __neg__(self):
        return IntegerPolynomial(self.n, ((e, -c) for e, c in self._terms))

    def __sub__(self, other):
        if isinstance(other, int):
            other = IntegerPolynomial.constant(self.n, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return IntegerPolynomial(self.n, ((e, c * other) for e, c in self._terms))
        self._check_same(other)
        acc: dict[Exponents, int] = {}
        for e1, c1 in self._terms:
            for e2, c2 in other._terms:
                key = tuple(a + b for a, b in zip(e1, e2))
                acc[key] = acc.get(key, 0) + c1 * c2
        return IntegerPolynomial(self.n, acc)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = IntegerPolynomial.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, IntegerForm):
            other = other.base
        if not isinstance(other, IntegerPolynomial):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, self._terms))
        return self._hash

    def __repr__(self) -> str:
        return f"IntegerPolynomial(n={self.n}, {self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for exps, c in self._terms:
            mono = "*".join(
                f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}" for i, e in enumerate(exps) if e
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    # evaluation
    def __call__(self, point: Sequence[int]) -> int:
        return eval_poly(self, point)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at each row of an integer array.

        Uses int64 when a coefficient-size bound guarantees no overflow and
        falls back to Python integers (object dtype) otherwise.
        """
        pts = np.asarray(points)
        if pts.ndim != 2 or pts.shape[1] != self.n:
            raise ValueError(f"expected an array of shape (m, {self.n})")
        if not self._terms:
            return np.zeros(pts.shape[0], dtype=np.int64)
        bound = 0
        if pts.size:
            amax = [int(np.max(np.abs(pts[:, i]))) for i in range(self.n)]
            for exps, c in self._terms:
                bound += abs(c) * math.prod(a**e for a, e in zip(amax, exps))
        if bound < 2**62:
            work = pts.astype(np.int64)
            out = np.zeros(pts.shape[0], dtype=np.int64)
        else:
            work = pts.astype(object)
            out = np.zeros(pts.shape[0], dtype=object)
        for exps, c in self._terms:
            term = np.full(pts.shape[0], c, dtype=out.dtype)
            for i, e in enumerate(exps):
                if e:
                    term = term * work[:, i] ** e
            out = out + term
        return out

    def kernel_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Coefficient and exponent arrays for the compiled kernels."""
        if any(abs(c) >= 2**62 for _, c in self._terms):
            raise OverflowError("coefficients exceed int64")
        coeffs = np.array([c for _, c in self._terms], dtype=np.int64)
        exps = np.array([e for e, _ in self._terms], dtype=np.int64).reshape(len(self._terms), self.n)
        return coeffs, exps

    # calculus and structure
    def derivative(self, i: int) -> "IntegerPolynomial":
        out = []
        for exps, c in self._terms:
            if exps[i]:
                new = list(exps)
                new[i] -= 1
                out.append((tuple(new), c * exps[i]))
        return IntegerPolynomial(self.n, out)

    def homogeneous_part(self, j: int) -> "IntegerPolynomial":
        if j < 0:
            raise ValueError("degree must be non-negative")
        return IntegerPolynomial(self.n, ((e, c) for e, c in self._terms if sum(e) == j))

    def substitute(self, images: Sequence["IntegerPolynomial"]) -> "IntegerPolynomial":
        """Compose: replace variable ``i`` by ``images[i]`` (all in the same ring)."""
        if len(images) != self.n:
            raise ValueError("need one image per variable")
        if self.n == 0:
            m = 0
        else:
            m = images[0].n
            if any(p.n != m for p in images):
                raise ValueError("images must share a variable count")
        result = IntegerPolynomial.zero(m)
        cache: dict[tuple[int, int], IntegerPolynomial] = {}
        for exps, c in self._terms:
            term = IntegerPolynomial.constant(m, c)
            for i, e in enumerate(exps):
                if e:
                    if (i, e) not in cache:
                        cache[(i, e)] = images[i] ** e
                    term = term * cache[(i, e)]
            result = result + term
        return result

    def shift(self, c: Sequence[int]) -> "IntegerPolynomial":
        """Return the polynomial ``x -> f(x + c)``."""
        if len(c) != self.n:
            raise ValueError("shift length mismatch")
        images = [IntegerPolynomial.variable(self.n, i) + int(ci) for i, ci in enumerate(c)]
        return self.substitute(images)

    # serialisation
    def to_text(self) -> str:
        return "\n".join(f"{c}:{','.join(map(str, e))}" for e, c in self._terms) + "\n"

    def to_json_obj(self) -> dict:
        return {"n": self.n, "monomials": [[c, list(e)] for e, c in self._terms]}


class IntegerForm:
    """A homogeneous polynomial of degree ``d >= 1``."""

    __slots__ = ("base", "d")

    def __init__(self, base: IntegerPolynomial, d: int | None = None):
        if d is None:
            d = base.degree
        if d < 1:
            raise ValueError("a form must have degree at least 1")
        if not base.is_homogeneous(d):
            raise ValueError(f"polynomial is not homogeneous of degree {d}")
        self.base = base
        self.d = d

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def terms(self):
        return self.base.terms

    def __call__(self, point: Sequence[int]) -> int:
        return eval_poly(self.base, point)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        return self.base.eval_many(points)

    def __eq__(self, other) -> bool:
        if isinstance(other, IntegerForm):
            return self.d == other.d and self.base == other.base
        if isinstance(other, IntegerPolynomial):
            return self.base == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.d, self.base))

    def __repr__(self) -> str:
        return f"IntegerForm(d={self.d}, n={self.n}, {self.base})"


PolyLike = IntegerPolynomial | IntegerForm


def as_poly(p: PolyLike) -> IntegerPolynomial:
    return p.base if isinstance(p, IntegerForm) else p


def eval_poly(poly: PolyLike, point: Sequence[int]) -> int:
    """Exact value of ``poly`` at an integer point."""
    poly = as_poly(poly)
    if len(point) != poly.n:
        raise ValueError(f"point has length {len(point)}, expected {poly.n}")
    pt = [int(v) for v in point]
    total = 0
    for exps, c in poly.terms:
        term = c
        for v, e in zip(pt, exps):
            if e:
                term *= v**e
        total += term
    return total


def gradient(form: PolyLike) -> list[IntegerPolynomial]:
    poly = as_poly(form)
    return [poly.derivative(i) for i in range(poly.n)]


def homogeneous_part(poly: PolyLike, j: int) -> IntegerPolynomial:
    return as_poly(poly).homogeneous_part(j)


def restrict(form: PolyLike, kept: Sequence[int], fixed: Mapping[int, int]) -> IntegerPolynomial:
    """Fix some variables to integers; the result is in the ``kept`` variables.

    The kept variables appear in the order given.
    """
    poly = as_poly(form)
    kept = list(kept)
    if len(set(kept)) != len(kept) or set(kept) & set(fixed):
        raise ValueError("kept and fixed indices overlap")
    if set(kept) | set(fixed) != set(range(poly.n)):
        raise ValueError("kept and fixed must cover every variable")
    pos = {v: k for k, v in enumerate(kept)}
    acc: dict[Exponents, int] = {}
    for exps, c in poly.terms:
        coeff = c
        new = [0] * len(kept)
        for i, e in enumerate(exps):
            if i in pos:
                new[pos[i]] = e
            elif e:
                coeff *= int(fixed[i]) ** e
        key = tuple(new)
        acc[key] = acc.get(key, 0) + coeff
    return IntegerPolynomial(len(kept), acc)


def cross_term(form_z: PolyLike, s_indices: Sequence[int], t_indices: Sequence[int]) -> IntegerPolynomial:
    """The mixed part ``F(s, t) - F(s, 0) - F(0, t)`` in the original variables."""
    poly = as_poly(form_z)
    s, t = set(s_indices), set(t_indices)
    if s & t or s | t != set(range(poly.n)):
        raise ValueError("s and t must partition the variables")
    out = [
        (e, c)
        for e, c in poly.terms
        if any(e[i] for i in s) and any(e[i] for i in t)
    ]
    g = IntegerPolynomial(poly.n, out)
    # the mixed part vanishes on either coordinate plane
    for zeroed in (s, t):
        keep = [i for i in range(poly.n) if i not in zeroed]
        if not restrict(g, keep, {i: 0 for i in zeroed}).is_zero():
            raise AssertionError("cross term does not vanish on a coordinate plane")
    return g


def bihomogenize(frak_F: PolyLike) -> IntegerForm:
    """``G(u; v) = F(u_1 v_1, ..., u_h v_h)`` in variables ``(u_1..u_h, v_1..v_h)``."""
    poly = as_poly(frak_F)
    h = poly.n
    terms = [(e + e, c) for e, c in poly.terms]
    return IntegerForm(IntegerPolynomial(2 * h, terms), 2 * poly.degree if poly.terms else None)


def _ordered_tuples(sorted_key: tuple[int, ...]) -> list[tuple[int, ...]]:
    return sorted(set(itertools.permutations(sorted_key)))


@dataclass(frozen=True)
class MultilinearTensor:
    """The 2d-linear form with integer entries ``(d!)^2 G_{j,k}``.

    ``entries`` maps sorted (j-tuple, k-tuple) pairs to integers; the value
    applies to every reordering of either tuple.
    """

    h: int
    d: int
    entries: Mapping[tuple[tuple[int, ...], tuple[int, ...]], int]

    def __call__(self, us: Sequence[Sequence[int]], vs: Sequence[Sequence[int]]) -> int:
        return self.evaluate(us, vs)

    def evaluate(self, us: Sequence[Sequence[int]], vs: Sequence[Sequence[int]]) -> int:
        """Exact ``Gamma(u_1..u_d; v_1..v_d)``."""
        if len(us) != self.d or len(vs) != self.d:
            raise ValueError(f"need {self.d} vectors in each slot group")
        for w in itertools.chain(us, vs):
            if len(w) != self.h:
                raise ValueError(f"slot vectors must have length {self.h}")
        total = 0
        for (jkey, kkey), val in self.entries.items():
            su = 0
            for jt in _ordered_tuples(jkey):
                su += math.prod(int(us[s][jt[s]]) for s in range(self.d))
            if not su:
                continue
            sv = 0
            for kt in _ordered_tuples(kkey):
                sv += math.prod(int(vs[s][kt[s]]) for s in range(self.d))
            total += val * su * sv
        return total

    def dense(self) -> np.ndarray:
        """Dense int64 array of shape ``(h,)*2d`` over ordered index tuples."""
        arr = np.zeros((self.h,) * (2 * self.d), dtype=np.int64)
        for (jkey, kkey), val in self.entries.items():
            for jt in _ordered_tuples(jkey):
                for kt in _ordered_tuples(kkey):
                    arr[jt + kt] = val
        return arr

    def __add__(self, other: "MultilinearTensor") -> "MultilinearTensor":
        if (self.h, self.d) != (other.h, other.d):
            raise ValueError("shape mismatch")
        acc = dict(self.entries)
        for key, val in other.entries.items():
            acc[key] = acc.get(key, 0) + val
        return MultilinearTensor(self.h, self.d, {k: v for k, v in acc.items() if v})


def multilinear_tensor(g2d: PolyLike, d: int | None = None) -> MultilinearTensor:
    """Symmetric coefficient tensor of ``g(u; v) = F(u_1 v_1, ..., u_h v_h)``.

    Parameters
    ----------
    g2d : IntegerForm
        Bihomogeneous of bidegree ``(d, d)`` in ``2h`` variables, where the
        first ``h`` are ``u`` and the last ``h`` are ``v``, and every
        monomial has matching ``u`` and ``v`` exponent vectors.
    """
    poly = as_poly(g2d)
    if poly.n % 2:
        raise ValueError("expected an even number of variables (u; v)")
    h = poly.n // 2
    if d is None:
        if poly.is_zero():
            raise ValueError("cannot infer d from the zero polynomial")
        d = poly.degree // 2
    entries: dict = {}
    for exps, c in poly.terms:
        a, b = exps[:h], exps[h:]
        if sum(a) != d or sum(b) != d:
            raise ValueError(f"monomial {exps} is not of bidegree ({d},{d})")
        if a != b:
            raise ValueError("bihomogeneous form is not of the F(u1 v1, ...) shape")
        jkey = tuple(i for i in range(h) for _ in range(a[i]))
        kkey = tuple(i for i in range(h) for _ in range(b[i]))
        weight = math.prod(math.factorial(x) for x in a) * math.prod(math.factorial(x) for x in b)
        entries[(jkey, kkey)] = c * weight
    return MultilinearTensor(h, d, entries)


def forward_difference(poly: PolyLike, shifts: Sequence[Sequence[int]]) -> int:
    """``sum over eps in {0,1}^t of (-1)^|eps| f(eps_1 u_1 + ... + eps_t u_t)``."""
    poly = as_poly(poly)
    for s in shifts:
        if len(s) != poly.n:
            raise ValueError("shift length mismatch")
    t = len(shifts)
    if t == 0:
        return 0
    total = 0
    for eps in itertools.product((0, 1), repeat=t):
        point = [sum(e * int(s[i]) for e, s in zip(eps, shifts)) for i in range(poly.n)]
        total += (-1) ** sum(eps) * eval_poly(poly, point)
    return total


def forward_difference_poly(poly: PolyLike, shifts: Sequence[Sequence[int]]) -> IntegerPolynomial:
    """Symbolic difference with the last shift left free.

    Given numeric ``u_1..u_{t-1}``, returns the polynomial in ``z`` equal to
    the ``t``-fold difference evaluated at ``(u_1, ..., u_{t-1}, z)``.
    """
    poly = as_poly(poly)
    n = poly.n
    for s in shifts:
        if len(s) != n:
            raise ValueError("shift length mismatch")
    out = IntegerPolynomial.zero(n)
    for eps in itertools.product((0, 1), repeat=len(shifts)):
        c = [sum(e * int(s[i]) for e, s in zip(eps, shifts)) for i in range(n)]
        sign = (-1) ** sum(eps)
        out = out + IntegerPolynomial.constant(n, sign * eval_poly(poly, c)) - poly.shift(c) * sign
    return out


def diagonal_coefficients(form: PolyLike) -> tuple[int, list[int]] | None:
    """Return ``(d, [c_1..c_n])`` if ``form = sum c_i x_i^d``, else ``None``."""
    poly = as_poly(form)
    if poly.is_zero() or not poly.is_homogeneous():
        return None
    d = poly.degree
    coeffs = [0] * poly.n
    for exps, c in poly.terms:
        nz = [i for i, e in enumerate(exps) if e]
        if len(nz) != 1:
            return None
        coeffs[nz[0]] = c
    return d, coeffs


def diagonal_form(coeffs: Sequence[int], d: int) -> IntegerForm:
    n = len(coeffs)
    terms = []
    for i, c in enumerate(coeffs):
        e = [0] * n
        e[i] = d
        terms.append((tuple(e), int(c)))
    return IntegerForm(IntegerPolynomial(n, terms), d)


def standard_quadric() -> IntegerForm:
    """``x1^2 + x2^2 - x3^2 - x4^2``."""
    return diagonal_form([1, 1, -1, -1], 2)


# text / JSON formats

def parse_polynomial_text(text: str, n: int | None = None) -> IntegerPolynomial:
    """Parse ``coeff:e1,...,en`` lines; blank lines and ``#`` comments are skipped."""
    terms = []
    width = n
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            cpart, epart = line.split(":")
            coeff = int(cpart.strip())
            exps = tuple(int(x) for x in epart.split(",")) if epart.strip() else ()
        except ValueError as exc:
            raise ValueError(f"line {lineno}: cannot parse monomial {raw!r}") from exc
        if width is None:
            width = len(exps)
        elif len(exps) != width:
            raise ValueError(f"line {lineno}: expected {width} exponents, got {len(exps)}")
        terms.append((exps, coeff))
    if width is None:
        raise ValueError("empty polynomial text needs an explicit variable count")
    return IntegerPolynomial(width, terms)


def polynomial_from_json(obj: dict | str) -> IntegerPolynomial:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        n = int(obj["n"])
        terms = [(tuple(e), int(c)) for c, e in obj["monomials"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed polynomial JSON: {exc}") from exc
    return IntegerPolynomial(n, terms)


def polynomial_to_json(poly: PolyLike) -> str:
    return json.dumps(as_poly(poly).to_json_obj())
