"""Major arcs and the predicted main term.

The prediction for ``sum_x varpi(x) Lambda(x) [F(x) = 0]`` is
``S(Q) * J(T) * X^(n - d)`` where ``S(Q)`` is the truncated singular series
and ``J(T)`` the truncated singular integral in unit variables.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .arithmetic import DirichletCharacter, SieveTable, character_group, euler_phi, factorize
from .errors import BudgetExceeded, ContractViolation, ParameterError
from .expsums import DEFAULT_BUDGET, _histogram, complete_sums_all_a
from .forms import IntegerPolynomial, PolyLike, as_poly, diagonal_coefficients
from .quadrature import QuadSpec, adaptive_1d, adaptive_1d_batch, adaptive_tensor
from .weights import SmoothWeight, WeightFamily


# ------------------------------------------------------------ arcs

@dataclass(frozen=True)
class ArcParameters:
    """Exponents of the major arcs at scale ``X`` for a form of degree ``d``."""

    theta0: float
    lam: float
    gamma: float
    X: float
    d: int = 2

    def __post_init__(self):
        for name in ("theta0", "lam", "gamma", "X"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} > 0", f"{name}={getattr(self, name)}")
        if not 2 * self.theta0 + self.gamma < 5 / 12:
            raise ParameterError("2*theta0 + gamma < 5/12", f"lhs={2 * self.theta0 + self.gamma:.6g}")
        if not self.gamma > 2 * self.theta0 + 2 * self.lam:
            raise ParameterError("gamma > 2*theta0 + 2*lambda",
                                 f"gamma={self.gamma:.6g}, rhs={2 * self.theta0 + 2 * self.lam:.6g}")

    @property
    def M(self) -> float:
        return self.X**self.theta0

    @property
    def T(self) -> float:
        return self.X**self.gamma

    @property
    def halfwidth(self) -> float:
        return self.X ** (self.theta0 + self.lam - self.d)


@dataclass(frozen=True)
class RationalArc:
    q: int
    a: int
    halfwidth: float

    @property
    def center(self) -> Fraction:
        return Fraction(self.a, self.q)

    def contains(self, alpha: float) -> bool:
        return abs(alpha - self.a / self.q) < self.halfwidth


def arcs_for(q_max: int, halfwidth: float) -> tuple[list[RationalArc], dict]:
    """Arcs around ``a/q`` (``q <= q_max``, ``0 <= a <= q``) with an exact overlap check."""
    arcs = [RationalArc(q, a, halfwidth) for q in range(1, q_max + 1) for a in range(q + 1) if math.gcd(a, q) == 1]
    w = Fraction(halfwidth)
    centers = sorted(set(arc.center for arc in arcs))
    gaps = [b - a for a, b in zip(centers, centers[1:])]
    min_gap = min(gaps) if gaps else Fraction(1)
    overlap = bool(gaps) and min_gap <= 2 * w
    # measure inside [0, 1): arcs at 0 and 1 stick out by one half-width each
    measure = 2 * w * len(arcs) - 2 * min(w, Fraction(1)) if arcs else Fraction(0)
    if overlap:
        measure = None
    report = {
        "count": len(arcs),
        "q_max": q_max,
        "halfwidth": halfwidth,
        "min_gap": float(min_gap),
        "overlap": overlap,
        "total_measure": None if measure is None else float(measure),
    }
    return arcs, report


def build_arcs(params: ArcParameters) -> tuple[list[RationalArc], dict]:
    """All arcs with ``q <= X^theta0`` plus a disjointness report."""
    q_max = math.floor(params.M + 1e-12)
    return arcs_for(q_max, params.halfwidth)


def arc_rows(arcs: Sequence[RationalArc]) -> list[dict]:
    return [{"q": a.q, "a": a.a, "center": a.a / a.q, "halfwidth": a.halfwidth} for a in arcs]


# ------------------------------------------------------------ singular series

def _B_prime_power(poly: IntegerPolynomial, pk: int, budget: int) -> complex:
    vals = complete_sums_all_a(pk, poly, budget=budget)
    s = sum(vals.values())
    return s / euler_phi(pk) ** poly.n


def singular_series_terms(F: PolyLike, Q: int, method: str = "multiplicative", budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """``B(q) = sum'_a A(q, a) / phi(q)^n`` for ``q = 1..Q`` (index 0 unused).

    ``method="multiplicative"`` evaluates prime powers only and multiplies;
    ``method="direct"`` evaluates every ``q`` from its own complete sums.
    """
    if Q < 1:
        raise ValueError("Q must be at least 1")
    poly = as_poly(F)
    out = np.zeros(Q + 1, dtype=complex)
    out[1] = 1.0
    if method == "direct":
        for q in range(2, Q + 1):
            out[q] = _B_prime_power(poly, q, budget)
        return out
    if method != "multiplicative":
        raise ValueError(f"unknown method {method!r}")
    for q in range(2, Q + 1):
        fac = factorize(q)
        if len(fac) == 1:
            out[q] = _B_prime_power(poly, q, budget)
        else:
            p, k = next(iter(fac.items()))
            pk = p**k
            out[q] = out[pk] * out[q // pk]
    return out


def singular_series_partial(F: PolyLike, Q: int, method: str = "multiplicative", budget: int = DEFAULT_BUDGET) -> float:
    """Truncated singular series ``sum_{q <= Q} B(q)``; raises if the imaginary part exceeds 1e-9."""
    terms = singular_series_terms(F, Q, method, budget)
    val = complex(math.fsum(terms.real), math.fsum(terms.imag))
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise ContractViolation(f"singular series has imaginary part {val.imag}")
    return val.real


def singular_series_report(F: PolyLike, Q: int, codim: float | None = None, eps: float = 0.0,
                           budget: int = DEFAULT_BUDGET) -> dict:
    """Partial sums at powers of two up to ``Q``, their increments and a tail bound.

    The tail bound ``sum_{q > Q} q^(1 - e + eps)`` with
    ``e = codim / (2 (2d - 1) 4^d)`` is finite only for ``e - eps > 2``.
    """
    poly = as_poly(F)
    terms = singular_series_terms(poly, Q, budget=budget)
    partial = np.cumsum(terms.real)
    checkpoints = [2**k for k in range(int(math.log2(Q)) + 1)]
    sums = {q: float(partial[q]) for q in checkpoints}
    incr = {q: abs(sums[q] - sums[q // 2]) for q in checkpoints if q >= 2 and q // 2 in sums}
    tail = None
    if codim is not None:
        e = codim / (2 * (2 * poly.degree - 1) * 4**poly.degree) - eps
        tail = Q ** (2 - e) / (e - 2) if e > 2 else math.inf
    return {
        "Q": Q,
        "value": float(partial[Q]),
        "max_imag": float(np.max(np.abs(np.cumsum(terms.imag)))),
        "partial_sums": sums,
        "increments": incr,
        "tail_bound": tail,
    }


def unit_zero_count(F: PolyLike, p: int, k: int, budget: int = DEFAULT_BUDGET) -> int:
    """``N_k = #{h in (Z/p^k)^{*n} : F(h) = 0 mod p^k}`` by enumeration of the whole unit box."""
    poly = as_poly(F)
    pk = p**k
    size = euler_phi(pk) ** poly.n
    if size > budget:
        raise BudgetExceeded(f"unit box mod {pk} has {size} points, budget is {budget}")
    units = character_group(pk).units
    rots = np.zeros((poly.n, len(units)), dtype=np.int64)
    hist = _histogram(pk, poly, rots.tobytes(), poly.n, 1)
    return int(hist[0, 0])


def local_factor(F: PolyLike, p: int, k: int, budget: int = DEFAULT_BUDGET) -> float:
    """``p^k N_k / phi(p^k)^n``."""
    poly = as_poly(F)
    if k < 0 or factorize(p) != {p: 1}:
        raise ValueError("need a prime p and k >= 0")
    if k == 0:
        return 1.0
    return p**k * unit_zero_count(poly, p, k, budget) / euler_phi(p**k) ** poly.n


def local_density_identity(F: PolyLike, p: int, k: int, budget: int = DEFAULT_BUDGET) -> dict:
    """Compare ``sum_{t <= k} B(p^t)`` with ``local_factor(F, p, k)``.

    Both sides are of order one (and may vanish), so ``rel_error`` divides by
    ``max(|rhs|, 1)``.
    """
    poly = as_poly(F)
    lhs_terms = [1.0 + 0j] + [_B_prime_power(poly, p**t, budget) for t in range(1, k + 1)]
    lhs = complex(math.fsum(z.real for z in lhs_terms), math.fsum(z.imag for z in lhs_terms))
    rhs = local_factor(poly, p, k, budget)
    err = abs(lhs - rhs)
    return {"p": p, "k": k, "lhs": lhs.real, "lhs_imag": lhs.imag, "rhs": rhs, "abs_error": err,
            "rel_error": err / max(abs(rhs), 1.0)}


# ------------------------------------------------------------ oscillatory integrals

def eval_float(poly: IntegerPolynomial, pts: np.ndarray) -> np.ndarray:
    """Evaluate at real points, rows of ``pts``."""
    pts = np.asarray(pts, dtype=np.float64)
    out = np.zeros(pts.shape[0])
    for exps, c in poly.terms:
        term = np.full(pts.shape[0], float(c))
        for i, e in enumerate(exps):
            if e:
                term *= pts[:, i] ** e
        out += term
    return out


def _lipschitz(poly: IntegerPolynomial, hi: Sequence[float]) -> float:
    """Crude bound for ``max |grad F|`` on ``[0, hi]``."""
    total = 0.0
    for exps, c in poly.terms:
        for i, e in enumerate(exps):
            if e:
                total += abs(c) * e * math.prod(h**x for h, x in zip(hi, exps)) / max(hi[i], 1e-300)
    return total


def _initial_panels(freq_width: float) -> int:
    # a 24-point panel resolves a few oscillations comfortably
    return max(4, int(math.ceil(freq_width / 4)))


def _unit_axes(family: WeightFamily):
    delta = family.omega.delta
    return [(c - delta, c + delta) for c in family.x0]


def _separable_factors(coeffs, d, family: WeightFamily, taus: np.ndarray, spec: QuadSpec) -> np.ndarray:
    """Per-coordinate integrals ``int w(x - x0_i) e(tau c_i x^d) dx``, shape ``(n, len(taus))``."""
    om = family.omega
    out = np.empty((len(coeffs), len(taus)), dtype=complex)
    tmax = float(np.max(np.abs(taus))) if len(taus) else 0.0
    for i, (c, x0) in enumerate(zip(coeffs, family.x0)):
        a, b = x0 - om.delta, x0 + om.delta
        width = tmax * abs(c) * d * b ** (d - 1) * (b - a)

        def f(y, c=c, x0=x0):
            return (om(y - x0)[:, None] * np.exp(2j * np.pi * np.multiply.outer(c * y**d, taus)))

        out[i], _, _ = adaptive_1d_batch(f, a, b, spec, _initial_panels(width))
    return out


def oscillatory_I(F: PolyLike, family: WeightFamily, tau: float, quad_spec: QuadSpec | None = None) -> complex:
    """``int prod_u w(x_u - x0_u) e(tau F(x)) dx`` in unit variables."""
    spec = quad_spec or QuadSpec()
    return complex(oscillatory_I_many(F, family, [tau], spec)[0])


def oscillatory_I_many(F: PolyLike, family: WeightFamily, taus: Sequence[float], quad_spec: QuadSpec | None = None) -> np.ndarray:
    """Vectorised :func:`oscillatory_I` over several ``tau``.

    Diagonal forms factor into one-dimensional integrals; other forms use a
    tensor Gauss-Legendre rule with panels scaled by ``|tau|`` times a
    gradient bound.
    """
    spec = quad_spec or QuadSpec()
    poly = as_poly(F)
    if poly.n != family.n:
        raise ValueError("form and weight family disagree on the number of variables")
    taus = np.asarray(taus, dtype=np.float64)
    diag = diagonal_coefficients(poly)
    if diag is not None:
        d, coeffs = diag
        return np.prod(_separable_factors(coeffs, d, family, taus, spec), axis=0)
    bounds = _unit_axes(family)
    lip = _lipschitz(poly, [b for _, b in bounds])
    om = family.omega
    out = np.empty(len(taus), dtype=complex)
    for k, tau in enumerate(taus):
        panels = [_initial_panels(abs(tau) * lip * (b - a)) for a, b in bounds]

        def f(nodes, tau=tau):
            w = np.ones(nodes.shape[0])
            for i, c in enumerate(family.x0):
                w *= om(nodes[:, i] - c)
            return w * np.exp(2j * np.pi * tau * eval_float(poly, nodes))

        out[k], _, _ = adaptive_tensor(f, bounds, spec, panels)
    return out


@dataclass
class SingularIntegral:
    value: float
    imag: float
    T: float
    tail: float
    gradient_vanishes_in_support: bool


def gradient_vanishes_in_support(F: PolyLike, family: WeightFamily, grid: int = 9) -> bool:
    """Coarse test for a singular point of ``grad F`` inside the support box."""
    poly = as_poly(F)
    bounds = _unit_axes(family)
    axes = [np.linspace(a, b, grid) for a, b in bounds]
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    grads = np.stack([eval_float(poly.derivative(i), pts) for i in range(poly.n)], axis=1)
    norms = np.linalg.norm(grads, axis=1)
    step = max(b - a for a, b in bounds) / (grid - 1)
    hess = _lipschitz(poly, [b for _, b in bounds])
    return bool(np.min(norms) <= hess * step * math.sqrt(poly.n))


def _J_once(poly, family, T, spec) -> complex:
    diag = diagonal_coefficients(poly)
    if diag is not None:
        def f(taus):
            return oscillatory_I_many(poly, family, taus, spec)[:, None]

        val, _, _ = adaptive_1d_batch(f, -T, T, spec, _initial_panels(T * 0.5))
        return complex(val[0])
    # Fubini: int_{|tau| < T} e(tau F) dtau = sin(2 pi T F) / (pi F)
    bounds = _unit_axes(family)
    lip = _lipschitz(poly, [b for _, b in bounds])
    om = family.omega

    def g(nodes):
        w = np.ones(nodes.shape[0])
        for i, c in enumerate(family.x0):
            w *= om(nodes[:, i] - c)
        return w * 2.0 * T * np.sinc(2.0 * T * eval_float(poly, nodes))

    panels = [_initial_panels(T * lip * (b - a)) for a, b in bounds]
    val, _, _ = adaptive_tensor(g, bounds, spec, panels)
    return complex(val)


def singular_integral_J(F: PolyLike, family: WeightFamily, T_cutoff: float = 64.0,
                        quad_spec: QuadSpec | None = None) -> SingularIntegral:
    """``int_{|tau| < T} I(tau) dtau`` with the change from ``T`` to ``2T`` as tail estimate."""
    spec = quad_spec or QuadSpec(tol=1e-12, rtol=1e-10)
    poly = as_poly(F)
    j1 = _J_once(poly, family, T_cutoff, spec)
    j2 = _J_once(poly, family, 2 * T_cutoff, spec)
    return SingularIntegral(j1.real, j1.imag, T_cutoff, abs(j2 - j1), gradient_vanishes_in_support(poly, family))


# ------------------------------------------------------------ W integrals

@dataclass(frozen=True)
class Slot:
    """How one coordinate enters ``W``.

    ``kind`` is ``"integrate"``, ``"char"`` (prime sum with a character),
    ``"damp"`` (integrated against ``x^(beta - 1)``) or ``"sum"`` (plain sum over
    integers with weight 1). A ``"char"`` slot with a principal character uses
    ``chi0 Lambda* - 1``; with ``exceptional=True`` it uses
    ``chi Lambda* + x^(beta - 1)``.
    """

    kind: str
    chi: DirichletCharacter | None = None
    exceptional: bool = False

    def __post_init__(self):
        if self.kind not in ("integrate", "char", "damp", "sum"):
            raise ValueError(f"unknown slot kind {self.kind!r}")
        if self.kind == "char" and self.chi is None:
            raise ValueError("a character slot needs a character")
        if self.kind != "char" and (self.chi is not None or self.exceptional):
            raise ValueError("only character slots carry a character")


def _discrete_axis(slot: Slot, family: WeightFamily, i: int, sieve: SieveTable, beta: float | None):
    xs = family.integer_range(i)
    psi = family.psi(i, xs)
    if slot.kind == "sum":
        return xs, psi.astype(complex)
    lam = sieve.lambda_star_array()[xs]
    chi = slot.chi
    vals = np.array([chi(int(x)) for x in xs]) * lam
    if chi.is_principal and not slot.exceptional:
        vals = vals - 1.0
    elif slot.exceptional:
        if beta is None:
            raise ValueError("exceptional slot needs beta_tilde")
        vals = vals + xs.astype(float) ** (beta - 1.0)
    return xs, psi * vals


def W_integral(F: PolyLike, family: WeightFamily, tau: float, char_slots: Sequence[Slot] | None = None,
               beta_tilde: float | None = None, quad_spec: QuadSpec | None = None,
               sieve: SieveTable | None = None, budget: int = DEFAULT_BUDGET) -> complex:
    """Mixed sum and integral of ``varpi(x) e(tau F(x))`` at scale ``X``.

    Integrated coordinates run over ``[a_i X, b_i X]``; discrete ones over the
    integers in the same range with their slot weights.
    """
    spec = quad_spec or QuadSpec(tol=1e-10, rtol=1e-10)
    poly = as_poly(F)
    n = poly.n
    slots = list(char_slots) if char_slots is not None else [Slot("integrate")] * n
    if len(slots) != n:
        raise ValueError(f"need {n} slots, got {len(slots)}")
    if any(s.kind == "damp" for s in slots) and beta_tilde is None:
        raise ValueError("damped slots need beta_tilde")
    X = family.X
    if sieve is None and any(s.kind == "char" for s in slots):
        sieve = SieveTable(max(2, math.ceil(X)))
    om = family.omega

    def cont_weight(i, x):
        w = om(x / X - family.x0[i]).astype(complex)
        if slots[i].kind == "damp":
            w = w * x ** (beta_tilde - 1.0)
        return w

    cont = [i for i in range(n) if slots[i].kind in ("integrate", "damp")]
    disc = [i for i in range(n) if i not in cont]
    disc_axes = {i: _discrete_axis(slots[i], family, i, sieve, beta_tilde) for i in disc}
    bounds = {i: ((family.x0[i] - om.delta) * X, (family.x0[i] + om.delta) * X) for i in cont}
    diag = diagonal_coefficients(poly)
    if diag is not None:
        d, coeffs = diag
        total = 1.0 + 0j
        for i in range(n):
            if i in disc:
                xs, w = disc_axes[i]
                total *= complex(np.sum(w * np.exp(2j * np.pi * ((tau * coeffs[i] * xs.astype(float) ** d) % 1.0))))
            else:
                a, b = bounds[i]
                width = abs(tau) * abs(coeffs[i]) * d * b ** (d - 1) * (b - a)
                val, _, _ = adaptive_1d(lambda x, i=i: cont_weight(i, x) * np.exp(2j * np.pi * tau * coeffs[i] * x**d),
                                        a, b, spec, _initial_panels(width))
                total *= val
        return total
    tuples = list(itertools.product(*[range(len(disc_axes[i][0])) for i in disc]))
    lip = _lipschitz(poly, [(family.x0[i] + om.delta) * X for i in range(n)])
    panels = [_initial_panels(abs(tau) * lip * (bounds[i][1] - bounds[i][0])) for i in cont]
    parts = []
    for tup in tuples:
        fixed = {i: int(disc_axes[i][0][k]) for i, k in zip(disc, tup)}
        wfix = np.prod([disc_axes[i][1][k] for i, k in zip(disc, tup)]) if disc else 1.0
        if wfix == 0:
            continue
        if not cont:
            pt = np.array([[fixed[i] for i in range(n)]], dtype=float)
            parts.append(wfix * np.exp(2j * np.pi * tau * eval_float(poly, pt))[0])
            continue

        def f(nodes, fixed=fixed):
            full = np.empty((nodes.shape[0], n))
            for k, i in enumerate(cont):
                full[:, i] = nodes[:, k]
            for i, v in fixed.items():
                full[:, i] = v
            w = np.ones(nodes.shape[0], dtype=complex)
            for k, i in enumerate(cont):
                w *= cont_weight(i, nodes[:, k])
            return w * np.exp(2j * np.pi * tau * eval_float(poly, full))

        if len(tuples) * math.prod(p * spec.order for p in panels) > budget:
            raise BudgetExceeded("mixed sum-integral exceeds the evaluation budget")
        val, _, _ = adaptive_tensor(f, [bounds[i] for i in cont], spec, panels)
        parts.append(wfix * val)
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


# ------------------------------------------------------------ prediction

@dataclass
class PredictionReport:
    series_partial: float
    integral_J: float
    c: float
    predicted: float
    oracle_count: float | None
    rel_error: float | None
    X: float
    Q: int
    T: float
    J_tail: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def predict_main_term(F: PolyLike, family: WeightFamily, Q: int = 256, T_cutoff: float = 64.0,
                      oracle_count: float | None = None, require_positive: bool = False,
                      quad_spec: QuadSpec | None = None, budget: int = DEFAULT_BUDGET) -> PredictionReport:
    """``S(Q) J(T) X^(n - d)`` with an optional comparison against an exact count."""
    poly = as_poly(F)
    series = singular_series_partial(poly, Q, budget=budget)
    J = singular_integral_J(poly, family, T_cutoff, quad_spec)
    c = series * J.value
    if require_positive and not c > 0:
        raise ContractViolation(f"main-term constant is not positive: {c}")
    predicted = c * family.X ** (poly.n - poly.degree)
    rel = None
    if oracle_count is not None:
        rel = abs(predicted - oracle_count) / abs(oracle_count) if oracle_count else math.inf
    return PredictionReport(series, J.value, c, predicted, oracle_count, rel, family.X, Q, T_cutoff, J.tail,
                            {"J_imag": J.imag, "gradient_vanishes_in_support": J.gradient_vanishes_in_support})
