"""Smooth bump weights, the scaled coordinate family and the dyadic partition.

The bump is the standard mollifier ``exp(1 / ((y/delta)^2 - 1))`` on
``|y| < delta``. Its derivatives are evaluated exactly through the rational
recurrence ``w^(k)(y) = delta^-k P_k(s) (s^2 - 1)^(-2k) w(y)`` with
``s = y / delta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .arithmetic import SieveTable, moebius


def _derivative_polys(M0: int) -> list[Polynomial]:
    s = Polynomial([0, 1])
    q = s**2 - 1
    polys = [Polynomial([1.0])]
    for k in range(M0):
        p = polys[-1]
        polys.append(p.deriv() * q**2 - 2 * (2 * k) * s * p * q - 2 * s * p)
    return polys


@dataclass(frozen=True)
class SmoothWeight:
    """A compactly supported bump with measured derivative bounds.

    Attributes
    ----------
    delta : float
        Half-width of the support ``[-delta, delta]``.
    M0 : int
        Highest derivative order tracked.
    c_achieved : float
        ``max_k sup |w^(k)|`` over ``k <= M0`` measured on a fine grid.
    """

    delta: float
    M0: int
    c_achieved: float
    _polys: tuple = field(repr=False, compare=False, default=())

    def __call__(self, y):
        return self.derivative(y, 0)

    def derivative(self, y, k: int = 0):
        """``k``-th derivative of the bump at ``y`` (scalar or array)."""
        if k < 0 or k > self.M0:
            raise ValueError(f"derivative order must lie in [0, {self.M0}]")
        y_arr = np.asarray(y, dtype=float)
        s = y_arr / self.delta
        inside = np.abs(s) < 1.0
        out = np.zeros_like(s)
        si = s[inside]
        q = si * si - 1.0
        base = np.exp(1.0 / q)
        if k:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                val = self._polys[k](si) * base / q ** (2 * k) / self.delta**k
            val[base == 0.0] = 0.0
        else:
            val = base
        out[inside] = val
        return out if np.ndim(y) else float(out)

    def integral(self) -> float:
        """``int w``, by Gauss-Legendre on the support."""
        from .quadrature import gauss_legendre_panels

        nodes, wts = gauss_legendre_panels(-self.delta, self.delta, 64, 20)
        return math.fsum(wts * self(nodes))


def make_bump(delta: float, M0: int = 4, grid_per_unit: int = 10_000) -> SmoothWeight:
    """Build the standard mollifier of half-width ``delta``.

    ``c_achieved`` is measured on a uniform grid of ``grid_per_unit`` points
    per unit length (at least 10001 points across the support).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if M0 < 0:
        raise ValueError("M0 must be non-negative")
    polys = tuple(_derivative_polys(M0))
    probe = SmoothWeight(float(delta), int(M0), math.inf, polys)
    npts = max(10_001, int(2 * delta * grid_per_unit) + 1)
    grid = np.linspace(-delta, delta, npts)
    c = max(float(np.max(np.abs(probe.derivative(grid, k)))) for k in range(M0 + 1))
    return SmoothWeight(float(delta), int(M0), c, polys)


@dataclass(frozen=True)
class WeightFamily:
    """Coordinate weights ``psi_i(x) = w(x/X - x0_i)`` and their product."""

    X: float
    x0: tuple[float, ...]
    omega: SmoothWeight

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if self.X <= 0:
            raise ValueError("X must be positive")
        d = self.omega.delta
        for i, c in enumerate(self.x0):
            if not (c - d > 0 and c + d < 1):
                raise ValueError(f"support of coordinate {i} leaves (0, 1): x0={c}, delta={d}")

    @property
    def n(self) -> int:
        return len(self.x0)

    @property
    def delta_min(self) -> float:
        return min(self.x0) - self.omega.delta

    def bounds(self, i: int) -> tuple[float, float]:
        """``(a_i, b_i)`` with ``supp psi_i = [a_i X, b_i X]``."""
        self._index(i)
        return self.x0[i] - self.omega.delta, self.x0[i] + self.omega.delta

    def integer_range(self, i: int) -> np.ndarray:
        """Integers where ``psi_i`` may be nonzero."""
        a, b = self.bounds(i)
        lo, hi = math.ceil(a * self.X), math.floor(b * self.X)
        return np.arange(max(lo, 1), hi + 1, dtype=np.int64)

    def _index(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"coordinate {i} out of range for n={self.n}")

    def psi(self, i: int, x):
        self._index(i)
        return self.omega(np.asarray(x, dtype=float) / self.X - self.x0[i])

    def varpi(self, x: Sequence[float]) -> float:
        if len(x) != self.n:
            raise ValueError("point dimension mismatch")
        return float(np.prod([self.psi(i, v) for i, v in enumerate(x)]))

    def with_X(self, X: float) -> "WeightFamily":
        return WeightFamily(X, self.x0, self.omega)


def psi(family: WeightFamily, i: int, x):
    return family.psi(i, x)


def varpi(family: WeightFamily, x: Sequence[float]) -> float:
    return family.varpi(x)


def _smooth_step(t):
    t = np.asarray(t, dtype=float)
    f = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    g = np.where(1 - t > 0, np.exp(-1.0 / np.where(1 - t > 0, 1 - t, 1.0)), 0.0)
    return f / (f + g)


@dataclass(frozen=True)
class DyadicScheme:
    """Smooth dyadic partition of unity with ratio ``Theta``.

    ``Psi`` equals 1 on ``[-1, 1]``, vanishes outside ``[-Theta, Theta]``
    and ``Psi_T(x) = Psi(x/T) - Psi(Theta x / T)`` for ``T = Theta^t``.
    """

    Theta: float = 2.0

    def __post_init__(self):
        if not self.Theta > 1:
            raise ValueError("Theta must exceed 1")

    def Psi(self, y):
        y = np.abs(np.asarray(y, dtype=float))
        out = _smooth_step((self.Theta - y) / (self.Theta - 1.0))
        return out if out.ndim else float(out)

    def exponent_of(self, T: float) -> int:
        """Return ``t`` with ``T = Theta^t``; raise if ``T`` is not in the grid."""
        t = round(math.log(T) / math.log(self.Theta)) if T > 0 else -1
        if t < 0 or abs(self.Theta**t - T) > 1e-9 * max(T, 1.0):
            raise ValueError(f"T={T} is not a nonnegative power of Theta={self.Theta}")
        return t

    def Psi_T(self, t: int, x):
        T = self.Theta**t
        x = np.asarray(x, dtype=float)
        out = self.Psi(x / T) - self.Psi(self.Theta * x / T)
        return out if np.ndim(out) else float(out)


def partition_weight(scheme: DyadicScheme, T: float, x):
    """``Psi_T(x)`` for ``T`` in ``{Theta^t : t >= 0}``."""
    return scheme.Psi_T(scheme.exponent_of(T), x)


@dataclass(frozen=True)
class DyadicPair:
    """One dyadic pair ``(M, N) = (Theta^s, Theta^t)`` for a single coordinate."""

    s: int
    t: int
    Theta: float = 2.0

    @property
    def M(self) -> float:
        return self.Theta**self.s

    @property
    def N(self) -> float:
        return self.Theta**self.t

    @property
    def m_le_n(self) -> bool:
        return self.s <= self.t

    @property
    def U(self) -> float:
        return min(self.M, self.N)

    @property
    def V(self) -> float:
        return max(self.M, self.N)


def enumerate_Xi(family: WeightFamily, scheme: DyadicScheme, i: int) -> list[DyadicPair]:
    """Pairs with ``a_i X Theta^-2 <= M N <= b_i X Theta^2``, sorted by ``(s, t)``."""
    a, b = family.bounds(i)
    th = scheme.Theta
    lo = math.log(a * family.X / th**2, th)
    hi = math.log(b * family.X * th**2, th)
    e_lo = max(0, math.ceil(lo - 1e-12))
    e_hi = math.floor(hi + 1e-12)
    out = []
    for e in range(e_lo, e_hi + 1):
        for s in range(e + 1):
            out.append(DyadicPair(s, e - s, th))
    return sorted(out, key=lambda p: (p.s, p.t))


@dataclass(frozen=True)
class RoleSplit:
    """Which factor of ``mn`` carries the Moebius weight.

    ``u`` ranges over the smaller dyadic scale ``U`` and ``v`` over ``V``.
    ``k_kind`` / ``l_kind`` are ``"mu"`` or ``"log"``.
    """

    pair: DyadicPair
    scheme: DyadicScheme
    k_kind: str
    l_kind: str
    mu: Callable

    @property
    def U(self) -> float:
        return self.pair.U

    @property
    def V(self) -> float:
        return self.pair.V

    def _weight(self, kind: str, t_exp: int, x):
        x = np.asarray(x, dtype=np.int64)
        base = self.mu(x).astype(float) if kind == "mu" else np.log(x.astype(float))
        return base * self.scheme.Psi_T(t_exp, x)

    def _exp(self, kind: str) -> int:
        return self.pair.s if kind == "mu" else self.pair.t

    def K(self, u):
        return self._weight(self.k_kind, self._exp(self.k_kind), u)

    def L(self, v):
        return self._weight(self.l_kind, self._exp(self.l_kind), v)

    def u_range(self) -> np.ndarray:
        th = self.scheme.Theta
        return np.arange(max(1, math.ceil(self.U / th)), math.floor(self.U * th) + 1, dtype=np.int64)

    def v_range(self) -> np.ndarray:
        th = self.scheme.Theta
        return np.arange(max(1, math.ceil(self.V / th)), math.floor(self.V * th) + 1, dtype=np.int64)


def role_split(pair: DyadicPair, scheme: DyadicScheme | None = None, sieve: SieveTable | None = None) -> RoleSplit:
    """Assign the Moebius factor to ``u`` when ``M <= N`` and the log factor otherwise."""
    scheme = scheme or DyadicScheme(pair.Theta)
    if sieve is not None:
        mu_arr = sieve.mobius_array()

        def mu(x):
            return mu_arr[np.asarray(x)]
    else:
        mu = np.vectorize(moebius, otypes=[np.int64])
    if pair.m_le_n:
        return RoleSplit(pair, scheme, "mu", "log", mu)
    return RoleSplit(pair, scheme, "log", "mu", mu)


@dataclass(frozen=True)
class DyadicIndexPair:
    """Per-coordinate dyadic pairs for an ``n``-variable block."""

    pairs: tuple[DyadicPair, ...]

    @property
    def U(self) -> list[float]:
        return [p.U for p in self.pairs]

    @property
    def V(self) -> list[float]:
        return [p.V for p in self.pairs]

    @property
    def U_min(self) -> float:
        return min(self.U)

    @property
    def V_min(self) -> float:
        return min(self.V)

    def nu(self, X: float) -> list[float]:
        """Measured ``log V_i / log X`` for each coordinate."""
        return [math.log(v) / math.log(X) for v in self.V]
