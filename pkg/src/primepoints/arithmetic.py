"""Sieving, classical arithmetic functions and Dirichlet characters.

Characters are built from the CRT splitting of ``(Z/qZ)^*`` into cyclic
components with explicit generators. A character is stored as an integer
rotation table: ``chi(r) = e(rot[r] / E)`` where ``E`` is the exponent of the
group, so products and conjugates are exact integer operations.
"""
from __future__ import annotations

import cmath
import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import BudgetExceeded

DEFAULT_SIEVE_LIMIT = 200_000_000


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation by trial division (small inputs)."""
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def von_mangoldt(x: int) -> float:
    if x < 1:
        raise ValueError("x must be positive")
    f = factorize(x)
    return math.log(next(iter(f))) if len(f) == 1 else 0.0


def lambda_star(x: int) -> float:
    """``log x`` on primes, zero elsewhere."""
    if x < 1:
        raise ValueError("x must be positive")
    f = factorize(x)
    return math.log(x) if len(f) == 1 and next(iter(f.values())) == 1 else 0.0


def moebius(x: int) -> int:
    if x < 1:
        raise ValueError("x must be positive")
    f = factorize(x)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def euler_phi(q: int) -> int:
    if q < 1:
        raise ValueError("q must be positive")
    out = q
    for p in factorize(q):
        out -= out // p
    return out


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n).items():
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def mu_log_convolution(x: int) -> float:
    """``sum over m | x of mu(m) log(x/m)``."""
    total = 0.0
    for m in divisors(x):
        mu = moebius(m)
        if mu:
            total += mu * math.log(x // m)
    return total


class SieveTable:
    """Smallest-prime-factor table on ``[0, limit]`` with derived arrays.

    Parameters
    ----------
    limit : int
        Largest integer covered; must be at least 2.
    max_limit : int, optional
        Memory guard; larger requests raise :class:`BudgetExceeded`.
    """

    def __init__(self, limit: int, max_limit: int = DEFAULT_SIEVE_LIMIT):
        limit = int(limit)
        if limit < 2:
            raise ValueError("sieve limit must be at least 2")
        if limit > max_limit:
            raise BudgetExceeded(f"sieve limit {limit} exceeds memory budget {max_limit}")
        self.limit = limit
        self.spf = _kernels.spf_table(limit)
        self.spf.setflags(write=False)
        self._cache: dict[str, np.ndarray] = {}

    def _check(self, x: int) -> None:
        if not 1 <= x <= self.limit:
            raise ValueError(f"{x} outside sieve range [1, {self.limit}]")

    def is_prime(self, x: int) -> bool:
        self._check(x)
        return x >= 2 and self.spf[x] == x

    def primes(self) -> np.ndarray:
        if "primes" not in self._cache:
            idx = np.arange(self.limit + 1)
            self._cache["primes"] = idx[(self.spf == idx) & (idx >= 2)]
        return self._cache["primes"]

    def lambda_array(self) -> np.ndarray:
        """``Lambda(x)`` for ``0 <= x <= limit`` (index 0 holds 0)."""
        if "lambda" not in self._cache:
            x = np.arange(self.limit + 1, dtype=np.int64)
            p = self.spf.copy()
            p[:2] = 1
            rest = x.copy()
            rest[:2] = 0
            mask = (rest > 1) & (rest % p == 0)
            while mask.any():
                rest[mask] //= p[mask]
                mask = (rest > 1) & (rest % p == 0)
            out = np.zeros(self.limit + 1)
            pp = (rest == 1) & (x >= 2)
            out[pp] = np.log(p[pp])
            self._cache["lambda"] = out
        return self._cache["lambda"]

    def lambda_star_array(self) -> np.ndarray:
        if "lambda_star" not in self._cache:
            out = np.zeros(self.limit + 1)
            pr = self.primes()
            out[pr] = np.log(pr)
            self._cache["lambda_star"] = out
        return self._cache["lambda_star"]

    def mobius_array(self) -> np.ndarray:
        if "mu" not in self._cache:
            mu = np.ones(self.limit + 1, dtype=np.int64)
            mu[0] = 0
            for p in self.primes():
                mu[p::p] *= -1
                if p * p <= self.limit:
                    mu[p * p :: p * p] = 0
            self._cache["mu"] = mu
        return self._cache["mu"]

    def phi_array(self) -> np.ndarray:
        if "phi" not in self._cache:
            phi = np.arange(self.limit + 1, dtype=np.int64)
            for p in self.primes():
                phi[p::p] -= phi[p::p] // p
            self._cache["phi"] = phi
        return self._cache["phi"]

    def mu_log_array(self) -> np.ndarray:
        """``(mu * log)(x)`` for every ``x`` up to the limit."""
        logs = np.zeros(self.limit + 1)
        logs[1:] = np.log(np.arange(1, self.limit + 1))
        return _kernels.mu_log_table(self.mobius_array(), logs)


def sieve(X: int, max_limit: int = DEFAULT_SIEVE_LIMIT) -> SieveTable:
    return SieveTable(X, max_limit=max_limit)


def primes(X: int) -> list[int]:
    return [int(p) for p in SieveTable(X).primes()]


# ----------------------------------------------------------- characters

def _primitive_root(p: int) -> int:
    if p == 2:
        return 1
    factors = list(factorize(p - 1))
    for g in range(2, p):
        if all(pow(g, (p - 1) // f, p) != 1 for f in factors):
            return g
    raise ArithmeticError(f"no primitive root mod {p}")


@dataclass(frozen=True)
class _Component:
    prime_power: int
    generator: int
    order: int
    dlog: dict  # residue mod prime_power -> exponent


def _components_for(p: int, k: int) -> list[_Component]:
    pk = p**k
    if p != 2:
        g = _primitive_root(p)
        if k > 1 and pow(g, p - 1, p * p) == 1:
            g += p
        order = pk - pk // p
        table, x = {}, 1
        for i in range(order):
            table[x] = i
            x = x * g % pk
        return [_Component(pk, g, order, table)]
    if k == 1:
        return []
    if k == 2:
        return [_Component(4, 3, 2, {1: 0, 3: 1})]
    # (Z/2^k)^* = <-1> x <5>
    half = pk // 4
    sign_tab, five_tab = {}, {}
    x = 1
    for b in range(half):
        five_tab[x] = b
        five_tab[(-x) % pk] = b
        sign_tab[x] = 0
        sign_tab[(-x) % pk] = 1
        x = x * 5 % pk
    return [_Component(pk, pk - 1, 2, sign_tab), _Component(pk, 5, half, five_tab)]


class CharacterGroup:
    """Discrete-log data for ``(Z/qZ)^*`` split into cyclic components."""

    def __init__(self, q: int):
        if q < 1:
            raise ValueError("modulus must be positive")
        self.q = q
        comps: list[_Component] = []
        for p, k in sorted(factorize(q).items()) if q > 1 else []:
            comps.extend(_components_for(p, k))
        self.components = comps
        self.orders = [c.order for c in comps]
        self.exponent = math.lcm(*self.orders) if comps else 1
        self.units = np.array([r for r in range(q) if math.gcd(r, q) == 1], dtype=np.int64)
        logs = np.full((q, len(comps)), -1, dtype=np.int64)
        for r in self.units:
            for j, c in enumerate(comps):
                logs[r, j] = c.dlog[int(r) % c.prime_power]
        self.logs = logs

    def generators(self) -> list[int]:
        """Each component generator lifted to a residue mod q (1 on the other components)."""
        out = []
        ncomp = len(self.components)
        for j in range(ncomp):
            r = next(
                int(u)
                for u in self.units
                if all(self.logs[u, jj] == (1 if jj == j else 0) for jj in range(ncomp))
            )
            out.append(r)
        return out

    def rotation_table(self, label: Sequence[int]) -> np.ndarray:
        rot = np.full(self.q, -1, dtype=np.int64)
        if self.q == 1:
            rot[0] = 0
            return rot
        scale = np.array([self.exponent // o for o in self.orders], dtype=np.int64)
        lab = np.array(label, dtype=np.int64) % np.array(self.orders, dtype=np.int64)
        u = self.units
        rot[u] = (self.logs[u] * (lab * scale)).sum(axis=1) % self.exponent
        return rot


@functools.lru_cache(maxsize=256)
def character_group(q: int) -> CharacterGroup:
    return CharacterGroup(q)


class DirichletCharacter:
    """A Dirichlet character stored as exact rotations ``chi(r) = e(rot[r]/E)``.

    ``rot[r] = -1`` marks residues not coprime to the modulus.
    """

    __slots__ = ("modulus", "exponent", "rot", "label", "_conductor")

    def __init__(self, modulus: int, exponent: int, rot: np.ndarray, label: tuple[int, ...] = ()):
        rot = np.asarray(rot, dtype=np.int64).copy()
        if rot.shape != (modulus,):
            raise ValueError("rotation table must have one entry per residue")
        rot.setflags(write=False)
        self.modulus = modulus
        self.exponent = exponent
        self.rot = rot
        self.label = tuple(label)
        self._conductor = None

    def __call__(self, r: int) -> complex:
        t = int(self.rot[int(r) % self.modulus])
        if t < 0:
            return 0j
        if t == 0:
            return 1 + 0j
        return cmath.exp(2j * math.pi * t / self.exponent)

    def rotation(self, r: int) -> Fraction | None:
        t = int(self.rot[int(r) % self.modulus])
        return None if t < 0 else Fraction(t, self.exponent)

    def values(self) -> np.ndarray:
        out = np.zeros(self.modulus, dtype=complex)
        ok = self.rot >= 0
        out[ok] = np.exp(2j * np.pi * self.rot[ok] / self.exponent)
        return out

    @property
    def is_principal(self) -> bool:
        return bool(np.all(self.rot[self.rot >= 0] == 0))

    @property
    def is_real(self) -> bool:
        r = self.rot[self.rot >= 0]
        return bool(np.all((2 * r) % self.exponent == 0))

    @property
    def order(self) -> int:
        r = self.rot[self.rot >= 0]
        return self.exponent // math.gcd(self.exponent, *[int(v) for v in r]) if r.size else 1

    def conj(self) -> "DirichletCharacter":
        rot = np.where(self.rot >= 0, (-self.rot) % self.exponent, -1)
        lab = tuple((-x) % o for x, o in zip(self.label, character_group(self.modulus).orders))
        return DirichletCharacter(self.modulus, self.exponent, rot, lab)

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if other.modulus != self.modulus:
            raise ValueError("characters must share a modulus")
        rot = np.where(self.rot >= 0, (self.rot + other.rot) % self.exponent, -1)
        orders = character_group(self.modulus).orders
        lab = tuple((a + b) % o for a, b, o in zip(self.label, other.label, orders))
        return DirichletCharacter(self.modulus, self.exponent, rot, lab)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DirichletCharacter)
            and self.modulus == other.modulus
            and np.array_equal(self.rot, other.rot)
        )

    def __hash__(self) -> int:
        return hash((self.modulus, self.rot.tobytes()))

    def __repr__(self) -> str:
        return f"DirichletCharacter(q={self.modulus}, label={self.label})"

    @property
    def conductor(self) -> int:
        if self._conductor is None:
            self._conductor = conductor_decompose(self)[1]
        return self._conductor

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.modulus


def characters_mod(q: int) -> list[DirichletCharacter]:
    """All ``phi(q)`` characters modulo ``q``; the principal character is first."""
    grp = character_group(q)
    out = []
    for label in itertools.product(*[range(o) for o in grp.orders]):
        out.append(DirichletCharacter(q, grp.exponent, grp.rotation_table(label), label))
    return out


def principal_character(q: int) -> DirichletCharacter:
    grp = character_group(q)
    return DirichletCharacter(q, grp.exponent, grp.rotation_table([0] * len(grp.orders)), (0,) * len(grp.orders))


def character_from_rotations(q: int, rotation) -> DirichletCharacter:
    """Build a character mod ``q`` from a map ``unit residue -> Fraction``."""
    grp = character_group(q)
    rot = np.full(q, -1, dtype=np.int64)
    for r in grp.units:
        fr = Fraction(rotation(int(r))) % 1
        val = fr * grp.exponent
        if val.denominator != 1:
            raise ValueError("rotation is not compatible with the group exponent")
        rot[r] = int(val)
    label = []
    for o, g in zip(grp.orders, grp.generators()):
        label.append(int(rot[g]) * o // grp.exponent)
    chi = DirichletCharacter(q, grp.exponent, rot, tuple(label))
    for a in grp.units:
        for b in grp.units[:8]:
            ab = int(a) * int(b) % q
            if (rot[a] + rot[b] - rot[ab]) % grp.exponent:
                raise ValueError("rotation map is not multiplicative")
    return chi


def induce(chi: DirichletCharacter, q: int) -> DirichletCharacter:
    """The character mod ``q`` induced by ``chi`` (requires ``chi.modulus | q``)."""
    if q % chi.modulus:
        raise ValueError("modulus of chi must divide q")
    return character_from_rotations(q, lambda r: chi.rotation(r % chi.modulus))


def conductor_decompose(chi: DirichletCharacter) -> tuple[DirichletCharacter, int]:
    """Return the primitive character inducing ``chi`` and its conductor."""
    q = chi.modulus
    units = character_group(q).units
    for f in divisors(q):
        if all(chi.rot[u] == 0 for u in units if u % f == 1 % f):
            break

    def lifted(s: int) -> Fraction:
        r = s
        while math.gcd(r, q) != 1:
            r += f
        return chi.rotation(r)

    prim = character_from_rotations(f, lifted)
    prim._conductor = f
    return prim, f


@dataclass(frozen=True)
class ExceptionalZeroConfig:
    """Synthetic exceptional modulus and real zero used only as test input."""

    r_tilde: int
    beta_tilde: float

    def __post_init__(self):
        if self.r_tilde < 1:
            raise ValueError("exceptional modulus must be positive")
        if not 0.0 < 1.0 - self.beta_tilde < 0.5:
            raise ValueError("beta_tilde must lie in (1/2, 1)")


def divisor_lcm_sum(B: int, h: int, t: float, budget: int = 50_000_000) -> float:
    """``sum over x in [1,B]^h of phi(x_1)...phi(x_h) / lcm(x)^t``.

    Groups the first ``h-1`` coordinates by their running lcm (exact integer
    weights), then finishes the last coordinate vectorised.
    """
    if B < 1 or h < 1:
        raise ValueError("B and h must be positive")
    phi = SieveTable(max(B, 2)).phi_array()[1 : B + 1].astype(object)
    xs = np.arange(1, B + 1, dtype=np.int64)
    state: dict[int, int] = {1: 1}
    work = 0
    for _ in range(h - 1):
        nxt: dict[int, int] = {}
        work += len(state) * B
        if work > budget:
            raise BudgetExceeded(f"divisor_lcm_sum needs more than {budget} steps")
        for L, w in state.items():
            lcms = np.lcm(L, xs)
            for l_val, ph in zip(lcms.tolist(), phi.tolist()):
                nxt[l_val] = nxt.get(l_val, 0) + w * ph
        state = nxt
    work += len(state) * B
    if work > budget:
        raise BudgetExceeded(f"divisor_lcm_sum needs more than {budget} steps")
    phi_f = phi.astype(np.float64)
    terms = []
    for L, w in sorted(state.items()):
        lcms = np.lcm(L, xs).astype(np.float64)
        terms.append(float(w) * math.fsum(phi_f / lcms**t))
    return math.fsum(terms)
