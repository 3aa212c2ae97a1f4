"""Prime sums twisted by a character against truncated sums over L-function zeros."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arithmetic import DirichletCharacter, SieveTable, principal_character
from .errors import ConfigError

_HEADER_KEYS = ("modulus", "label", "symmetric", "height")


@dataclass(frozen=True)
class ZeroDataset:
    """Nontrivial zeros ``beta + i t`` of one Dirichlet L-function.

    Attributes
    ----------
    modulus : int
        Modulus of the character.
    label : str
        Free-form character label taken from the file header.
    beta, t : ndarray
        Real and imaginary parts, ordered by ``|t|``.
    T_prime : float
        Height up to which the list is taken as complete (0 for an empty list).
    """

    modulus: int
    label: str
    beta: np.ndarray
    t: np.ndarray
    T_prime: float

    def __post_init__(self):
        if len(self.beta) != len(self.t):
            raise ValueError("beta and t must have equal length")
        if np.any((self.beta <= 0) | (self.beta >= 1)):
            raise ValueError("every zero needs 0 < beta < 1")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def zeros(self) -> np.ndarray:
        return self.beta + 1j * self.t

    def truncated(self, T: float) -> "ZeroDataset":
        """Zeros with ``|t| <= T``; the covered height drops to ``T``."""
        keep = np.abs(self.t) <= T
        return ZeroDataset(self.modulus, self.label, self.beta[keep], self.t[keep], min(float(T), self.T_prime))


def _parse_header(line: str, header: dict, lineno: int) -> None:
    body = line.lstrip("#").strip()
    if ":" not in body:
        return
    key, val = (s.strip() for s in body.split(":", 1))
    key = key.lower()
    if key not in _HEADER_KEYS:
        return
    if key == "modulus":
        try:
            header[key] = int(val)
        except ValueError:
            raise ConfigError(f"line {lineno}: modulus must be an integer, got {val!r}") from None
        if header[key] < 1:
            raise ConfigError(f"line {lineno}: modulus must be positive")
    elif key == "height":
        try:
            header[key] = float(val)
        except ValueError:
            raise ConfigError(f"line {lineno}: height must be a number, got {val!r}") from None
    elif key == "symmetric":
        header[key] = val.lower() in ("1", "yes", "true")
    else:
        header[key] = val


def parse_zeros(text: str) -> ZeroDataset:
    """Parse zero data from a string; see :func:`load_zeros` for the format."""
    header: dict = {"modulus": 1, "label": "principal", "symmetric": True}
    betas, ts = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            _parse_header(line, header, lineno)
            continue
        parts = line.split()
        try:
            nums = [float(p) for p in parts]
        except ValueError:
            raise ConfigError(f"line {lineno}: cannot parse {raw!r}") from None
        if len(nums) == 1:
            beta, t = 0.5, nums[0]
        elif len(nums) == 2:
            beta, t = nums
        else:
            raise ConfigError(f"line {lineno}: expected 'beta t' or 't', got {len(nums)} fields")
        if not all(math.isfinite(v) for v in (beta, t)):
            raise ConfigError(f"line {lineno}: non-finite value")
        if not 0.0 < beta < 1.0:
            raise ConfigError(f"line {lineno}: beta={beta} outside (0, 1)")
        betas.append(beta)
        ts.append(t)
    beta = np.array(betas, dtype=float)
    t = np.array(ts, dtype=float)
    if header["symmetric"] and len(t):
        if np.all(t > 0):
            beta = np.concatenate([beta, beta])
            t = np.concatenate([t, -t])
        else:
            a = sorted(zip(beta.tolist(), t.tolist()))
            b = sorted(zip(beta.tolist(), (-t).tolist()))
            if not np.allclose(np.array(a), np.array(b), rtol=0, atol=1e-9):
                raise ConfigError("zero list is neither a half-list (t > 0) nor closed under conjugation")
    order = np.lexsort((t, np.abs(t)))
    beta, t = beta[order], t[order]
    height = header.get("height", float(np.max(np.abs(t))) if len(t) else 0.0)
    return ZeroDataset(header["modulus"], str(header["label"]), beta, t, height)


def load_zeros(path: str | Path) -> ZeroDataset:
    """Read a zero file.

    One zero per line, either ``beta t`` or just ``t`` (then ``beta = 1/2``).
    Comment lines start with ``#``; ``# modulus: q``, ``# label: name``,
    ``# height: T`` and ``# symmetric: yes|no`` are recognised as headers.
    With ``symmetric`` (the default) a list of positive ordinates is completed
    by conjugation.

    Raises
    ------
    ConfigError
        On a malformed line (the message carries the line number) or a real
        part outside ``(0, 1)``.
    """
    return parse_zeros(Path(path).read_text())


def bundled_zeta_zeros() -> ZeroDataset:
    """First 100 zeta zero pairs shipped with the package."""
    return load_zeros(Path(__file__).with_name("data") / "zeta_zeros_100.txt")


def _character(chi: DirichletCharacter | None) -> DirichletCharacter:
    return principal_character(1) if chi is None else chi


def chi_sum_direct(Y: float, chi: DirichletCharacter | None = None, sieve: SieveTable | None = None,
                   weight: str = "lambda_star") -> complex:
    """``sum_{p <= Y} log(p) chi(p)`` over primes, with compensated summation.

    ``chi=None`` means the trivial character mod 1. A supplied sieve must
    reach ``floor(Y)``. ``weight="lambda"`` includes prime powers (the
    classical ``psi(Y)`` twisted by ``chi``).
    """
    if weight not in ("lambda_star", "lambda"):
        raise ValueError(f"unknown weight {weight!r}")
    chi = _character(chi)
    top = int(math.floor(Y))
    if top < 2:
        return 0j
    if sieve is None:
        sieve = SieveTable(top)
    elif sieve.limit < top:
        raise ValueError(f"Y={Y} is beyond the sieve limit {sieve.limit}")
    if weight == "lambda_star":
        p = sieve.primes()
        p = p[p <= top]
        logs = np.log(p.astype(float))
    else:
        lam = sieve.lambda_array()[: top + 1]
        p = np.nonzero(lam)[0]
        logs = lam[p]
    vals = chi.values()[p % chi.modulus]
    return complex(math.fsum((logs * vals.real).tolist()), math.fsum((logs * vals.imag).tolist()))


def zero_sum(Y: float, dataset: ZeroDataset) -> complex:
    """``sum_rho Y^rho / rho`` in increasing ``|t|``.

    The phase ``t log Y / (2 pi)`` is reduced mod 1 in extended precision
    before exponentiating.
    """
    if len(dataset) == 0:
        return 0j
    logY = np.longdouble(math.log(Y))
    t = dataset.t.astype(np.longdouble)
    phase = t * logY / (2 * np.pi)
    frac = (phase - np.floor(phase)).astype(float)
    mag = np.exp(dataset.beta * float(logY))
    terms = mag * np.exp(2j * np.pi * frac) / dataset.zeros
    return complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))


@dataclass(frozen=True)
class ExplicitFormulaReport:
    Y: float
    q: int
    direct: complex
    main_term: float
    zero_sum: complex
    residual: float
    envelope: float

    @property
    def ratio(self) -> float:
        return self.residual / self.envelope

    def to_dict(self) -> dict:
        return {"Y": self.Y, "q": self.q, "residual": self.residual, "envelope": self.envelope,
                "ratio": self.ratio}


def explicit_formula_residual(Y: float, chi: DirichletCharacter | None, dataset: ZeroDataset,
                              sieve: SieveTable | None = None) -> ExplicitFormulaReport:
    """Compare the prime sum with ``[chi principal] Y - sum_rho Y^rho / rho``.

    The envelope is ``Y (log Y)^2 / T'`` with ``T'`` the height of the dataset.

    Raises
    ------
    ValueError
        For an empty dataset, ``Y <= 1`` or a modulus mismatch.
    """
    chi = _character(chi)
    if len(dataset) == 0 or dataset.T_prime <= 0:
        raise ValueError("explicit formula needs a nonempty zero dataset (T' > 0)")
    if Y <= 1:
        raise ValueError("Y must exceed 1")
    if dataset.modulus != chi.modulus:
        raise ValueError(f"dataset modulus {dataset.modulus} differs from character modulus {chi.modulus}")
    direct = chi_sum_direct(Y, chi, sieve)
    main = float(Y) if chi.is_principal else 0.0
    zs = zero_sum(Y, dataset)
    residual = abs(direct - (main - zs))
    envelope = Y * math.log(Y) ** 2 / dataset.T_prime
    return ExplicitFormulaReport(float(Y), chi.modulus, direct, main, zs, residual, envelope)
