"""Exponent bookkeeping for the minor-arc dichotomy.

All constraints are evaluated in exact rational arithmetic; ``kappa0`` and
``eps`` (the "small" slack constants) enter as exact decimals.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ParameterError

T_FRAK = 6


def _check_degree(d: int) -> None:
    if int(d) != d or d < 2:
        raise ValueError(f"degree must be an integer >= 2, got {d}")


def codim_bound(d: int) -> int:
    """Smallest singular-locus codimension allowed for degree ``d``.

    ``7 d (2d-1) 4^d + 4 (d-1)(12d-1) 2^d + 12 d``.
    """
    _check_degree(d)
    return 7 * d * (2 * d - 1) * 4**d + 4 * (d - 1) * (12 * d - 1) * 2**d + 12 * d


def C0(d: int) -> int:
    """``4 (d-1) 2^d + 1``, the codimension cap in the second dichotomy case."""
    _check_degree(d)
    return 4 * (d - 1) * 2**d + 1


def rank_concentration_bound(codim: int, H: int, c0: int) -> Fraction:
    """Guaranteed codimension of one of ``H`` restricted forms: ``(codim - (H-1) C0) / H``."""
    if H < 1:
        raise ValueError("H must be positive")
    return Fraction(codim - (H - 1) * c0, H)


def _exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class DichotomyConstants:
    """Derived exponents; rationals are kept exact, floats via :meth:`to_dict`.

    Attributes
    ----------
    K : Fraction
        Lower bound ``(codim - (2H-1) C0) / (H 4^(d-1))`` for the bihomogeneous
        codimension ratio.
    K_threshold : Fraction
        ``4 d sigma (2d-1) / (5/24 - d sigma) + 2 (2d-1)``; ``K`` must exceed it.
    """

    d: int
    codim: int
    codim_threshold: int
    C0: int
    t_frak: int
    H: int
    kappa0: Fraction
    eps: Fraction
    kappa: Fraction
    sigma: Fraction
    K: Fraction
    K_threshold: Fraction
    theta0_prime: Fraction
    theta0: Fraction
    lam: Fraction
    gamma: Fraction

    def constraints(self) -> dict[str, Fraction]:
        """Slack of every required strict inequality (positive means satisfied)."""
        d, ds = self.d, self.d * self.sigma
        return {
            "K > 4 d sigma (2d-1) / (5/24 - d sigma) + 2 (2d-1)": self.K - self.K_threshold,
            "2 (2d-1) theta0' + d sigma < 5/24": Fraction(5, 24) - 2 * (2 * d - 1) * self.theta0_prime - ds,
            "2 theta0 + gamma < 5/12": Fraction(5, 12) - 2 * self.theta0 - self.gamma,
            "gamma > 2 theta0 + 2 lambda": self.gamma - 2 * self.theta0 - 2 * self.lam,
        }

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = float(v) if isinstance(v, Fraction) else v
        out["constraints"] = {k: float(v) for k, v in self.constraints().items()}
        return out


EPS_LADDER = tuple(Fraction(1, 10**k) for k in range(3, 13))


def derive_parameters(d: int, codim: int, kappa0: float = 1e-3, eps: float | None = None,
                      t_frak: int = T_FRAK) -> DichotomyConstants:
    """Derive ``(sigma, K, theta0', theta0, lambda, gamma)`` for degree ``d``.

    ``sigma = 1/(2 t d)`` with ``H = t d``, ``lambda = d sigma`` and
    ``gamma = 2 theta0 + 2 lambda + eps``.

    With ``eps=None`` the slack is the first of ``1e-3, 1e-4, ..., 1e-12``
    for which every inequality holds. The margin at ``codim = codim_bound(d)``
    shrinks like ``4^-d``, so a fixed slack cannot serve every degree.

    Raises
    ------
    ParameterError
        Naming the first violated inequality, e.g. when ``codim`` is below
        :func:`codim_bound`.
    """
    if eps is None:
        err = None
        for e in EPS_LADDER:
            try:
                return derive_parameters(d, codim, kappa0, e, t_frak)
            except ParameterError as exc:
                if exc.inequality.startswith("K >"):
                    raise
                err = exc
        raise err
    _check_degree(d)
    if t_frak < 3:
        raise ValueError("t_frak must be at least 3 so that d sigma < 5/24")
    k0, e = _exact(kappa0), _exact(eps)
    if not (k0 > 0 and e > 0):
        raise ValueError("kappa0 and eps must be positive")
    c0 = C0(d)
    H = t_frak * d
    sigma = Fraction(1, 2 * t_frak * d)
    ds = d * sigma
    kappa = Fraction(codim, 2 * (2 * d - 1) * 4**d) - 1 - k0
    K = Fraction(codim - (2 * H - 1) * c0, H) / 4 ** (d - 1)
    K_thr = 4 * ds * (2 * d - 1) / (Fraction(5, 24) - ds) + 2 * (2 * d - 1)
    if K <= K_thr:
        raise ParameterError("K > 4 d sigma (2d-1) / (5/24 - d sigma) + 2 (2d-1)",
                             f"K={float(K):.6g}, threshold={float(K_thr):.6g}, codim={codim}")
    theta0_p = (2 + e) * ds / (K - 2 * (2 * d - 1))
    theta0 = (2 * d - 1) * theta0_p * (1 + e)
    lam = ds
    gamma = 2 * theta0 + 2 * lam + e
    out = DichotomyConstants(d, codim, codim_bound(d), c0, t_frak, H, k0, e, kappa, sigma, K, K_thr,
                             theta0_p, theta0, lam, gamma)
    for name, slack in out.constraints().items():
        if slack <= 0:
            raise ParameterError(name, f"slack={float(slack):.3g} at d={d}, codim={codim}, eps={float(e)}")
    return out


def codim_chain_check(d: int, t_frak: int = T_FRAK) -> dict:
    """Compare :func:`codim_bound` with ``H 4^(d-1) K_threshold + (2H-1) C0``."""
    _check_degree(d)
    H = t_frak * d
    ds = Fraction(1, 2 * t_frak)
    K_thr = 4 * ds * (2 * d - 1) / (Fraction(5, 24) - ds) + 2 * (2 * d - 1)
    rhs = H * 4 ** (d - 1) * K_thr + (2 * H - 1) * C0(d)
    bound = codim_bound(d)
    return {"d": d, "codim_bound": bound, "rhs": float(rhs), "holds": bound > rhs}


def caseI_parameters(d: int, theta0: float | None = None) -> dict:
    """Exponents for forms where some cross term has large singular-locus codimension.

    Checks ``2^(-1-d) C0 > d`` and ``2^(-1-d) C0 - 2 (d-1) > 0``; with ``theta0``
    also returns the admissible bound ``varsigma < theta0 / (d-1)``.
    """
    _check_degree(d)
    saving = Fraction(C0(d), 2 ** (d + 1))
    if saving <= d:
        raise ParameterError("2^(-1-d) C0 > d", f"value {float(saving)}")
    net = saving - 2 * (d - 1)
    if net <= 0:
        raise ParameterError("2^(-1-d) C0 - 2(d-1) > 0", f"value {float(net)}")
    out = {"d": d, "C0": C0(d), "pointwise_saving": float(saving), "net_saving": float(net)}
    if theta0 is not None:
        if theta0 <= 0:
            raise ValueError("theta0 must be positive")
        out["varsigma_max"] = theta0 / (d - 1)
    return out
