"""Composite Gauss-Legendre rules with panel doubling."""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExceeded


@dataclass(frozen=True)
class QuadSpec:
    """Quadrature controls.

    Attributes
    ----------
    tol : float
        Absolute tolerance (difference between successive refinements).
    rtol : float
        Relative tolerance; a refinement is accepted when either test passes.
    order : int
        Gauss-Legendre nodes per panel and dimension.
    max_nodes : int
        Budget on the number of integrand evaluations per refinement level.
    """

    tol: float = 1e-8
    order: int = 24
    max_nodes: int = 4_000_000
    rtol: float = 0.0

    def converged(self, err: float, value) -> bool:
        return err <= self.tol or err <= self.rtol * abs(value)


@functools.lru_cache(maxsize=64)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre_panels(a: float, b: float, order: int, panels: int):
    """Nodes and weights of a composite rule on ``[a, b]``."""
    x, w = _leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _accumulate(values, weights):
    v = np.asarray(values)
    if np.iscomplexobj(v):
        return complex(math.fsum((weights * v.real).tolist()), math.fsum((weights * v.imag).tolist()))
    return math.fsum((weights * v).tolist())


def adaptive_1d(f: Callable, a: float, b: float, spec: QuadSpec, panels: int = 4):
    """Integrate ``f`` (vectorised) on ``[a, b]`` doubling panels to convergence.

    Returns ``(value, error_estimate, panels_used)``.
    """
    panels = max(1, int(panels))
    nodes, w = gauss_legendre_panels(a, b, spec.order, panels)
    prev = _accumulate(f(nodes), w)
    while True:
        panels *= 2
        if panels * spec.order > spec.max_nodes:
            raise BudgetExceeded(f"1-d quadrature did not reach tol={spec.tol} within {spec.max_nodes} nodes")
        nodes, w = gauss_legendre_panels(a, b, spec.order, panels)
        cur = _accumulate(f(nodes), w)
        err = abs(cur - prev)
        if spec.converged(err, cur):
            return cur, err, panels
        prev = cur


def tensor_rule(bounds: Sequence[tuple[float, float]], order: int, panels: Sequence[int]):
    """Full tensor-product nodes ``(m, n)`` and weights ``(m,)``."""
    rules = [gauss_legendre_panels(a, b, order, p) for (a, b), p in zip(bounds, panels)]
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return nodes, weights


def adaptive_tensor(f: Callable, bounds: Sequence[tuple[float, float]], spec: QuadSpec, panels: Sequence[int]):
    """Tensor Gauss-Legendre on a box, doubling every panel count until converged.

    ``f`` maps an ``(m, n)`` node array to ``m`` values.
    """
    panels = [max(1, int(p)) for p in panels]

    def run(pan):
        size = math.prod(p * spec.order for p in pan)
        if size > spec.max_nodes:
            raise BudgetExceeded(f"tensor quadrature needs {size} nodes (budget {spec.max_nodes})")
        nodes, w = tensor_rule(bounds, spec.order, pan)
        return _accumulate(f(nodes), w)

    prev = run(panels)
    for _ in itertools.count():
        panels = [2 * p for p in panels]
        cur = run(panels)
        err = abs(cur - prev)
        if spec.converged(err, cur):
            return cur, err, panels
        prev = cur


def adaptive_1d_batch(f: Callable, a: float, b: float, spec: QuadSpec, panels: int = 4):
    """Like :func:`adaptive_1d` for ``f`` returning an ``(m, k)`` array: ``k`` integrals at once.

    Every component must pass the tolerance test before refinement stops.
    """
    panels = max(1, int(panels))

    def run(p):
        nodes, w = gauss_legendre_panels(a, b, spec.order, p)
        return w @ np.asarray(f(nodes))

    prev = run(panels)
    while True:
        panels *= 2
        if panels * spec.order > spec.max_nodes:
            raise BudgetExceeded(f"batched quadrature did not reach tol={spec.tol} within {spec.max_nodes} nodes")
        cur = run(panels)
        err = np.abs(cur - prev)
        if np.all((err <= spec.tol) | (err <= spec.rtol * np.abs(cur))):
            return cur, err, panels
        prev = cur
