"""Time the hot kernels under the numba and numpy backends.

Run ``python benchmarks/bench_kernels.py [--repeat N] [--json PATH]``. The
numba timings exclude compilation (one warm-up call per kernel). Every row
also reports whether both backends returned the same result.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from primepoints import _accel, _kernels
from primepoints.arithmetic import SieveTable
from primepoints.expsums import ExpSumContext
from primepoints.forms import standard_quadric
from primepoints.weights import WeightFamily, make_bump


def _cases():
    quad = standard_quadric()
    fam = WeightFamily(300, (0.3, 0.4, 0.4, 0.3), make_bump(0.08))
    ctx = ExpSumContext(quad, fam)
    axes = [ctx.axis(i) for i in range(4)]
    coeffs, exps = quad.base.kernel_arrays()
    vals, w = ctx.phase_data()
    q = 2 * int(np.max(np.abs(vals))) + 1
    res = np.mod(vals, q)
    sv = SieveTable(200_000)
    mu = sv.mobius_array()
    logs = np.zeros(sv.limit + 1)
    logs[1:] = np.log(np.arange(1, sv.limit + 1))
    rng = np.random.default_rng(0)
    theta = rng.random(2_000_000)
    wts = rng.standard_normal(2_000_000)
    c = np.array([[1.0, 2.0, 0.0], [2.0, -1.0, 1.0], [0.0, 1.0, 3.0]])
    gammas = np.array([1.0, 0.8, 1.25])
    tu = rng.integers(-20, 21, size=(4000, 4, 2))
    wv = rng.integers(-20, 21, size=(400, 4))
    pcoeffs = np.array([2, 2, -2, -2], dtype=np.int64)
    pexps = np.eye(4, dtype=np.int64)
    owner = np.arange(4, dtype=np.int64)
    return {
        "spf_table(2e6)": lambda: _kernels.spf_table(2_000_000),
        "mu_log_table(2e5)": lambda: _kernels.mu_log_table(mu, logs),
        "phase_sum(2e6)": lambda: _kernels.phase_sum(wts, theta),
        "rational_phase_sums(Q=64)": lambda: _kernels.rational_phase_sums(w, res, q, np.arange(64)),
        "zero_count(quadric, X=300)": lambda: _kernels.zero_count(coeffs, exps, [a[0] for a in axes],
                                                                 [a[1] for a in axes]),
        "variety_count(grad, p=31)": lambda: _kernels.variety_count(pcoeffs, pexps, owner, 4, 31, 4),
        "small_norm_count": lambda: _kernels.small_norm_count(tu, wv, 0.318309886, 0.05),
        "shrink_count(h=3, Z=12)": lambda: _kernels.shrink_count(c, gammas, 12.0, np.ceil(gammas * 12).astype(np.int64)),
    }


def _same(a, b) -> bool:
    if isinstance(a, np.ndarray):
        return a.shape == b.shape and np.allclose(a, b, rtol=1e-10, atol=1e-9)
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return bool(np.isclose(a, b, rtol=1e-10, atol=1e-9))


def _time(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the rows to this file")
    args = ap.parse_args()
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    rows = []
    for name, fn in _cases().items():
        with _accel.use_backend("numba"):
            fn()  # compile
            t_nb, r_nb = _time(fn, args.repeat)
        with _accel.use_backend("numpy"):
            t_np, r_np = _time(fn, args.repeat)
        rows.append({"kernel": name, "numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb,
                     "agree": _same(r_nb, r_np)})
    width = max(len(r["kernel"]) for r in rows)
    print(f"{'kernel':<{width}}  {'numba [s]':>10}  {'numpy [s]':>10}  {'speedup':>8}  agree")
    for r in rows:
        print(f"{r['kernel']:<{width}}  {r['numba_s']:10.4f}  {r['numpy_s']:10.4f}  {r['speedup']:8.1f}  {r['agree']}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
