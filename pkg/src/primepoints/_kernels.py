"""Hot loops, each with a numba kernel and a vectorised numpy twin.

The public wrappers at the bottom dispatch on :func:`primepoints._accel.backend`.
Both paths return identical integers for the counting kernels and agree to
rounding for the floating-point ones.
"""
from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit

_CHUNK = 1 << 20


# ---------------------------------------------------------------- sieve

@njit
def _spf_numba(limit):
    spf = np.zeros(limit + 1, dtype=np.int64)
    for i in range(2, limit + 1):
        if spf[i] == 0:
            spf[i] = i
            if i * i <= limit:
                for j in range(i * i, limit + 1, i):
                    if spf[j] == 0:
                        spf[j] = i
    return spf


def _spf_numpy(limit):
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    rest = spf == 0
    rest[:2] = False
    spf[rest] = np.nonzero(rest)[0]
    return spf


# ------------------------------------------------- Dirichlet convolution

@njit
def _mu_log_numba(mu, logs):
    limit = mu.shape[0] - 1
    out = np.zeros(limit + 1)
    for m in range(1, limit + 1):
        if mu[m] != 0:
            k = 1
            x = m
            while x <= limit:
                out[x] += mu[m] * logs[k]
                k += 1
                x += m
    return out


def _mu_log_numpy(mu, logs):
    limit = mu.shape[0] - 1
    out = np.zeros(limit + 1)
    for m in np.nonzero(mu)[0]:
        if m == 0:
            continue
        out[m::m] += mu[m] * logs[1 : limit // m + 1]
    return out


# ------------------------------------------------------- phase sums

@njit
def _phase_sum_numba(weights, theta):
    re = 0.0
    im = 0.0
    cre = 0.0
    cim = 0.0
    for k in range(weights.shape[0]):
        ang = 2.0 * np.pi * theta[k]
        yr = weights[k] * np.cos(ang) - cre
        tr = re + yr
        cre = (tr - re) - yr
        re = tr
        yi = weights[k] * np.sin(ang) - cim
        ti = im + yi
        cim = (ti - im) - yi
        im = ti
    return re, im


def _phase_sum_numpy(weights, theta):
    ang = 2.0 * np.pi * theta
    return math.fsum(weights * np.cos(ang)), math.fsum(weights * np.sin(ang))


@njit
def _rational_sums_numba(weights, residues, q, js):
    cos_t = np.empty(q)
    sin_t = np.empty(q)
    for r in range(q):
        cos_t[r] = np.cos(2.0 * np.pi * r / q)
        sin_t[r] = np.sin(2.0 * np.pi * r / q)
    out_re = np.empty(js.shape[0])
    out_im = np.empty(js.shape[0])
    for a in range(js.shape[0]):
        j = js[a] % q
        re = 0.0
        im = 0.0
        cre = 0.0
        cim = 0.0
        for k in range(weights.shape[0]):
            r = (j * residues[k]) % q
            yr = weights[k] * cos_t[r] - cre
            tr = re + yr
            cre = (tr - re) - yr
            re = tr
            yi = weights[k] * sin_t[r] - cim
            ti = im + yi
            cim = (ti - im) - yi
            im = ti
        out_re[a] = re
        out_im[a] = im
    return out_re, out_im


def _rational_sums_numpy(weights, residues, q, js):
    ang = 2.0 * np.pi * np.arange(q) / q
    cos_t, sin_t = np.cos(ang), np.sin(ang)
    out = np.empty(js.shape[0], dtype=complex)
    for a, j in enumerate(js):
        r = ((int(j) % q) * residues) % q
        out[a] = complex(math.fsum(weights * cos_t[r]), math.fsum(weights * sin_t[r]))
    return out.real.copy(), out.imag.copy()


# -------------------------------------- complete sums over (Z/qZ)^*

@njit
def _residue_hist_numba(coeffs, exps, q, units, rots, e_mod):
    n_terms = exps.shape[0]
    n = exps.shape[1]
    m = units.shape[0]
    max_e = 0
    for k in range(n_terms):
        for i in range(n):
            if exps[k, i] > max_e:
                max_e = exps[k, i]
    pw = np.empty((m, max_e + 1), dtype=np.int64)
    for j in range(m):
        pw[j, 0] = 1 % q
        for e in range(1, max_e + 1):
            pw[j, e] = (pw[j, e - 1] * units[j]) % q
    hist = np.zeros(q * e_mod, dtype=np.int64)
    idx = np.zeros(n, dtype=np.int64)
    total = 1
    for i in range(n):
        total *= m
    for _ in range(total):
        r = 0
        for k in range(n_terms):
            t = coeffs[k]
            for i in range(n):
                e = exps[k, i]
                if e != 0:
                    t = (t * pw[idx[i], e]) % q
            r = (r + t) % q
        s = 0
        for i in range(n):
            s += rots[i, idx[i]]
        hist[r * e_mod + s % e_mod] += 1
        i = n - 1
        while i >= 0:
            idx[i] += 1
            if idx[i] < m:
                break
            idx[i] = 0
            i -= 1
    return hist


def _digits(flat, base, n):
    out = np.empty((n, flat.shape[0]), dtype=np.int64)
    rest = flat.copy()
    for i in range(n - 1, -1, -1):
        rest, out[i] = np.divmod(rest, base)
    return out


def _residue_hist_numpy(coeffs, exps, q, units, rots, e_mod):
    n_terms, n = exps.shape
    m = units.shape[0]
    max_e = int(exps.max()) if exps.size else 0
    pw = np.empty((m, max_e + 1), dtype=np.int64)
    pw[:, 0] = 1 % q
    for e in range(1, max_e + 1):
        pw[:, e] = (pw[:, e - 1] * units) % q
    hist = np.zeros(q * e_mod, dtype=np.int64)
    total = m**n
    for start in range(0, total, _CHUNK):
        idx = _digits(np.arange(start, min(total, start + _CHUNK), dtype=np.int64), m, n)
        r = np.zeros(idx.shape[1], dtype=np.int64)
        for k in range(n_terms):
            t = np.full(idx.shape[1], coeffs[k], dtype=np.int64)
            for i in range(n):
                if exps[k, i]:
                    t = (t * pw[idx[i], exps[k, i]]) % q
            r = (r + t) % q
        s = np.zeros(idx.shape[1], dtype=np.int64)
        for i in range(n):
            s += rots[i, idx[i]]
        hist += np.bincount(r * e_mod + s % e_mod, minlength=q * e_mod)
    return hist


# ------------------------------------ common zeros over F_p^m (probes)

@njit
def _variety_count_numba(coeffs, exps, owner, n_polys, p, m):
    n_terms = exps.shape[0]
    max_e = 0
    for k in range(n_terms):
        for i in range(m):
            if exps[k, i] > max_e:
                max_e = exps[k, i]
    pw = np.empty((p, max_e + 1), dtype=np.int64)
    for a in range(p):
        pw[a, 0] = 1
        for e in range(1, max_e + 1):
            pw[a, e] = (pw[a, e - 1] * a) % p
    idx = np.zeros(m, dtype=np.int64)
    vals = np.zeros(n_polys, dtype=np.int64)
    total = 1
    for i in range(m):
        total *= p
    count = 0
    for _ in range(total):
        for j in range(n_polys):
            vals[j] = 0
        for k in range(n_terms):
            t = coeffs[k]
            for i in range(m):
                e = exps[k, i]
                if e != 0:
                    t = (t * pw[idx[i], e]) % p
            vals[owner[k]] = (vals[owner[k]] + t) % p
        ok = True
        for j in range(n_polys):
            if vals[j] != 0:
                ok = False
                break
        if ok:
            count += 1
        i = m - 1
        while i >= 0:
            idx[i] += 1
            if idx[i] < p:
                break
            idx[i] = 0
            i -= 1
    return count


def _variety_count_numpy(coeffs, exps, owner, n_polys, p, m):
    total = p**m
    count = 0
    for start in range(0, total, _CHUNK):
        idx = _digits(np.arange(start, min(total, start + _CHUNK), dtype=np.int64), p, m)
        vals = np.zeros((n_polys, idx.shape[1]), dtype=np.int64)
        for k in range(exps.shape[0]):
            t = np.full(idx.shape[1], coeffs[k], dtype=np.int64)
            for i in range(m):
                e = int(exps[k, i])
                if e:
                    t = (t * pow_mod_vec(idx[i], e, p)) % p
            vals[owner[k]] = (vals[owner[k]] + t) % p
        count += int(np.count_nonzero(np.all(vals == 0, axis=0)))
    return count


def pow_mod_vec(base, e, p):
    out = np.ones_like(base)
    b = base % p
    while e:
        if e & 1:
            out = (out * b) % p
        b = (b * b) % p
        e >>= 1
    return out


# ------------------------------------------ integer boxes (exact F)

@njit
def _box_values_numba(coeffs, exps, axes, lengths):
    n = exps.shape[1]
    total = 1
    for i in range(n):
        total *= lengths[i]
    out = np.empty(total, dtype=np.int64)
    idx = np.zeros(n, dtype=np.int64)
    for flat in range(total):
        v = 0
        for k in range(exps.shape[0]):
            t = coeffs[k]
            for i in range(n):
                x = axes[i, idx[i]]
                for _ in range(exps[k, i]):
                    t *= x
            v += t
        out[flat] = v
        i = n - 1
        while i >= 0:
            idx[i] += 1
            if idx[i] < lengths[i]:
                break
            idx[i] = 0
            i -= 1
    return out


def _box_values_numpy(coeffs, exps, axes, lengths):
    n = exps.shape[1]
    grids = np.meshgrid(*[axes[i, : lengths[i]] for i in range(n)], indexing="ij")
    out = np.zeros(grids[0].shape if n else (), dtype=np.int64)
    for k in range(exps.shape[0]):
        t = np.full(out.shape, coeffs[k], dtype=np.int64)
        for i in range(n):
            if exps[k, i]:
                t = t * grids[i] ** int(exps[k, i])
        out = out + t
    return out.ravel()


@njit
def _zero_count_numba(coeffs, exps, axes, weights, lengths):
    n = exps.shape[1]
    total = 1
    for i in range(n):
        total *= lengths[i]
    idx = np.zeros(n, dtype=np.int64)
    acc = 0.0
    comp = 0.0
    raw = 0
    for _ in range(total):
        v = 0
        for k in range(exps.shape[0]):
            t = coeffs[k]
            for i in range(n):
                x = axes[i, idx[i]]
                for _r in range(exps[k, i]):
                    t *= x
            v += t
        if v == 0:
            w = 1.0
            for i in range(n):
                w *= weights[i, idx[i]]
            y = w - comp
            s = acc + y
            comp = (s - acc) - y
            acc = s
            raw += 1
        i = n - 1
        while i >= 0:
            idx[i] += 1
            if idx[i] < lengths[i]:
                break
            idx[i] = 0
            i -= 1
    return acc, raw


def _zero_count_numpy(coeffs, exps, axes, weights, lengths):
    n = exps.shape[1]
    parts = []
    raw = 0
    lead = range(lengths[0]) if n else range(1)
    for i0 in lead:
        sub_axes = [axes[0, i0 : i0 + 1]] + [axes[i, : lengths[i]] for i in range(1, n)]
        sub_w = [weights[0, i0 : i0 + 1]] + [weights[i, : lengths[i]] for i in range(1, n)]
        grids = np.meshgrid(*sub_axes, indexing="ij")
        v = np.zeros(grids[0].shape, dtype=np.int64)
        for k in range(exps.shape[0]):
            t = np.full(v.shape, coeffs[k], dtype=np.int64)
            for i in range(n):
                if exps[k, i]:
                    t = t * grids[i] ** int(exps[k, i])
            v = v + t
        hit = v == 0
        if hit.any():
            wgrid = np.ones(v.shape)
            for i, w in enumerate(sub_w):
                shape = [1] * n
                shape[i] = -1
                wgrid = wgrid * w.reshape(shape)
            parts.extend(wgrid[hit].tolist())
            raw += int(hit.sum())
    return math.fsum(parts), raw


# -------------------------------------------------- lattice counters

@njit
def _small_norm_numba(tu, wv, num, den, alpha, p_thr):
    nu = tu.shape[0]
    kk = tu.shape[1]
    h = tu.shape[2]
    nv = wv.shape[0]
    count = 0
    for a in range(nu):
        for b in range(nv):
            ok = True
            for i in range(h):
                g = 0
                for k in range(kk):
                    g += tu[a, k, i] * wv[b, k]
                if den > 0:
                    r = (num * g) % den
                    dist = min(r, den - r)
                    if not dist < p_thr * den:
                        ok = False
                        break
                else:
                    x = alpha * g
                    f = x - np.floor(x)
                    if not min(f, 1.0 - f) < p_thr:
                        ok = False
                        break
            if ok:
                count += 1
    return count


def _small_norm_numpy(tu, wv, num, den, alpha, p_thr):
    count = 0
    step = max(1, _CHUNK // max(1, wv.shape[0] * tu.shape[2]))
    for start in range(0, tu.shape[0], step):
        g = np.einsum("aki,bk->abi", tu[start : start + step], wv)
        if den > 0:
            r = (num * g) % den
            ok = np.minimum(r, den - r) < p_thr * den
        else:
            x = alpha * g
            f = x - np.floor(x)
            ok = np.minimum(f, 1.0 - f) < p_thr
        count += int(np.count_nonzero(ok.all(axis=2)))
    return count


@njit
def _shrink_numba(c, gammas, z, bounds):
    h = gammas.shape[0]
    idx = np.zeros(h, dtype=np.int64)
    total = 1
    for i in range(h):
        total *= 2 * bounds[i] + 1
    count = 0
    for _ in range(total):
        ok = True
        for i in range(h):
            if not abs(idx[i] - bounds[i]) < gammas[i] * z:
                ok = False
                break
        if ok:
            prod = 1
            for i in range(h):
                lin = 0.0
                for j in range(h):
                    lin += c[i, j] * (idx[j] - bounds[j])
                rad = z / gammas[i]
                hi = np.ceil(lin + rad) - 1.0
                lo = np.floor(lin - rad) + 1.0
                cnt = int(hi - lo + 1.0)
                if cnt <= 0:
                    prod = 0
                    break
                prod *= cnt
            count += prod
        i = h - 1
        while i >= 0:
            idx[i] += 1
            if idx[i] <= 2 * bounds[i]:
                break
            idx[i] = 0
            i -= 1
    return count


def _shrink_numpy(c, gammas, z, bounds):
    h = gammas.shape[0]
    axes = [np.arange(-b, b + 1) for b in bounds]
    ys = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    inside = np.all(np.abs(ys) < gammas * z, axis=1)
    ys = ys[inside].astype(float)
    lin = ys @ c.T
    rad = z / gammas
    cnt = (np.ceil(lin + rad) - 1.0) - (np.floor(lin - rad) + 1.0) + 1.0
    cnt = np.clip(cnt, 0, None).astype(np.int64)
    return int(np.prod(cnt, axis=1).sum())


# ----------------------------------------------------------- dispatch

def _pick(numba_fn, numpy_fn):
    return numba_fn if _accel.backend() == "numba" else numpy_fn


def spf_table(limit: int) -> np.ndarray:
    return _pick(_spf_numba, _spf_numpy)(int(limit))


def mu_log_table(mu: np.ndarray, logs: np.ndarray) -> np.ndarray:
    return _pick(_mu_log_numba, _mu_log_numpy)(mu.astype(np.int64), logs.astype(np.float64))


def phase_sum(weights: np.ndarray, theta: np.ndarray) -> complex:
    """``sum_k w_k e(theta_k)`` with compensated accumulation."""
    re, im = _pick(_phase_sum_numba, _phase_sum_numpy)(
        np.ascontiguousarray(weights, dtype=np.float64), np.ascontiguousarray(theta, dtype=np.float64)
    )
    return complex(re, im)


def rational_phase_sums(weights: np.ndarray, residues: np.ndarray, q: int, js) -> np.ndarray:
    """``sum_k w_k e(j r_k / q)`` for each ``j``, from an exact root-of-unity table."""
    js = np.ascontiguousarray(js, dtype=np.int64)
    re, im = _pick(_rational_sums_numba, _rational_sums_numpy)(
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(residues % q, dtype=np.int64),
        int(q),
        js,
    )
    return re + 1j * im


def residue_histogram(coeffs, exps, q, units, rots, e_mod) -> np.ndarray:
    """Joint histogram of ``(F(h) mod q, rotation(h) mod e_mod)`` over ``units^n``."""
    hist = _pick(_residue_hist_numba, _residue_hist_numpy)(
        np.ascontiguousarray(coeffs % q, dtype=np.int64),
        np.ascontiguousarray(exps, dtype=np.int64),
        int(q),
        np.ascontiguousarray(units, dtype=np.int64),
        np.ascontiguousarray(rots, dtype=np.int64),
        int(e_mod),
    )
    return hist.reshape(q, e_mod)


def variety_count(coeffs, exps, owner, n_polys, p, m) -> int:
    return int(
        _pick(_variety_count_numba, _variety_count_numpy)(
            np.ascontiguousarray(coeffs % p, dtype=np.int64),
            np.ascontiguousarray(exps, dtype=np.int64).reshape(len(coeffs), m),
            np.ascontiguousarray(owner, dtype=np.int64),
            int(n_polys),
            int(p),
            int(m),
        )
    )


def _pad_axes(axes_list, dtype):
    n = len(axes_list)
    width = max((len(a) for a in axes_list), default=0)
    arr = np.zeros((n, max(width, 1)), dtype=dtype)
    for i, a in enumerate(axes_list):
        arr[i, : len(a)] = a
    lengths = np.array([len(a) for a in axes_list], dtype=np.int64)
    return arr, lengths


def box_values(coeffs, exps, axes_list) -> np.ndarray:
    """Exact int64 values of a polynomial over a product of integer axes (C order)."""
    axes, lengths = _pad_axes(axes_list, np.int64)
    return _pick(_box_values_numba, _box_values_numpy)(
        np.ascontiguousarray(coeffs, dtype=np.int64), np.ascontiguousarray(exps, dtype=np.int64), axes, lengths
    )


def zero_count(coeffs, exps, axes_list, weights_list) -> tuple[float, int]:
    """Weighted and raw counts of zeros of a polynomial over a product box."""
    axes, lengths = _pad_axes(axes_list, np.int64)
    weights, _ = _pad_axes(weights_list, np.float64)
    acc, raw = _pick(_zero_count_numba, _zero_count_numpy)(
        np.ascontiguousarray(coeffs, dtype=np.int64), np.ascontiguousarray(exps, dtype=np.int64), axes, weights, lengths
    )
    return float(acc), int(raw)


def small_norm_count(tu, wv, alpha, p_thr) -> int:
    """Count pairs whose contracted tensor values all satisfy ``||alpha g|| < P``.

    ``alpha`` may be a float or a ``fractions.Fraction`` (exact path).
    """
    from fractions import Fraction

    if isinstance(alpha, Fraction):
        num, den, a = int(alpha.numerator), int(alpha.denominator), 0.0
    else:
        num, den, a = 0, 0, float(alpha)
    return int(
        _pick(_small_norm_numba, _small_norm_numpy)(
            np.ascontiguousarray(tu, dtype=np.int64), np.ascontiguousarray(wv, dtype=np.int64), num, den, a, float(p_thr)
        )
    )


def shrink_count(c, gammas, z, bounds) -> int:
    return int(
        _pick(_shrink_numba, _shrink_numpy)(
            np.ascontiguousarray(c, dtype=np.float64),
            np.ascontiguousarray(gammas, dtype=np.float64),
            float(z),
            np.ascontiguousarray(bounds, dtype=np.int64),
        )
    )
