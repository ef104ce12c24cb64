"""Numpy implementations of the hot kernels (fallback for the compiled core)."""

import numpy as np

_CHUNK = 1 << 22


def ppoly_eval(x, c, u):
    """Evaluate a scipy-layout piecewise polynomial (breaks x, coeffs c) at u."""
    idx = np.clip(np.searchsorted(x, u, side="right") - 1, 0, c.shape[1] - 1)
    s = u - x[idx]
    val = c[0, idx]
    for m in range(1, c.shape[0]):
        val = val * s + c[m, idx]
    return val


def eo_sweep(u, lam, x, cplus, cminus):
    """One periodic Engquist-Osher update along the last axis of ``u`` (lines, n).

    F_{j+1/2} = f+(u_j) + f-(u_{j+1}); u_j <- u_j - lam (F_{j+1/2} - F_{j-1/2}).
    """
    F = ppoly_eval(x, cplus, u) + np.roll(ppoly_eval(x, cminus, u), -1, axis=-1)
    return u - lam * (F - np.roll(F, 1, axis=-1))


def superlevel_sum(ua, ub, w, levels):
    """sum_k w_k |{s in [0,1] : ua_k + s (ub_k - ua_k) > v}| for each level v."""
    ua, ub, w = (np.ascontiguousarray(a, dtype=float).ravel() for a in (ua, ub, w))
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    out = np.zeros(levels.shape)
    diff = ub - ua
    flat = np.abs(diff) < 1e-300
    safe = np.where(flat, 1.0, diff)
    step = max(1, _CHUNK // max(ua.size, 1))
    for i in range(0, levels.size, step):
        v = levels[i : i + step, None]
        frac = (np.maximum(ub - v, 0.0) - np.maximum(ua - v, 0.0)) / safe
        frac = np.where(flat, (ua > v).astype(float), frac)
        out[i : i + step] = frac @ w
    return out


def _clip_antideriv(s, lo, width):
    t = s - lo
    return np.where(t <= 0, 0.0, np.where(t < width, 0.5 * t * t, width * (t - 0.5 * width)))


def hypograph_sum(ua, ub, w, lo, width):
    """sum_k w_k * mean over the segment of clip(u - lo, 0, width)."""
    ua, ub, w = (np.asarray(a, dtype=float).ravel() for a in (ua, ub, w))
    diff = ub - ua
    flat = np.abs(diff) < 1e-12
    mean = (_clip_antideriv(ub, lo, width) - _clip_antideriv(ua, lo, width)) / np.where(flat, 1.0, diff)
    mid = np.clip(0.5 * (ua + ub) - lo, 0.0, width)
    return float(np.where(flat, mid, mean) @ w)
