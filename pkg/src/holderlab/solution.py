"""Sampled solutions on periodic grids, their file format, and window quadrature.

Values live at cell centres ``origin + (j + 1/2) dx``. Level-set measures use
the linear reconstruction between centres; window averages use the
piecewise-constant cell field.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"HLSOL\x00\x01\x00"
RANGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GridSolution:
    data: np.ndarray  # (nt, n_1, ..., n_d)
    times: np.ndarray
    extents: tuple
    origin: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        if data.ndim < 2:
            raise ValueError("data must have shape (nt, n_1, ..., n_d)")
        d = data.ndim - 1
        extents = tuple(float(e) for e in np.broadcast_to(self.extents, (d,)))
        origin = tuple(float(o) for o in np.broadcast_to(0.0 if self.origin is None else self.origin, (d,)))
        if times.shape != (data.shape[0],):
            raise ValueError(f"{data.shape[0]} slices but {times.size} time samples")
        steps = [L / n for L, n in zip(extents, data.shape[1:])]
        if max(steps) - min(steps) > 1e-12 * max(steps):
            raise ValueError(f"non-uniform spatial step {steps}")
        lo, hi = float(data.min()), float(data.max())
        if lo < -RANGE_TOL or hi > 1 + RANGE_TOL:
            raise ValueError(f"values leave [0, 1]: min {lo}, max {hi}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "origin", origin)

    @property
    def d(self) -> int:
        return self.data.ndim - 1

    @property
    def shape(self) -> tuple:
        return self.data.shape[1:]

    @property
    def nt(self) -> int:
        return self.data.shape[0]

    @property
    def dx(self) -> float:
        return self.extents[0] / self.shape[0]

    @property
    def dt(self) -> float:
        return float(np.diff(self.times).mean()) if self.nt > 1 else math.nan

    def centers(self, axis: int = 0) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.shape[axis]) + 0.5) * self.dx

    def slice(self, k: int) -> np.ndarray:
        if not (-self.nt <= k < self.nt):
            raise IndexError(f"time index {k} out of range for {self.nt} slices")
        return self.data[k]

    def time_index(self, t: float, tol: float = 1e-9) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tol * max(1.0, abs(t)):
            raise ValueError(f"no time slice at t={t} (nearest {self.times[k]})")
        return k

    # -- persistence ------------------------------------------------------

    def save(self, path) -> Path:
        """Binary file plus a JSON sidecar ``<path>.json``."""
        path = Path(path)
        d, nt = self.d, self.nt
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<II", d, nt))
            fh.write(struct.pack(f"<{d}Q", *self.shape))
            fh.write(struct.pack(f"<{d}d", *self.origin))
            fh.write(struct.pack(f"<{d}d", *self.extents))
            fh.write(struct.pack("<d", self.dx))
            fh.write(np.ascontiguousarray(self.times, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.data, dtype="<f8").tobytes())
        manifest = {
            "d": d,
            "shape": list(self.shape),
            "origin": list(self.origin),
            "extents": list(self.extents),
            "dx": self.dx,
            "times": self.times.tolist(),
            "meta": self.meta,
        }
        Path(str(path) + ".json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
        return path

    @classmethod
    def load(cls, path) -> "GridSolution":
        path = Path(path)
        raw = path.read_bytes()
        if raw[:8] != MAGIC:
            raise ValueError(f"{path}: not a solution file")
        pos = 8
        d, nt = struct.unpack_from("<II", raw, pos)
        pos += 8
        shape = struct.unpack_from(f"<{d}Q", raw, pos)
        pos += 8 * d
        origin = struct.unpack_from(f"<{d}d", raw, pos)
        pos += 8 * d
        extents = struct.unpack_from(f"<{d}d", raw, pos)
        pos += 8 * d + 8  # dx is implied by extents / shape
        times = np.frombuffer(raw, "<f8", nt, pos)
        pos += 8 * nt
        count = nt * math.prod(shape)
        if len(raw) - pos != 8 * count:
            raise ValueError(f"{path}: truncated data block")
        data = np.frombuffer(raw, "<f8", count, pos).reshape((nt, *shape))
        meta = {}
        side = Path(str(path) + ".json")
        if side.exists():
            meta = json.loads(side.read_text()).get("meta", {})
        return cls(data.copy(), times.copy(), extents, origin, meta)


# -- window quadrature ------------------------------------------------------


def line_segments(vals: np.ndarray, origin: float, dx: float, a: float, b: float):
    """Linear-reconstruction pieces of periodic lines (last axis) over [a, b].

    Returns the end values ``ua, ub`` (shape ``vals.shape[:-1] + (m,)``) and
    the piece lengths (m,).
    """
    n = vals.shape[-1]
    ja = math.floor((a - origin) / dx - 0.5)
    jb = math.ceil((b - origin) / dx - 0.5)
    if jb == ja:
        jb += 1
    j = np.arange(ja, jb + 1)
    xs = origin + (j + 0.5) * dx
    v = vals[..., j % n]
    x0, x1 = xs[:-1], xs[1:]
    lo, hi = np.maximum(x0, a), np.minimum(x1, b)
    va, vb = v[..., :-1], v[..., 1:]
    ua = va + (lo - x0) / dx * (vb - va)
    ub = va + (hi - x0) / dx * (vb - va)
    return ua, ub, np.maximum(hi - lo, 0.0)


def _cell_overlaps(origin: float, dx: float, n: int, a: float, b: float):
    """Periodic cell indices meeting [a, b] and their overlap lengths."""
    ja = math.floor((a - origin) / dx)
    jb = math.floor((b - origin) / dx)
    j = np.arange(ja, jb + 1)
    left = origin + j * dx
    w = np.minimum(left + dx, b) - np.maximum(left, a)
    keep = w > 0
    return j[keep] % n, w[keep]


def ball_volume(d: int, r: float) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * r**d


def window_volume(d: int, r: float, geometry: str) -> float:
    return (2 * r) ** d if geometry == "cube" else ball_volume(d, r)


def window_pieces(u: np.ndarray, origin, dx: float, center, r: float, geometry: str = "cube"):
    """Weighted linear pieces covering a cube or ball window of a periodic field.

    The last axis is integrated exactly on the linear reconstruction; the
    remaining axes by cell overlap (cube) or cell-centre membership (ball).
    Returns flat arrays ``ua, ub, w`` where ``w`` is the piece measure.
    """
    d = u.ndim
    center = np.broadcast_to(np.asarray(center, dtype=float), (d,))
    origin = np.broadcast_to(np.asarray(origin, dtype=float), (d,))
    if geometry not in ("cube", "ball"):
        raise ValueError(f"unknown geometry {geometry!r}")
    if d == 1:
        ua, ub, ln = line_segments(u, origin[0], dx, center[0] - r, center[0] + r)
        return ua, ub, ln
    if geometry == "cube":
        idx, wts = zip(*(_cell_overlaps(origin[i], dx, u.shape[i], center[i] - r, center[i] + r) for i in range(d - 1)))
        lines = u[np.ix_(*idx)].reshape(-1, u.shape[-1])
        weight = np.ones(1)
        for w in wts:
            weight = np.multiply.outer(weight, w).ravel()
        ua, ub, ln = line_segments(lines, origin[-1], dx, center[-1] - r, center[-1] + r)
        return ua.ravel(), ub.ravel(), (weight[:, None] * ln[None, :]).ravel()
    # ball: one chord per transverse cell whose centre lies inside
    rngs = []
    for i in range(d - 1):
        ja = math.floor((center[i] - r - origin[i]) / dx - 0.5)
        jb = math.ceil((center[i] + r - origin[i]) / dx - 0.5)
        rngs.append(np.arange(ja, jb + 1))
    pieces = ([], [], [])
    cell = dx ** (d - 1)
    for combo in np.array(np.meshgrid(*rngs, indexing="ij")).reshape(d - 1, -1).T:
        xc = origin[:-1] + (combo + 0.5) * dx
        rho2 = float(np.sum((xc - center[:-1]) ** 2))
        if rho2 > r * r:
            continue
        half = math.sqrt(r * r - rho2)
        line = u[tuple(int(c) % u.shape[i] for i, c in enumerate(combo))]
        ua, ub, ln = line_segments(line, origin[-1], dx, center[-1] - half, center[-1] + half)
        pieces[0].append(ua)
        pieces[1].append(ub)
        pieces[2].append(ln * cell)
    if not pieces[0]:
        return np.zeros(0), np.zeros(0), np.zeros(0)
    return tuple(np.concatenate(p) for p in pieces)


def cell_window_average(vals: np.ndarray, dx: float, r: float, axis: int = -1) -> np.ndarray:
    """Average of the piecewise-constant cell field over [p_i - r, p_i + r] at every
    vertex p_i = origin + i dx, computed exactly from the periodic cumulative sum."""
    vals = np.moveaxis(np.asarray(vals, dtype=float), axis, -1)
    n = vals.shape[-1]
    cum = np.concatenate([np.zeros(vals.shape[:-1] + (1,)), np.cumsum(vals, axis=-1)], axis=-1) * dx
    total = cum[..., -1:]

    def prim(s):
        # integral from vertex 0 to position s (in cells), periodic extension
        k = np.floor(s).astype(int)
        wraps, km = np.divmod(k, n)
        return cum[..., km] + wraps * total + (s - k) * dx * vals[..., km]

    i = np.arange(n, dtype=float)
    out = (prim(i + r / dx) - prim(i - r / dx)) / (2 * r)
    return np.moveaxis(out, -1, axis)
