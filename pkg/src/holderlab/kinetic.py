"""Kinetic quantities of a sampled solution: the indicator chi, super-level and
hypograph measures, free transport of sets in (x, v), and the transport
estimates that compare hypographs before and after a time T."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .flux import FluxModel
from .solution import GridSolution, window_pieces, window_volume


class ResolutionWarning(UserWarning):
    """The kinetic grid under-resolves the spread of f' across a v-cell."""


@dataclass(frozen=True)
class KineticBox:
    center: tuple
    r: float
    v_lo: float
    omega: float
    shift: float = 0.0

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("r must be positive")
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        object.__setattr__(self, "center", tuple(np.atleast_1d(np.asarray(self.center, dtype=float)).tolist()))


def flux_of(sol: GridSolution) -> FluxModel:
    spec = sol.meta.get("flux") if sol.meta else None
    return FluxModel.from_config(spec) if spec else FluxModel.burgers(sol.d)


def chi(sol: GridSolution, t_index: int, x_cell, v: float) -> int:
    """1 iff 0 < v <= u(t, x) at the given cell."""
    u = sol.slice(t_index)
    idx = tuple(np.atleast_1d(x_cell).tolist())
    if len(idx) != sol.d or any(not (0 <= i < n) for i, n in zip(idx, sol.shape)):
        raise IndexError(f"cell {idx} out of range for grid {sol.shape}")
    return int(0 < v <= u[idx])


def _check_radius(sol: GridSolution, r: float) -> None:
    if r < sol.dx:
        raise ValueError(f"r={r} below the grid step {sol.dx}")
    if 2 * r > min(sol.extents):
        raise ValueError(f"window of radius {r} does not fit the periodic box")


def superlevel_measure(sol: GridSolution, t_index: int, y, r: float, v, norm: str = "ball"):
    """L^d of {z in B_r(y) or Q_r(y) : u(t, z) > v}; ``v`` may be an array."""
    _check_radius(sol, r)
    ua, ub, w = window_pieces(sol.slice(t_index), sol.origin, sol.dx, y, r, norm)
    out = kernels.superlevel_sum(ua, ub, w, np.atleast_1d(np.asarray(v, dtype=float)))
    return float(out[0]) if np.ndim(v) == 0 else out


def hypograph_measure(sol: GridSolution, t_index: int, box: KineticBox) -> float:
    """L^{d+1}(Q_r(x) x [v, v + omega] intersected with the hypograph of u)."""
    _check_radius(sol, box.r)
    ua, ub, w = window_pieces(sol.slice(t_index), sol.origin, sol.dx, box.center, box.r, "cube")
    return float(kernels.hypograph_sum(ua, ub, w, box.v_lo, box.omega))


def mean_value_level(sol: GridSolution, t_index: int, y1, y2, r: float, h: float, norm: str = "ball"):
    """First level v on a grid over (0, 1 - h) with m(y1, v + h) - m(y2, v) > h |window|.

    Returns None when no grid level qualifies.
    """
    if not (0 < h < 1):
        raise ValueError("h must lie in (0, 1)")
    dv = min(sol.dx, h / 64)
    n = max(1, math.ceil((1 - h) / dv))
    levels = (np.arange(n) + 0.5) * (1 - h) / n
    m1 = superlevel_measure(sol, t_index, y1, r, levels + h, norm)
    m2 = superlevel_measure(sol, t_index, y2, r, levels, norm)
    hit = np.nonzero(m1 - m2 > h * window_volume(sol.d, r, norm))[0]
    return float(levels[hit[0]]) if hit.size else None


# -- sets in (x, v) ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KineticSet:
    """Cell fractions of a set on a periodic x-grid times a v-grid.

    ``values`` has shape (nv, n_1, ..., n_d); v-cell k is [v0 + k dv, v0 + (k+1) dv].
    """

    values: np.ndarray
    origin: tuple
    dx: float
    v0: float
    dv: float

    @property
    def d(self) -> int:
        return self.values.ndim - 1

    @property
    def v_centers(self) -> np.ndarray:
        return self.v0 + (np.arange(self.values.shape[0]) + 0.5) * self.dv

    def measure(self) -> float:
        return float(self.values.sum()) * self.dx**self.d * self.dv

    def l1_distance(self, other: "KineticSet") -> float:
        return float(np.abs(self.values - other.values).sum()) * self.dx**self.d * self.dv


def kinetic_indicator(sol: GridSolution, t_index: int, nv: int) -> KineticSet:
    """chi of u(t) on nv uniform v-cells in [0, 1], as cell fractions."""
    u = sol.slice(t_index)
    dv = 1.0 / nv
    lo = np.arange(nv) * dv
    frac = np.clip((u[None, ...] - lo.reshape((-1,) + (1,) * sol.d)) / dv, 0.0, 1.0)
    return KineticSet(frac, sol.origin, sol.dx, 0.0, dv)


def box_set(shape, origin, dx: float, lower, upper, v_range, nv: int, v_span=(0.0, 1.0)) -> KineticSet:
    """Cell fractions of the cuboid prod [lower_i, upper_i] x [v_range] (periodic in x)."""
    d = len(shape)
    origin = np.broadcast_to(np.asarray(origin, dtype=float), (d,))
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (d,))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (d,))
    v0, v1 = v_span
    dv = (v1 - v0) / nv
    vl = v0 + np.arange(nv) * dv
    vf = np.clip((np.minimum(vl + dv, v_range[1]) - np.maximum(vl, v_range[0])) / dv, 0.0, 1.0)
    out = vf.reshape((-1,) + (1,) * d)
    for i in range(d):
        n = shape[i]
        L = n * dx
        left = origin[i] + np.arange(n) * dx
        cover = np.zeros(n)
        # the interval may wrap around the periodic box
        for k in range(math.floor((lower[i] - origin[i]) / L) - 1, math.floor((upper[i] - origin[i]) / L) + 2):
            cover += np.clip(np.minimum(left + dx, upper[i] - k * L) - np.maximum(left, lower[i] - k * L), 0, None)
        shp = [1] * (d + 1)
        shp[i + 1] = n
        out = out * np.minimum(cover / dx, 1.0).reshape(shp)
    return KineticSet(out, tuple(origin), dx, v0, dv)


def _shift_periodic(a: np.ndarray, cells: float, axis: int) -> np.ndarray:
    k = math.floor(cells)
    th = cells - k
    out = (1 - th) * np.roll(a, k, axis=axis)
    if th:
        out += th * np.roll(a, k + 1, axis=axis)
    return out


def free_transport(E: KineticSet, s: float, flux: FluxModel) -> KineticSet:
    """FT(E; s): every v-slice moved by s f'(v) with linear interpolation."""
    if s == 0:
        return E
    if E.dv * flux.second_deriv_bound() * abs(s) > E.dx:
        warnings.warn(
            f"dv * |f''| * |s| = {E.dv * flux.second_deriv_bound() * abs(s):.3g} exceeds dx = {E.dx:.3g}",
            ResolutionWarning,
            stacklevel=2,
        )
    speeds = flux.deriv(E.v_centers, 1)
    out = np.empty_like(E.values)
    for k in range(E.values.shape[0]):
        sl = E.values[k]
        for i in range(E.d):
            sl = _shift_periodic(sl, s * speeds[k, i] / E.dx, axis=i)
        out[k] = sl
    return KineticSet(out, E.origin, E.dx, E.v0, E.dv)


# -- transport estimate -------------------------------------------------------


@dataclass
class TransportCheck:
    lhs: float
    rhs: float
    passed: bool
    tolerance: float

    def row(self):
        return (self.lhs, self.rhs, int(self.passed))


def transport_bound(flux: FluxModel, r: float, omega: float, T: float, g_bound: float) -> float:
    """Source contribution over the projection of the transported cuboid.

    d = 1: ||g|| (2 r T + ||f''|| omega T^2 / 2).
    d > 1: T ||g|| |Q_{r + T omega ||f''|| / 2}|.
    """
    f2 = flux.second_deriv_bound()
    if flux.d == 1:
        return g_bound * (2 * r * T + 0.5 * f2 * omega * T * T)
    return T * g_bound * (2 * (r + 0.5 * T * omega * f2)) ** flux.d


def verify_transport_estimate(
    sol: GridSolution, box: KineticBox, T: float, g_bound: float, t_index: int = 0, flux: FluxModel | None = None
) -> TransportCheck:
    """|L(FT(R;T) & hyp u(t0+T)) - L(R & hyp u(t0))| against the source bound.

    Both measures use the same midpoint rule in v with step
    min(dx, omega/64) and exact per-piece fractions in x.
    """
    flux = flux or flux_of(sol)
    if T < 0:
        raise ValueError("T must be nonnegative")
    if T == 0:
        return TransportCheck(0.0, 0.0, True, 0.0)
    t0 = float(sol.times[t_index])
    try:
        k1 = sol.time_index(t0 + T)
    except ValueError as exc:
        raise ValueError(f"solution does not span [{t0}, {t0 + T}]") from exc
    _check_radius(sol, box.r)
    dv = min(sol.dx, box.omega / 64)
    nv = math.ceil(box.omega / dv)
    levels = box.v_lo + (np.arange(nv) + 0.5) * box.omega / nv
    wv = box.omega / nv
    c = np.asarray(box.center, dtype=float)
    u0, u1 = sol.slice(t_index), sol.slice(k1)
    ua, ub, w = window_pieces(u0, sol.origin, sol.dx, c, box.r, "cube")
    before = float(kernels.superlevel_sum(ua, ub, w, levels).sum()) * wv
    speeds = flux.deriv(levels, 1)
    after = 0.0
    for v, sp in zip(levels, speeds):
        ua, ub, w = window_pieces(u1, sol.origin, sol.dx, c + T * sp, box.r, "cube")
        after += float(kernels.superlevel_sum(ua, ub, w, [v])[0])
    after *= wv
    lhs = abs(after - before)
    rhs = transport_bound(flux, box.r, box.omega, T, g_bound)
    tol = 10 * sol.dx / box.r
    return TransportCheck(lhs, rhs, lhs <= rhs * (1 + tol), tol)
