"""Oscillation functional h_r, exponent fits, Hoelder constants and the
exponent bootstrap."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .solution import GridSolution, cell_window_average

RESOLUTION_FACTOR = 4.0
HOLDER_CAP_FACTOR = 10.0


# -- oscillation functional ---------------------------------------------------


def _node_offsets(sol: GridSolution, x, r: float, axis: int):
    """Grid nodes (cell vertices) along ``axis`` within distance r of x[axis].

    Returns periodic vertex indices and the signed offsets from x.
    """
    o, dx, n = sol.origin[axis], sol.dx, sol.shape[axis]
    lo = math.ceil((x[axis] - r - o) / dx - 1e-9)
    hi = math.floor((x[axis] + r - o) / dx + 1e-9)
    j = np.arange(lo, hi + 1)
    return j % n, o + j * dx - x[axis]


def _cube_averages(sol: GridSolution, u: np.ndarray, x, r: float) -> np.ndarray:
    """Cube averages of the cell values at the vertices of the closed cube Q_r(x)."""
    avg = u
    for axis in range(sol.d):
        idx, _ = _node_offsets(sol, x, r, axis)
        avg = np.take(cell_window_average(avg, sol.dx, r, axis=axis), idx, axis=axis)
    return avg


def _ball_kernel(d: int, r: float, dx: float, sub: int = 8) -> np.ndarray:
    """Fraction of each cell covered by the ball of radius r about a vertex.

    Entry j (per axis) belongs to the cell [(j - m) dx, (j - m + 1) dx].
    """
    m = math.ceil(r / dx)
    offs = (np.arange(sub) + 0.5) / sub * dx
    fine = ((np.arange(-m, m) * dx)[:, None] + offs[None, :]).ravel()
    grids = np.meshgrid(*([fine] * d), indexing="ij")
    inside = (sum(g * g for g in grids) <= r * r).astype(float)
    for axis in range(d):
        shp = list(inside.shape)
        shp[axis : axis + 1] = [2 * m, sub]
        inside = inside.reshape(shp).mean(axis=axis + 1)
    return inside


@lru_cache(maxsize=32)
def _ball_average_field(sol: GridSolution, t_index: int, r: float) -> np.ndarray:
    """Ball averages at every vertex, by periodic FFT correlation with the coverage kernel."""
    k = _ball_kernel(sol.d, r, sol.dx)
    k /= k.sum()
    m = k.shape[0] // 2
    K = np.zeros(sol.shape)
    idx = np.meshgrid(*[(np.arange(2 * m) - m) % n for n in sol.shape], indexing="ij")
    np.add.at(K, tuple(idx), k)
    u = sol.slice(t_index)
    axes = tuple(range(sol.d))
    return np.fft.irfftn(np.fft.rfftn(u) * np.conj(np.fft.rfftn(K)), s=sol.shape, axes=axes)


def _ball_averages(sol: GridSolution, t_index: int, x, r: float) -> np.ndarray:
    """Ball averages at the vertices inside the closed ball B_r(x)."""
    avg = _ball_average_field(sol, t_index % sol.nt, float(r))
    grids = [_node_offsets(sol, x, r, a) for a in range(sol.d)]
    mesh_idx = np.meshgrid(*[g[0] for g in grids], indexing="ij")
    mesh_off = np.meshgrid(*[g[1] for g in grids], indexing="ij")
    inside = sum(o * o for o in mesh_off) <= r * r * (1 + 1e-12)
    return avg[tuple(mi[inside] for mi in mesh_idx)]


def h_r(sol: GridSolution, t_index: int, x, r: float, geometry: str = "ball") -> float:
    """Half the largest difference of r-averages over centres in the closed window around x."""
    if r < 2 * sol.dx:
        raise ValueError(f"r={r} below 2 dx = {2 * sol.dx}")
    if 4 * r > min(sol.extents):
        raise ValueError(f"2r-neighbourhood of radius {r} does not fit the periodic box")
    x = np.broadcast_to(np.asarray(x, dtype=float), (sol.d,))
    if geometry not in ("ball", "cube"):
        raise ValueError(f"unknown geometry {geometry!r}")
    u = sol.slice(t_index)
    # in d = 1 balls and cubes coincide
    if geometry == "cube" or sol.d == 1:
        avg = _cube_averages(sol, u, x, r)
    else:
        avg = _ball_averages(sol, t_index, x, r)
    return 0.5 * float(np.max(avg) - np.min(avg))


@dataclass
class OscillationProfile:
    t: float
    center: tuple
    radii: np.ndarray
    values: np.ndarray
    gamma: float
    C: float
    geometry: str
    used: np.ndarray
    inconclusive: bool = False

    def rows(self):
        return [(float(r), float(h), self.gamma, self.C) for r, h in zip(self.radii, self.values)]


def fit_power_law(radii, values, floor: float = 0.0):
    """Least-squares fit of log h = log C + gamma log r over values >= floor."""
    radii, values = np.asarray(radii, dtype=float), np.asarray(values, dtype=float)
    used = values >= max(floor, np.finfo(float).tiny)
    if used.sum() < 3:
        return math.nan, math.nan, used
    slope, icpt = np.polyfit(np.log(radii[used]), np.log(values[used]), 1)
    return float(slope), float(math.exp(icpt)), used


def oscillation_profile(sol: GridSolution, t_index: int, x, radii, geometry: str = "ball") -> OscillationProfile:
    radii = np.asarray(radii, dtype=float)
    if radii.size < 4:
        raise ValueError("need at least 4 radii")
    if np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be strictly decreasing")
    if math.log10(radii[0] / radii[-1]) < 1.5 - 1e-9:
        raise ValueError("radii must span at least 1.5 decades")
    vals = np.array([h_r(sol, t_index, x, r, geometry) for r in radii])
    gamma, C, used = fit_power_law(radii, vals, RESOLUTION_FACTOR * sol.dx)
    return OscillationProfile(
        t=float(sol.times[t_index]),
        center=tuple(np.atleast_1d(x).tolist()),
        radii=radii,
        values=vals,
        gamma=gamma,
        C=C,
        geometry=geometry,
        used=used,
        inconclusive=math.isnan(gamma),
    )


def cusp_h_r(gamma: float, r: float) -> float:
    """h_r of |x|^gamma at the cusp: (2^gamma - 1) r^gamma / (2 (1 + gamma))."""
    return 0.5 * (2**gamma - 1) * r**gamma / (1 + gamma)


# -- Hoelder constants ---------------------------------------------------------


def holder_constant(C: float, gamma: float) -> float:
    """2 C (1 + 2 / (2^gamma - 1)): Hoelder constant implied by h_r <= C r^gamma."""
    if not (0 < gamma < 1):
        raise ValueError("gamma must lie in (0, 1)")
    return 2 * C * (1 + 2 / (2**gamma - 1))


def holder_constant_cap(C: float) -> float:
    """The simplified cap 10 C used for gamma in [1/3, 1/2)."""
    return HOLDER_CAP_FACTOR * C


def empirical_holder(sol: GridSolution, t_index: int, gamma: float, sample_pairs: int = 4096, seed: int = 0) -> float:
    """max |u(x) - u(y)| / |x - y|^gamma over pairs at dyadic separations along each axis.

    All pairs are used while that stays below ~4e6 evaluations; otherwise
    ``sample_pairs`` random pairs are spread evenly over the scales.
    """
    if not (0 < gamma <= 1):
        raise ValueError("gamma must lie in (0, 1]")
    if sample_pairs < 1000:
        raise ValueError("need at least 1000 pairs")
    u = sol.slice(t_index)
    rng = np.random.default_rng(seed)
    best = 0.0
    for axis in range(sol.d):
        n = sol.shape[axis]
        seps = 2 ** np.arange(int(math.log2(max(n // 2, 1))) + 1)
        exhaustive = u.size * len(seps) <= 4_000_000
        per_scale = math.ceil(sample_pairs / (len(seps) * sol.d))
        flat = np.moveaxis(u, axis, -1).reshape(-1, n)
        for s in seps:
            dist = s * sol.dx
            if exhaustive:
                diff = np.abs(np.roll(flat, -s, axis=-1) - flat)
            else:
                li = rng.integers(0, flat.shape[0], per_scale)
                ci = rng.integers(0, n, per_scale)
                diff = np.abs(flat[li, (ci + s) % n] - flat[li, ci])
            best = max(best, float(diff.max()) / dist**gamma)
    return best


# -- bootstrap --------------------------------------------------------------------


def bootstrap_map(gamma: float, d: int, alpha: float) -> float:
    """(1 + 2 gamma) / (2 (1 + d / alpha))."""
    if not (0 <= gamma < 1):
        raise ValueError("gamma must lie in [0, 1)")
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    return (1 + 2 * gamma) / (2 * (1 + d / alpha))


@dataclass
class ExponentSchedule:
    d: int
    alpha: float
    variant: str
    gammas: list
    constants: list
    limit: float
    g_norm: float
    converged: bool
    first_index: int = 0
    notes: dict = field(default_factory=dict)

    def rows(self):
        return [(self.first_index + n, g, c) for n, (g, c) in enumerate(zip(self.gammas, self.constants))]


VARIANTS = ("alpha_nonlinear", "nondegenerate", "burgers_1d")


def bootstrap_iterate(
    d: int,
    alpha: float,
    tol: float = 1e-13,
    variant: str = "alpha_nonlinear",
    g_norm: float = 1.0,
    max_iter: int = 200,
    K: float = 1.0,
) -> ExponentSchedule:
    """Iterate the exponent map from its starting exponent until steps fall below tol.

    * alpha_nonlinear: gamma_0 = 1/(2(1 + d/alpha)), map (1 + 2g)/(2(1 + d/alpha)),
      limit alpha/(2d); constants C_{n+1} = K C_n^{1/(1 + d/alpha)} (boundedness only).
    * nondegenerate: d/alpha replaced by d, limit 1/(2d).
    * burgers_1d: gamma_1 = 1/3, map (1 + g)/3, limit 1/2; constants
      C_1 = (24 |g|)^{1/3}, C_{n+1} = 10 (2 C_n |g|)^{1/3}.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if g_norm < 0:
        raise ValueError("g_norm must be nonnegative")
    if variant == "burgers_1d":
        step = lambda g: (1 + g) / 3  # noqa: E731
        gam, limit, first = 1 / 3, 0.5, 1
        C = (24 * g_norm) ** (1 / 3)
        cstep = lambda c: 10 * (2 * c * g_norm) ** (1 / 3)  # noqa: E731
    else:
        if not (0 < alpha <= 1):
            raise ValueError("alpha must lie in (0, 1]")
        ratio = d / alpha if variant == "alpha_nonlinear" else float(d)
        step = lambda g: (1 + 2 * g) / (2 * (1 + ratio))  # noqa: E731
        gam, limit, first = 1 / (2 * (1 + ratio)), 1 / (2 * ratio), 0
        C = K
        cstep = lambda c: K * c ** (1 / (1 + ratio))  # noqa: E731
    gammas, consts = [gam], [C]
    converged = False
    for _ in range(max_iter):
        nxt = step(gam)
        C = cstep(C)
        gammas.append(nxt)
        consts.append(C)
        done = abs(nxt - gam) < tol
        gam = nxt
        if done:
            converged = True
            break
    return ExponentSchedule(d, alpha, variant, gammas, consts, limit, g_norm, converged, first)


@dataclass
class TheoryConstants:
    C1: float
    limit_holder: float
    compact_holder: float
    C_fixed_point: float
    C_uniform_bound: float


def burgers_constants(g_norm: float) -> TheoryConstants:
    """1-D constants: C_1 = (24|g|)^{1/3}, final 1/2-Hoelder constant 10 (2000|g|)^{1/2}
    (equivalently 100 (20|g|)^{1/2}), fixed point (2000|g|)^{1/2} of the C_n recursion and its
    uniform bound 10 sqrt(20) (1 v C_1)(1 v |g|^{1/2})."""
    if g_norm < 0:
        raise ValueError("g_norm must be nonnegative")
    C1 = (24 * g_norm) ** (1 / 3)
    return TheoryConstants(
        C1=C1,
        limit_holder=10 * math.sqrt(2000 * g_norm),
        compact_holder=100 * math.sqrt(20 * g_norm),
        C_fixed_point=math.sqrt(2000 * g_norm),
        C_uniform_bound=10 * math.sqrt(20) * max(1.0, C1) * max(1.0, math.sqrt(g_norm)),
    )
