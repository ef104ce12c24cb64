"""Flux models f : [0, 1] -> R^d and diagnostics of their nonlinearity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline, PPoly

KINDS = ("burgers_family", "polynomial", "tabulated")

# grid-counting resolution for non-polynomial measures
_COUNT_POINTS = 10**6
_ROOT_TOL = 1e-12
_TAB_STEP = 1e-3


def _fd_weights(k: int, offsets: np.ndarray) -> np.ndarray:
    """Finite-difference weights for the k-th derivative on integer offsets."""
    n = len(offsets)
    V = np.vander(offsets.astype(float), n, increasing=True).T
    rhs = np.zeros(n)
    rhs[k] = math.factorial(k)
    return np.linalg.solve(V, rhs)


@dataclass(frozen=True, eq=False)
class FluxModel:
    """Smooth flux with component derivatives up to order ``d + 2``.

    Use the constructors :meth:`burgers`, :meth:`polynomial` and
    :meth:`tabulated` rather than the raw initializer.
    """

    d: int
    kind: str
    components: tuple = ()  # Polynomial per component (polynomial kinds)
    table: np.ndarray | None = None  # (n, d) samples (tabulated kind)
    table_start: float = 0.0
    table_step: float = _TAB_STEP
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # -- constructors -----------------------------------------------------

    @classmethod
    def burgers(cls, d: int) -> "FluxModel":
        if d < 1:
            raise ValueError(f"dimension must be >= 1, got {d}")
        comps = []
        for i in range(1, d + 1):
            coef = np.zeros(i + 2)
            coef[i + 1] = 1.0 / (i + 1)
            comps.append(Polynomial(coef))
        return cls(d=d, kind="burgers_family", components=tuple(comps))

    @classmethod
    def polynomial(cls, components) -> "FluxModel":
        comps = tuple(Polynomial(np.asarray(c, dtype=float)) for c in components)
        if not comps:
            raise ValueError("polynomial flux needs at least one component")
        return cls(d=len(comps), kind="polynomial", components=comps)

    @classmethod
    def tabulated(cls, values, start: float, step: float = _TAB_STEP) -> "FluxModel":
        """Flux sampled on ``start + j * step``; the table must cover [0, 1]
        with enough margin for the difference stencils."""
        table = np.asarray(values, dtype=float)
        if table.ndim == 1:
            table = table[:, None]
        d = table.shape[1]
        margin = (d + 4) // 2 + 2
        stop = start + (table.shape[0] - 1) * step
        if start > -margin * step + 1e-15 or stop < 1 + margin * step - 1e-15:
            raise ValueError(
                f"table covers [{start}, {stop}]; need [{-margin * step}, {1 + margin * step}]"
            )
        table.setflags(write=False)
        return cls(d=d, kind="tabulated", table=table, table_start=start, table_step=step)

    @classmethod
    def from_callable(cls, func, d: int, step: float = _TAB_STEP) -> "FluxModel":
        margin = (d + 4) // 2 + 4
        grid = np.arange(-margin, round(1 / step) + margin + 1) * step
        vals = np.array([np.atleast_1d(func(v)) for v in grid], dtype=float)
        return cls.tabulated(vals.reshape(len(grid), d), start=grid[0], step=step)

    @classmethod
    def from_config(cls, spec: dict) -> "FluxModel":
        try:
            kind = spec["kind"]
        except KeyError:
            raise ValueError("flux spec is missing key 'kind'") from None
        if kind == "burgers_family":
            if "d" not in spec:
                raise ValueError("flux spec is missing key 'd'")
            return cls.burgers(int(spec["d"]))
        if kind == "polynomial":
            if "components" not in spec:
                raise ValueError("flux spec is missing key 'components'")
            return cls.polynomial(spec["components"])
        if kind == "tabulated":
            for key in ("values", "start"):
                if key not in spec:
                    raise ValueError(f"flux spec is missing key '{key}'")
            return cls.tabulated(spec["values"], spec["start"], spec.get("step", _TAB_STEP))
        raise ValueError(f"unknown flux kind {kind!r} (key 'kind')")

    def to_config(self) -> dict:
        if self.kind == "burgers_family":
            return {"kind": self.kind, "d": self.d}
        if self.kind == "polynomial":
            return {"kind": self.kind, "components": [list(map(float, p.coef)) for p in self.components]}
        return {
            "kind": self.kind,
            "start": self.table_start,
            "step": self.table_step,
            "values": self.table.tolist(),
        }

    # -- evaluation -------------------------------------------------------

    @property
    def is_polynomial(self) -> bool:
        return self.kind in ("burgers_family", "polynomial")

    def _poly_deriv(self, k: int) -> tuple:
        key = ("pd", k)
        if key not in self._cache:
            self._cache[key] = tuple(p.deriv(k) if k else p for p in self.components)
        return self._cache[key]

    def _table_deriv(self, k: int) -> np.ndarray:
        key = ("td", k)
        if key not in self._cache:
            if k == 0:
                self._cache[key] = self.table
            else:
                half = (k + 1) // 2 + 1  # order-4 centred stencil
                offs = np.arange(-half, half + 1)
                w = _fd_weights(k, offs)
                n = self.table.shape[0]
                out = np.full_like(self.table, np.nan)
                acc = np.zeros((n - 2 * half, self.d))
                for j, wj in zip(offs, w):
                    acc += wj * self.table[half + j:n - half + j]
                out[half:n - half] = acc / self.table_step**k
                self._cache[key] = out
        return self._cache[key]

    def _eval(self, v, k: int) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.is_polynomial:
            return np.stack([p(v) for p in self._poly_deriv(k)], axis=-1)
        if k == 0:
            key = "spline"
            if key not in self._cache:
                grid = self.table_start + self.table_step * np.arange(self.table.shape[0])
                self._cache[key] = CubicSpline(grid, self.table, axis=0)
            return self._cache[key](v)
        tab = self._table_deriv(k)
        pos = (v - self.table_start) / self.table_step
        j = np.clip(np.floor(pos).astype(int), 0, tab.shape[0] - 2)
        t = (pos - j)[..., None]
        return (1 - t) * tab[j] + t * tab[j + 1]

    def value(self, v) -> np.ndarray:
        """f(v); trailing axis indexes components."""
        return self._eval(v, 0)

    def deriv(self, v, k: int) -> np.ndarray:
        """k-th derivative, vectorized over ``v``; no range checks."""
        return self._eval(v, k)

    def speed_bound(self) -> np.ndarray:
        """Per-component max |f_i'| over [0, 1]."""
        if "speed" not in self._cache:
            grid = np.linspace(0.0, 1.0, 4001)
            self._cache["speed"] = np.abs(self.deriv(grid, 1)).max(axis=0)
        return self._cache["speed"]

    def second_deriv_bound(self) -> float:
        if "f2" not in self._cache:
            grid = np.linspace(0.0, 1.0, 4001)
            self._cache["f2"] = float(np.linalg.norm(self.deriv(grid, 2), axis=-1).max())
        return self._cache["f2"]

    def eo_parts(self, i: int) -> tuple[PPoly, PPoly]:
        """Engquist-Osher split of component ``i``: (f_i^+, f_i^-) with
        f_i = f_i^+ + f_i^-, f_i^+ nondecreasing and f_i^- nonincreasing."""
        key = ("eo", i)
        if key in self._cache:
            return self._cache[key]
        if self.is_polynomial:
            p = self.components[i]
            dp = p.deriv()
            bps = [0.0, 1.0]
            if dp.degree() > 0:
                for r in dp.roots():
                    if abs(r.imag) < 1e-12 and 0.0 < r.real < 1.0:
                        bps.append(float(r.real))
            bps = np.unique(bps)
            deg = max(p.degree(), 0)
            cp = np.zeros((deg + 1, len(bps) - 1))
            cm = np.zeros_like(cp)
            acc_p, acc_m = float(p(0.0)), 0.0
            for m in range(len(bps) - 1):
                a, b = bps[m], bps[m + 1]
                local = np.zeros(deg + 1)
                # re-centre p at the left breakpoint
                shifted = p(Polynomial([a, 1.0]))
                local[: len(shifted.coef)] = shifted.coef
                local[0] = 0.0
                rising = dp(0.5 * (a + b)) >= 0
                tgt, other = (cp, cm) if rising else (cm, cp)
                tgt[:, m] = local[::-1]
                tgt[-1, m] = acc_p if rising else acc_m
                other[-1, m] = acc_m if rising else acc_p
                inc = float(p(b) - p(a))
                if rising:
                    acc_p += inc
                else:
                    acc_m += inc
            parts = (PPoly(cp, bps), PPoly(cm, bps))
        else:
            grid = np.linspace(0.0, 1.0, 2001)
            dv = self.deriv(grid, 1)[:, i]
            pos = np.concatenate([[0.0], np.cumsum(0.5 * (np.maximum(dv[1:], 0) + np.maximum(dv[:-1], 0)))])
            neg = np.concatenate([[0.0], np.cumsum(0.5 * (np.minimum(dv[1:], 0) + np.minimum(dv[:-1], 0)))])
            step = grid[1] - grid[0]
            f0 = float(self.value(0.0)[i])
            parts = (CubicSpline(grid, f0 + pos * step), CubicSpline(grid, neg * step))
        self._cache[key] = parts
        return parts


def _check_v(v: float) -> None:
    if not (0.0 <= v <= 1.0):
        raise ValueError(f"v={v} outside the flux domain [0, 1]")


def eval_deriv(flux: FluxModel, v: float, k: int) -> np.ndarray:
    """The k-th derivative f^{(k)}(v) for 1 <= k <= d + 2."""
    if not (1 <= k <= flux.d + 2):
        raise ValueError(f"derivative order {k} outside 1..{flux.d + 2}")
    _check_v(v)
    return flux.deriv(float(v), k)


# -- nonlinearity ---------------------------------------------------------


def _symbol_poly(flux: FluxModel, tau: float, xi: np.ndarray) -> Polynomial:
    p = Polynomial([tau])
    for xi_i, comp in zip(xi, flux._poly_deriv(1)):
        p = p + xi_i * comp
    return p


def _sublevel_components(p: Polynomial, delta: float) -> np.ndarray:
    """Connected components (a, b) of {v in R : |p(v)| < delta} meeting [0, 1].

    Unbounded components (constant p) are returned as (-inf, inf).
    """
    # negligible leading coefficients move p by < 1e-14 on [0, 1] but send roots to infinity
    p = p.trim(1e-14 * float(np.max(np.abs(p.coef))))
    if p.degree() < 1 or np.all(p.coef[1:] == 0):
        return np.array([[-np.inf, np.inf]]) if abs(p.coef[0]) < delta else np.empty((0, 2))
    cuts = []
    for shift in (-delta, delta):
        q = p - shift
        dq = q.deriv()
        for r in q.roots():
            if abs(r.imag) > 1e-7:
                continue
            x = float(r.real)
            for _ in range(3):
                slope = dq(x)
                if slope == 0:
                    break
                step = q(x) / slope
                if abs(step) > 1e-6:
                    break
                x -= step
            cuts.append(x)
    cuts = np.unique(cuts)
    if cuts.size == 0:
        return np.empty((0, 2))
    ends = np.concatenate([[cuts[0] - 1.0], cuts, [cuts[-1] + 1.0]])
    mids = 0.5 * (ends[:-1] + ends[1:])
    inside = np.abs(p(mids)) < delta
    # polynomial is unbounded, so the outer pieces are never inside
    inside[0] = inside[-1] = False
    comps = []
    k = 0
    while k < len(inside):
        if inside[k]:
            j = k
            while j + 1 < len(inside) and inside[j + 1]:
                j += 1
            a, b = cuts[k - 1], cuts[j]
            if b > 0.0 and a < 1.0:
                comps.append((a, b))
            k = j + 1
        else:
            k += 1
    return np.array(comps).reshape(-1, 2)


def _sublevel_length_poly(p: Polynomial, delta: float) -> float:
    """L^1 {v in [0, 1] : |p(v)| < delta} by root isolation."""
    comps = _sublevel_components(p, delta)
    if comps.size == 0:
        return 0.0
    lo = np.clip(comps[:, 0], 0.0, 1.0)
    hi = np.clip(comps[:, 1], 0.0, 1.0)
    return float(np.sum(hi - lo))


def _unfolded_length(comps: np.ndarray) -> float:
    total = 0.0
    for a, b in comps:
        inside = min(b, 1.0) - max(a, 0.0)
        cut_lo, cut_hi = a < 0.0, b > 1.0
        if cut_lo != cut_hi:
            inside = min(b - a, 2.0 * inside)
        total += inside
    return total


def nonlinearity_measure(flux: FluxModel, tau: float, xi, delta: float) -> float:
    """Lebesgue measure of {v in [0,1] : |tau + f'(v).xi| < delta}."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (flux.d,):
        raise ValueError(f"xi must have shape ({flux.d},)")
    norm = math.sqrt(tau * tau + float(xi @ xi))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"direction (tau, xi) must be a unit vector, |(tau, xi)| = {norm}")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if flux.is_polynomial:
        return _sublevel_length_poly(_symbol_poly(flux, tau, xi), delta)
    grid = (np.arange(_COUNT_POINTS) + 0.5) / _COUNT_POINTS
    vals = tau + flux.deriv(grid, 1) @ xi
    return float(np.count_nonzero(np.abs(vals) < delta)) / _COUNT_POINTS


@dataclass
class NonlinearityReport:
    directions: np.ndarray  # (n, d + 1) unit rows (tau, xi)
    deltas: np.ndarray
    measures: np.ndarray  # (n, len(deltas))
    slopes: np.ndarray  # per direction, nan where inconclusive
    alpha: float
    C: float
    inconclusive: bool = False
    worst_direction: np.ndarray | None = None

    def rows(self):
        for dirn, slope, meas in zip(self.directions, self.slopes, self.measures):
            yield dirn, slope, meas


def sample_directions(d: int, n_random: int, seed: int = 0) -> np.ndarray:
    """Signed coordinate axes of R^{d+1} followed by random unit vectors."""
    rng = np.random.default_rng(seed)
    axes = np.vstack([np.eye(d + 1), -np.eye(d + 1)])
    g = rng.standard_normal((n_random, d + 1))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return np.vstack([axes, g])


def fit_alpha(flux: FluxModel, n_directions: int | None = None, delta_grid=None, seed: int = 0) -> NonlinearityReport:
    """Worst-direction log-log slope of the sub-level measure against delta."""
    d = flux.d
    if n_directions is None:
        n_directions = 16 * d
    if n_directions < 8 * d:
        raise ValueError(f"need at least {8 * d} directions, got {n_directions}")
    deltas = np.logspace(-4, -1, 16) if delta_grid is None else np.asarray(delta_grid, dtype=float)
    if np.any(deltas <= 0) or np.log10(deltas.max() / deltas.min()) < 2 - 1e-12:
        raise ValueError("delta grid must be positive and span at least two decades")
    dirs = sample_directions(d, n_directions, seed)
    meas = np.array([[nonlinearity_measure(flux, t[0], t[1:], dl) for dl in deltas] for t in dirs])
    if flux.is_polynomial:
        # A component cut by one end of [0, 1] loses up to half its length
        # once delta passes the root's distance to that end. The exponent is
        # unchanged but the log-log curve bends inside a finite window, so
        # such components are counted as min(full, 2 * inside).
        fit_on = np.empty_like(meas)
        for n, t in enumerate(dirs):
            p = _symbol_poly(flux, t[0], t[1:])
            for k, dl in enumerate(deltas):
                fit_on[n, k] = _unfolded_length(_sublevel_components(p, dl))
    else:
        fit_on = meas
    logd = np.log(deltas)
    slopes = np.full(len(dirs), np.nan)
    for n, (m, y) in enumerate(zip(meas, fit_on)):
        # measures pinned at 0 or 1 carry no exponent information
        ok = (m > 0) & (m < 1.0 - 1e-12) & (y > 0)
        if np.count_nonzero(ok) < 2:
            continue
        slopes[n] = np.polyfit(logd[ok], np.log(y[ok]), 1)[0]
    if np.all(np.isnan(slopes)):
        return NonlinearityReport(dirs, deltas, meas, slopes, float("nan"), float("nan"), inconclusive=True)
    worst = int(np.nanargmin(slopes))
    alpha = float(min(max(slopes[worst], 1e-12), 1.0))
    C = float(np.max(meas / deltas[None, :] ** alpha))
    return NonlinearityReport(dirs, deltas, meas, slopes, alpha, C, worst_direction=dirs[worst])


# -- nondegeneracy --------------------------------------------------------


def wronskian(flux: FluxModel, v: float) -> np.ndarray:
    """Almost-Wronskian: row l holds f^{(1+l)}(v) / l!, columns index components."""
    d = flux.d
    return np.array([flux.deriv(float(v), 1 + l) / math.factorial(l) for l in range(1, d + 1)])


def spanning_check(flux: FluxModel, v: float, tol: float = 1e-8) -> tuple[bool, float]:
    """Whether f''(v), ..., f^{(d+1)}(v) span R^d, with the smallest singular value.

    The extended family (1, f'(v)), (0, f''(v)), ... must agree; a mismatch
    means the derivative evaluation is inconsistent and raises.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    W = wronskian(flux, v)
    smin = float(np.linalg.svd(W, compute_uv=False).min())
    ext = np.zeros((flux.d + 1, flux.d + 1))
    ext[0, 0] = 1.0
    ext[0, 1:] = flux.deriv(float(v), 1)
    ext[1:, 1:] = W
    det_w, det_ext = np.linalg.det(W), np.linalg.det(ext)
    if abs(det_w - det_ext) > 1e-9 * max(1.0, abs(det_w)):
        raise ArithmeticError(f"spanning tests disagree at v={v}: det {det_w} vs {det_ext}")
    return smin > tol, smin
