"""Finite-volume solver for u_t + div f(u) = g on periodic boxes, and exact
sampled fields used as references."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .flux import FluxModel
from .solution import RANGE_TOL, GridSolution

_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "sinh", "cosh", "minimum", "maximum", "clip", "where")
}
_NAMESPACE.update(pi=np.pi, e=np.e)
_AXES = ("x", "y", "z")


class SolverError(RuntimeError):
    """Raised when the scheme leaves [0, 1] or the step violates the CFL bound."""


def _compile(expr: str, names: tuple):
    code = compile(expr, "<expr>", "eval")
    for n in code.co_names:
        if n not in _NAMESPACE and n not in names:
            raise ValueError(f"unknown name {n!r} in expression {expr!r}")
    return code


def make_source(spec):
    """g(t, X, u) from a spec: None / {"kind": "zero"}, {"kind": "constant", "value": c},
    {"kind": "expression", "expr": "..."} in t, x, y, z, u, or a callable."""
    if spec is None:
        return None, 0.0
    if callable(spec):
        return spec, math.nan
    kind = spec.get("kind")
    if kind is None:
        raise ValueError("source spec missing key 'kind'")
    if kind == "zero":
        return None, 0.0
    if kind == "constant":
        if "value" not in spec:
            raise ValueError("constant source missing key 'value'")
        c = float(spec["value"])
        return (lambda t, X, u: np.full_like(u, c)), abs(c)
    if kind == "expression":
        if "expr" not in spec:
            raise ValueError("expression source missing key 'expr'")
        code = _compile(spec["expr"], ("t", "u") + _AXES)

        def g(t, X, u):
            env = dict(_NAMESPACE, t=t, u=u, **{_AXES[i]: x for i, x in enumerate(X)})
            return np.broadcast_to(eval(code, {"__builtins__": {}}, env), u.shape).astype(float)

        return g, float(spec.get("bound", math.nan))
    raise ValueError(f"unknown source kind {kind!r}")


def make_initial(spec, d: int):
    """u0(X) from {"kind": "constant", "value"}, {"kind": "expression", "expr"} or a callable."""
    if callable(spec):
        return spec
    kind = spec.get("kind")
    if kind is None:
        raise ValueError("initial spec missing key 'kind'")
    if kind == "constant":
        c = float(spec["value"])
        return lambda X: np.full(np.broadcast_shapes(*(x.shape for x in X)), c)
    if kind == "expression":
        code = _compile(spec["expr"], _AXES[:d])

        def u0(X):
            env = dict(_NAMESPACE, **{_AXES[i]: x for i, x in enumerate(X)})
            return np.broadcast_to(eval(code, {"__builtins__": {}}, env), np.broadcast_shapes(*(x.shape for x in X))).astype(float)

        return u0
    raise ValueError(f"unknown initial kind {kind!r}")


@dataclass
class SolverConfig:
    flux: FluxModel
    cells: tuple
    extents: tuple
    T: float
    initial: object
    source: object = None
    cfl: float = 0.45
    origin: tuple | None = None
    output_times: tuple | None = None
    n_out: int = 2
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = self.flux.d
        self.cells = tuple(int(c) for c in np.broadcast_to(self.cells, (d,)))
        self.extents = tuple(float(e) for e in np.broadcast_to(self.extents, (d,)))
        self.origin = tuple(float(o) for o in np.broadcast_to(0.0 if self.origin is None else self.origin, (d,)))
        if not (0 < self.cfl < 1):
            raise ValueError("cfl must lie in (0, 1)")
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if d > 3:
            raise ValueError("solver supports d <= 3")

    @classmethod
    def from_dict(cls, cfg: dict) -> "SolverConfig":
        for key in ("flux", "cells", "T", "initial"):
            if key not in cfg:
                raise ValueError(f"solver config missing key {key!r}")
        flux = cfg["flux"] if isinstance(cfg["flux"], FluxModel) else FluxModel.from_config(cfg["flux"])
        return cls(
            flux=flux,
            cells=cfg["cells"],
            extents=cfg.get("extents", 1.0),
            T=float(cfg["T"]),
            initial=cfg["initial"],
            source=cfg.get("source"),
            cfl=float(cfg.get("cfl", 0.45)),
            origin=cfg.get("origin"),
            output_times=tuple(cfg["output_times"]) if "output_times" in cfg else None,
            n_out=int(cfg.get("n_out", 2)),
        )


def _grid(cfg: SolverConfig):
    dx = cfg.extents[0] / cfg.cells[0]
    axes = [o + (np.arange(n) + 0.5) * dx for o, n in zip(cfg.origin, cfg.cells)]
    return dx, np.meshgrid(*axes, indexing="ij")


def _sweep(u: np.ndarray, axis: int, lam: float, parts) -> np.ndarray:
    pp, pm = parts
    moved = np.ascontiguousarray(np.moveaxis(u, axis, -1))
    lines = moved.reshape(-1, moved.shape[-1])
    new = kernels.eo_sweep(lines, lam, np.ascontiguousarray(pp.x), np.ascontiguousarray(pp.c), np.ascontiguousarray(pm.c))
    return np.moveaxis(np.asarray(new).reshape(moved.shape), -1, axis)


def _midpoint(u, g, t, tau, X):
    half = u + 0.5 * tau * g(t, X, u)
    return u + tau * g(t + 0.5 * tau, X, half)


def _clamp(u: np.ndarray, t: float) -> np.ndarray:
    lo, hi = float(u.min()), float(u.max())
    if lo < -RANGE_TOL or hi > 1 + RANGE_TOL:
        raise SolverError(f"solution left [0, 1] at t={t:.6g} (min {lo:.3e}, max {hi:.3e}); check g and u0")
    return np.clip(u, 0.0, 1.0)


def solve(cfg: SolverConfig) -> GridSolution:
    """Dimension-split Engquist-Osher scheme with Strang source splitting."""
    flux, d = cfg.flux, cfg.flux.d
    dx, X = _grid(cfg)
    u = np.asarray(make_initial(cfg.initial, d)(X), dtype=float)
    u = _clamp(u, 0.0)
    g, _ = make_source(cfg.source)
    parts = [flux.eo_parts(i) for i in range(d)]
    for pp, pm in parts:
        if pm.c.shape != pp.c.shape or not np.array_equal(pm.x, pp.x):
            raise ValueError("EO parts must share breakpoints")
    speed = float(np.max(flux.speed_bound()))
    dt_max = cfg.cfl * dx / speed if speed > 0 else cfg.T or 1.0
    if cfg.output_times is not None:
        outs = np.asarray(sorted(set(float(t) for t in cfg.output_times)))
    else:
        outs = np.linspace(0.0, cfg.T, max(cfg.n_out, 2))
    if outs[0] < 0 or outs[-1] > cfg.T + 1e-12:
        raise ValueError("output times must lie in [0, T]")
    frames, times = [], []
    t, step = 0.0, 0
    for t_out in outs:
        while t < t_out - 1e-14 * max(1.0, t_out):
            dt = min(dt_max, t_out - t)
            if dt * speed / dx > 1:
                raise SolverError(f"CFL violated: dt {dt} exceeds dx/max|f'| = {dx / speed}")
            if g is not None:
                u = _midpoint(u, g, t, 0.5 * dt, X)
            order = range(d) if step % 2 == 0 else range(d - 1, -1, -1)
            for i in order:
                u = _sweep(u, i, dt / dx, parts[i])
            if g is not None:
                u = _midpoint(u, g, t + 0.5 * dt, 0.5 * dt, X)
            u = _clamp(u, t + dt)
            t += dt
            step += 1
        frames.append(u.copy())
        times.append(t_out)
    meta = {"flux": flux.to_config(), "cfl": cfg.cfl, "steps": step}
    if isinstance(cfg.source, dict):
        meta["source"] = cfg.source
    meta.update(cfg.meta)
    return GridSolution(np.stack(frames), np.asarray(times), cfg.extents, cfg.origin, meta)


# -- reference fields ---------------------------------------------------------


def characteristics_1d(u0, x: np.ndarray, t: float, g: float = 0.0) -> np.ndarray:
    """Pre-shock 1-D Burgers solution with constant source g.

    Along characteristics u = u0(x0) + g t and x = x0 + u0(x0) t + g t^2 / 2;
    the foot point x0 is found by bisection (the foot map is increasing
    before shocks form). ``u0`` must accept any real argument.
    """
    x = np.asarray(x, dtype=float)
    lo = x - t - abs(g) * t * t - 1e-9
    hi = x + abs(g) * t * t + 1e-9
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        right = mid + u0(mid) * t + 0.5 * g * t * t > x
        hi = np.where(right, mid, hi)
        lo = np.where(right, lo, mid)
        if np.max(hi - lo) < 1e-15:
            break
    return u0(0.5 * (lo + hi)) + g * t


def characteristics_nd(u0, X, t: float, flux: FluxModel, iters: int = 80) -> np.ndarray:
    """Pre-shock solution of u_t + div f(u) = 0: solve u = u0(X - t f'(u)) by bisection in u."""
    lo = np.zeros(X[0].shape)
    hi = np.ones(X[0].shape)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        sp = flux.deriv(mid, 1)
        G = mid - u0([X[i] - t * sp[..., i] for i in range(flux.d)])
        lo = np.where(G < 0, mid, lo)
        hi = np.where(G < 0, hi, mid)
    return 0.5 * (lo + hi)


def manufactured(kind: str, params: dict | None = None) -> GridSolution:
    """Exact sampled fields on a 1-D periodic grid.

    * ``riemann_rarefaction``: u = clamp((x - x0) / t, 0, 1) (t > 0).
    * ``sine_advect``: u = mean + amp sin(2 pi (x - c t) / L).
    * ``holder_profile``: u = clamp(|x - x0|^gamma, 0, 1), static.
    """
    p = dict(params or {})
    n = int(p.get("cells", 1024))
    if kind == "holder_profile":
        L = float(p.get("extent", 2.0))
        origin = float(p.get("origin", -L / 2))
    else:
        L = float(p.get("extent", 1.0))
        origin = float(p.get("origin", 0.0))
    dx = L / n
    x = origin + (np.arange(n) + 0.5) * dx
    times = np.atleast_1d(np.asarray(p.get("times", [1.0 if kind == "riemann_rarefaction" else 0.0]), dtype=float))
    x0 = float(p.get("x0", 0.0 if kind != "riemann_rarefaction" else origin + L / 4))
    if kind == "riemann_rarefaction":
        if np.any(times <= 0):
            raise ValueError("rarefaction needs t > 0")
        data = np.stack([np.clip((x - x0) / t, 0.0, 1.0) for t in times])
    elif kind == "sine_advect":
        mean, amp, c = float(p.get("mean", 0.5)), float(p.get("amp", 0.25)), float(p.get("speed", 1.0))
        data = np.stack([mean + amp * np.sin(2 * np.pi * (x - c * t) / L) for t in times])
    elif kind == "holder_profile":
        gamma = float(p.get("gamma", 0.5))
        if not (0 < gamma <= 1):
            raise ValueError("gamma must lie in (0, 1]")
        data = np.stack([np.clip(np.abs(x - x0) ** gamma, 0.0, 1.0) for _ in times])
    else:
        raise ValueError(f"unknown manufactured kind {kind!r}")
    return GridSolution(data, times, (L,), (origin,), {"manufactured": kind, **{k: v for k, v in p.items() if k != "times"}})
