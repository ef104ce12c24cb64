"""End-to-end verification suite behind ``holderlab verify-all``.

Each check returns a CheckResult; the suite never raises on a failed check.
"""

from __future__ import annotations

import math
import time
import traceback
from dataclasses import dataclass
from fractions import Fraction as F

import numpy as np

from .decomposition import build_H, decompose_improved, directional_gain, invert_H, norm_bound_table
from .flux import FluxModel, fit_alpha
from .kinetic import KineticBox, KineticSet, free_transport, verify_transport_estimate
from .regularity import VARIANTS, bootstrap_iterate, h_r, oscillation_profile
from .solution import GridSolution
from .solver import SolverConfig, characteristics_1d, characteristics_nd, manufactured, solve

DYADIC = [2.0**-k for k in range(13)]


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float = math.inf

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] criterion {self.criterion} {self.name}: {self.detail} ({self.seconds:.2f}s / {self.budget:g}s)"


def _timed(criterion: int, name: str, budget: float, fn, *args, **kw) -> CheckResult:
    t0 = time.perf_counter()
    try:
        passed, detail = fn(*args, **kw)
    except Exception as exc:  # a crash is a failed check, reported with its cause
        passed, detail = False, f"error: {exc!r} {traceback.format_exc(limit=2)!r}"
    sec = time.perf_counter() - t0
    if sec > budget:
        passed, detail = False, detail + f"; exceeded runtime budget {budget:g}s"
    return CheckResult(criterion, name, bool(passed), detail, sec, budget)


# -- 1. node matrices ---------------------------------------------------


def reference_H_inverse(d: int, h: float) -> np.ndarray:
    """Symbolic inverses for d = 2, 3, 4, written out entry by entry."""
    h = float(h)
    if d == 2:
        return np.array([[4 / h, -4 / h**2], [-1 / h, 2 / h**2]])
    if d == 3:
        return np.array(
            [
                [9 / h, -45 / (2 * h**2), 27 / (2 * h**3)],
                [-9 / (2 * h), 18 / h**2, -27 / (2 * h**3)],
                [1 / h, -9 / (2 * h**2), 9 / (2 * h**3)],
            ]
        )
    if d == 4:
        return np.array(
            [
                [16 / h, -208 / (3 * h**2), 96 / h**3, -128 / (3 * h**4)],
                [-12 / h, 76 / h**2, -128 / h**3, 64 / h**4],
                [16 / (3 * h), -112 / (3 * h**2), 224 / (3 * h**3), -128 / (3 * h**4)],
                [-1 / h, 22 / (3 * h**2), -16 / h**3, 32 / (3 * h**4)],
            ]
        )
    raise ValueError(d)


def reference_H(d: int, h: float) -> np.ndarray:
    return np.array([[(i * h / d) ** l for i in range(1, d + 1)] for l in range(1, d + 1)])


def check_node_matrices():
    worst = 0.0
    for d in (2, 3, 4):
        for h in (1.0, 0.5):
            H = build_H(d, h)
            for got, ref in ((H.matrix, reference_H(d, h)), (invert_H(H), reference_H_inverse(d, h))):
                worst = max(worst, float(np.linalg.norm(got - ref) / np.linalg.norm(ref)))
    return worst <= 1e-12, f"max relative error {worst:.2e} (tol 1e-12)"


# -- 2. closed-form coefficients ----------------------------------------------


def closed_form_lambda(v: float, h: float, a) -> np.ndarray:
    """Closed-form 1-D, 2-D and 3-D Burgers coefficients, evaluated exactly."""
    v, h = F(v), F(h)
    a = [F(x) for x in a]
    if len(a) == 1:
        lam = [a[0] / h]
    elif len(a) == 2:
        ax, ay = a
        lam = [(4 * (h + 2 * v) * ax - 4 * ay) / h**2, (2 * ay - (h + 4 * v) * ax) / h**2]
    else:
        ax, ay, az = a
        lam = [
            9 * ((2 * h * h + 10 * h * v + 9 * v * v) * ax - (5 * h + 9 * v) * ay + 3 * az) / (2 * h**3),
            -9 * ((h * h + 8 * h * v + 9 * v * v) * ax - (4 * h + 9 * v) * ay + 3 * az) / (2 * h**3),
            ((2 * h * h + 18 * h * v + 27 * v * v) * ax - 9 * (h + 3 * v) * ay + 9 * az) / (2 * h**3),
        ]
    return np.array([float(x) for x in lam])


def random_vha(rng, d: int):
    v = rng.uniform(0.0, 0.7)
    h = rng.uniform(0.05, 1.0 - v)
    a = rng.normal(size=d)
    return v, h, a / np.linalg.norm(a)


def check_closed_form_coefficients(seed: int = 0):
    rng = np.random.default_rng(seed)
    worst_res = worst_coef = 0.0
    for d in (1, 2, 3):
        flux = FluxModel.burgers(d)
        for _ in range(100):
            v, h, a = random_vha(rng, d)
            dec = decompose_improved(flux, v, h, a)
            ref = closed_form_lambda(v, h, a)
            worst_res = max(worst_res, dec.residual / np.linalg.norm(a))
            worst_coef = max(worst_coef, float(np.linalg.norm(dec.coefficients - ref) / np.linalg.norm(ref)))
    ok = worst_res <= 1e-10 and worst_coef <= 1e-10
    return ok, f"max residual {worst_res:.2e}, max relative coefficient error {worst_coef:.2e} (tol 1e-10)"


# -- 3. norm bounds -----------------------------------------------------------------


def check_norm_bounds():
    ratios = []
    for d in range(1, 5):
        flux = FluxModel.burgers(d)
        vals = [r[1] for r in norm_bound_table(flux, 0.0, DYADIC)]
        ratios.append(("worst", d, max(vals) / min(vals)))
        for ell in range(1, d + 1):
            vals = [r[1] for r in directional_gain(flux, 0.0, DYADIC, ell)]
            ratios.append((f"l={ell}", d, max(vals) / min(vals)))
    worst = max(r[2] for r in ratios)
    return worst <= 10, f"max table max/min {worst:.3f} over {len(ratios)} tables (tol 10)"


# -- 4. nonlinearity exponents ---------------------------------------------------------


def check_alpha(seed: int = 0):
    got = {d: fit_alpha(FluxModel.burgers(d), seed=seed).alpha for d in (1, 2, 3)}
    ok = all(abs(a - 1 / d) <= 0.05 for d, a in got.items())
    return ok, ", ".join(f"d={d}: alpha={a:.4f}" for d, a in got.items())


# -- 5. bootstrap --------------------------------------------------------------------


def check_bootstrap():
    errs = []
    for d in (1, 2, 3):
        for alpha in (1.0, 0.5, 1 / 3):
            s = bootstrap_iterate(d, alpha, 1e-13, "alpha_nonlinear", max_iter=200)
            errs.append(abs(s.gammas[-1] - alpha / (2 * d)) if s.converged else math.inf)
        s = bootstrap_iterate(d, 1.0, 1e-13, "nondegenerate", max_iter=200)
        errs.append(abs(s.gammas[-1] - 1 / (2 * d)) if s.converged else math.inf)
    s = bootstrap_iterate(1, 1.0, 1e-13, "burgers_1d", max_iter=200)
    errs.append(abs(s.gammas[-1] - 0.5) if s.converged else math.inf)
    fixed = max(errs)
    sched = bootstrap_iterate(1, 1.0, 0.0, "burgers_1d", max_iter=39)
    closed = max(abs(g - 0.5 * (1 - 3.0 ** -(n + 1))) for n, g in enumerate(sched.gammas))
    a2 = bootstrap_iterate(2, 0.5, 1e-13, "alpha_nonlinear").gammas[-1]
    n2 = bootstrap_iterate(2, 1.0, 1e-13, "nondegenerate").gammas[-1]
    ok = fixed <= 1e-12 and closed <= 1e-14 and len(sched.gammas) >= 40 and abs(a2 - 1 / 8) <= 1e-12 and abs(n2 - 0.25) <= 1e-12
    return ok, (
        f"fixed-point error {fixed:.1e}, closed-form error {closed:.1e} (n<=40), "
        f"alpha_nonlinear d=2 a=1/2 -> {a2:.15f}, nondegenerate d=2 -> {n2:.15f}"
    )


# -- 6. oscillation calibration --------------------------------------------------------


def check_oscillation():
    radii = 2.0 ** -np.arange(3, 10)
    parts, ok = [], True
    for gamma in (0.25, 0.5, 0.75):
        sol = manufactured("holder_profile", {"cells": 2**16, "gamma": gamma})
        g = oscillation_profile(sol, 0, 0.0, radii).gamma
        ok &= abs(g - gamma) <= 0.05
        parts.append(f"gamma={gamma}: fit {g:.4f}")
    n = 2**16
    x = -1 + (np.arange(n) + 0.5) * 2 / n
    step = GridSolution((x > 0).astype(float)[None], [0.0], (2.0,), (-1.0,))
    dev = max(abs(h_r(step, 0, 0.0, r, "ball") - 0.5) for r in radii)
    ok &= dev <= step.dx
    parts.append(f"step max |h_r - 1/2| = {dev:.2e} (dx {step.dx:.2e})")
    return ok, "; ".join(parts)


# -- 7. transport estimates -------------------------------------------------------------


def _u0_transport(x):
    return 0.35 + 0.15 * np.sin(2 * np.pi * x)


def transport_solution(n: int = 2**14, g: float = 0.1, t0: float = 0.1, T: float = 0.2) -> GridSolution:
    """Exact pre-shock Burgers solution with constant source, sampled at t0 and t0 + T."""
    x = (np.arange(n) + 0.5) / n
    data = np.stack([characteristics_1d(_u0_transport, x, t, g) for t in (t0, t0 + T)])
    meta = {"flux": FluxModel.burgers(1).to_config(), "source": {"kind": "constant", "value": g}}
    return GridSolution(data, [t0, t0 + T], (1.0,), meta=meta)


def check_transport(seed: int = 0):
    g, T = 0.1, 0.2
    sol = transport_solution(g=g, T=T)
    rng = np.random.default_rng(seed)
    results = []
    for _ in range(10):
        box = KineticBox((rng.uniform(0, 1),), rng.uniform(0.02, 0.12), rng.uniform(0.2, 0.45), rng.uniform(0.02, 0.12))
        results.append(verify_transport_estimate(sol, box, T, g))
    ok = all(r.passed for r in results)
    slack = max(r.lhs / r.rhs for r in results)
    # round trip of the hypograph restricted to a kinetic band
    flux = FluxModel.burgers(1)
    v_lo, omega = 0.25, 0.1
    dv = sol.dx / (T * flux.second_deriv_bound())
    nv = math.ceil(omega / dv)
    dv = omega / nv
    lo = v_lo + np.arange(nv) * dv
    frac = np.clip((sol.data[0][None, :] - lo[:, None]) / dv, 0.0, 1.0)
    E = KineticSet(frac, sol.origin, sol.dx, v_lo, dv)
    back = free_transport(free_transport(E, T, flux), -T, flux)
    err = back.l1_distance(E)
    dmeas = abs(back.measure() - E.measure())
    ok &= err <= 2 * sol.dx and dmeas <= 2 * sol.dx
    return ok, (
        f"{sum(r.passed for r in results)}/10 rectangles pass, max lhs/rhs {slack:.3f}; "
        f"round-trip L1 {err:.2e}, measure change {dmeas:.1e} (2dx = {2 * sol.dx:.2e})"
    )


# -- 8. solver ---------------------------------------------------------------------------


SINE_SOURCE = {"kind": "expression", "expr": "0.5*pi*cos(2*pi*(x-t))*(0.25*sin(2*pi*(x-t))-0.5)", "bound": 0.75 * 0.5 * math.pi}
SINE_INITIAL = {"kind": "expression", "expr": "0.5+0.25*sin(2*pi*x)"}


def _u0_2d(X):
    return 0.5 + 0.2 * np.sin(2 * np.pi * X[0]) * np.sin(2 * np.pi * X[1])


def solver_errors_1d(cells=(1024, 4096), T: float = 0.5):
    errs = []
    for n in cells:
        sol = solve(SolverConfig(FluxModel.burgers(1), (n,), (1.0,), T, SINE_INITIAL, SINE_SOURCE))
        exact = 0.5 + 0.25 * np.sin(2 * np.pi * (sol.centers() - T))
        errs.append(float(np.abs(sol.data[-1] - exact).mean()))
    return errs


def solver_errors_2d(cells=(64, 128), T: float = 0.2):
    flux = FluxModel.burgers(2)
    errs, sols = [], []
    for n in cells:
        sol = solve(SolverConfig(flux, (n, n), (1.0, 1.0), T, _u0_2d, None))
        xs = sol.centers()
        X = np.meshgrid(xs, xs, indexing="ij")
        errs.append(float(np.abs(sol.data[-1] - characteristics_nd(_u0_2d, X, T, flux)).mean()))
        sols.append(sol)
    return errs, sols


def invariant_violations(sol: GridSolution, g_bound: float) -> tuple[float, float]:
    """(mean drift when g = 0, worst excursion outside the maximum-principle band)."""
    u0 = sol.data[0]
    worst = 0.0
    for k, t in enumerate(sol.times):
        lo = max(0.0, float(u0.min()) - t * g_bound)
        hi = min(1.0, float(u0.max()) + t * g_bound)
        worst = max(worst, lo - float(sol.data[k].min()), float(sol.data[k].max()) - hi)
    drift = float(np.max(np.abs(sol.data.mean(axis=tuple(range(1, sol.d + 1))) - u0.mean())))
    return drift, max(worst, 0.0)


def check_solver():
    e1 = solver_errors_1d((1024, 4096))
    p1 = math.log2(e1[0] / e1[1]) / 2
    e2, sols = solver_errors_2d((64, 128))
    p2 = math.log2(e2[0] / e2[1])
    drift2, mp2 = invariant_violations(sols[-1], 0.0)
    # g = 0 in 1-D as well, and a constant source for the maximum principle
    u0 = {"kind": "expression", "expr": "0.35+0.15*sin(2*pi*x)"}
    s0 = solve(SolverConfig(FluxModel.burgers(1), (4096,), (1.0,), 0.4, u0, None, n_out=5))
    drift1, mp1 = invariant_violations(s0, 0.0)
    sg = solve(SolverConfig(FluxModel.burgers(1), (4096,), (1.0,), 0.4, u0, {"kind": "constant", "value": 0.1}, n_out=5))
    _, mpg = invariant_violations(sg, 0.1)
    drift, mp = max(drift1, drift2), max(mp1, mp2, mpg)
    ok = p1 >= 0.8 and p2 >= 0.7 and drift <= 1e-12 and mp <= 1e-12
    return ok, (
        f"1-D order {p1:.3f} (errors {e1[0]:.2e}, {e1[1]:.2e}); 2-D order {p2:.3f} "
        f"(errors {e2[0]:.2e}, {e2[1]:.2e}); mean drift {drift:.1e}; max-principle excursion {mp:.1e}"
    )


# -- 9. exponent consistency -----------------------------------------------------------


def check_exponents(n_centers: int = 24):
    gbar_1d = bootstrap_iterate(1, 1.0, 1e-13, "burgers_1d").limit
    gbar_2d = bootstrap_iterate(2, 1.0, 1e-13, "nondegenerate").limit
    radii1 = 2.0 ** -np.arange(3, 9)
    sols = [
        solve(SolverConfig(FluxModel.burgers(1), (4096,), (1.0,), 0.4, {"kind": "expression", "expr": "0.35+0.15*sin(2*pi*x)"}, {"kind": "constant", "value": 0.1})),
        solve(SolverConfig(FluxModel.burgers(1), (4096,), (1.0,), 0.5, SINE_INITIAL, SINE_SOURCE)),
    ]
    worst, counted, skipped = math.inf, 0, 0
    centers = (np.arange(n_centers) + 0.37) / n_centers
    for sol in sols:
        for c in centers:
            p = oscillation_profile(sol, sol.nt - 1, c, radii1, "ball")
            if p.inconclusive:
                skipped += 1
                continue
            counted += 1
            worst = min(worst, p.gamma - gbar_1d)
    sol2 = solve(SolverConfig(FluxModel.burgers(2), (256, 256), (1.0, 1.0), 0.2, _u0_2d, {"kind": "constant", "value": 0.05}))
    radii2 = 2.0 ** -np.arange(2, 8)
    rng = np.random.default_rng(7)
    worst2, counted2 = math.inf, 0
    for c in rng.uniform(0, 1, size=(20, 2)):
        p = oscillation_profile(sol2, sol2.nt - 1, c, radii2, "ball")
        if p.inconclusive:
            skipped += 1
            continue
        counted2 += 1
        worst2 = min(worst2, p.gamma - gbar_2d)
    ok = counted >= 20 and counted2 >= 20 and worst >= -0.1 and worst2 >= -0.1
    return ok, (
        f"1-D: {counted} centres, min(gamma_hat - {gbar_1d}) = {worst:.3f}; "
        f"2-D: {counted2} centres, min(gamma_hat - {gbar_2d}) = {worst2:.3f}; {skipped} inconclusive"
    )


CRITERIA = [
    (1, "node matrices", 1.0, check_node_matrices),
    (2, "closed-form coefficients", 1.0, check_closed_form_coefficients),
    (3, "norm-bound certification", 10.0, check_norm_bounds),
    (4, "nonlinearity exponents", 30.0, check_alpha),
    (5, "bootstrap fixed points", 1.0, check_bootstrap),
    (6, "oscillation calibration", 30.0, check_oscillation),
    (7, "transport estimates", 60.0, check_transport),
    (8, "solver correctness", 300.0, check_solver),
    (9, "exponent consistency", 300.0, check_exponents),
]


def run_criterion(number: int, seed: int = 0) -> CheckResult:
    for crit, name, budget, fn in CRITERIA:
        if crit == number:
            kwargs = {"seed": seed} if "seed" in fn.__code__.co_varnames[: fn.__code__.co_argcount] else {}
            return _timed(crit, name, budget, fn, **kwargs)
    raise KeyError(number)


def run_all(seed: int = 0, only=None) -> list[CheckResult]:
    return [run_criterion(c, seed) for c, *_ in CRITERIA if only is None or c in only]


__all__ = ["CheckResult", "CRITERIA", "run_all", "run_criterion", "VARIANTS"]
