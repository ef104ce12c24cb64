"""Decompositions of a vector along flux increments over a short v-interval.

Two constructions are provided:

* the improved one on equispaced nodes ``v + i h / d``, where the increment
  matrix factors as ``A = W^T H_d(h) + R (h/d)^(d+1)``;
* the general zero-sum one on ``d + 1`` searched nodes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .flux import FluxModel, spanning_check, wronskian

COND_LIMIT = 1e14
EXACT_MAX_D = 6


class IllConditionedError(ArithmeticError):
    """Raised when a node interval yields a (numerically) singular system."""


# -- node matrix ------------------------------------------------------------


@lru_cache(maxsize=None)
def _exact_H1(d: int) -> tuple:
    return tuple(tuple(Fraction(i, d) ** l for i in range(1, d + 1)) for l in range(1, d + 1))


def _fraction_det(rows) -> Fraction:
    m = [list(r) for r in rows]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                for k in range(c, n):
                    m[r][k] -= f * m[c][k]
    return det


@lru_cache(maxsize=None)
def _exact_H1_inverse(d: int) -> tuple:
    """Adjugate over determinant, all in rationals."""
    H = _exact_H1(d)
    det = _fraction_det(H)
    inv = [[Fraction(0)] * d for _ in range(d)]
    for r in range(d):
        for c in range(d):
            minor = [row[:c] + row[c + 1:] for k, row in enumerate(H) if k != r]
            cof = _fraction_det(minor) if minor else Fraction(1)
            inv[c][r] = (-1) ** (r + c) * cof / det
    return tuple(tuple(row) for row in inv)


def integer_vandermonde_det(d: int) -> int:
    """det[i^l]_{l,i=1..d}, computed exactly."""
    return int(_fraction_det([[Fraction(i**l) for i in range(1, d + 1)] for l in range(1, d + 1)]))


def superfactorial(d: int) -> int:
    return math.prod(math.factorial(i) for i in range(d + 1))


@dataclass(frozen=True)
class NodeMatrix:
    """H_d(h) with entries (i h / d)^l, rows l and columns i."""

    d: int
    h: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.exact()])

    def exact(self) -> list[list[Fraction]]:
        hq = Fraction(self.h)
        if self.d <= EXACT_MAX_D:
            H1 = _exact_H1(self.d)
        else:
            H1 = [[Fraction(i, self.d) ** l for i in range(1, self.d + 1)] for l in range(1, self.d + 1)]
        return [[x * hq ** (l + 1) for x in row] for l, row in enumerate(H1)]


def build_H(d: int, h: float) -> NodeMatrix:
    if d < 1:
        raise ValueError("d must be >= 1")
    if not (0 < h <= 1):
        raise ValueError(f"h={h} outside (0, 1]")
    return NodeMatrix(d, float(h))


def invert_H(H: NodeMatrix, exact: bool = False):
    """H_d(h)^{-1}; column l carries the factor h^{-l}.

    Rational adjugate formula up to d = 6, pivoted elimination beyond.
    With ``exact=True`` (d <= 6) the entries are returned as Fractions.
    """
    d, hq = H.d, Fraction(H.h)
    if H.h <= 0:
        raise ValueError("h must be positive")
    if d <= EXACT_MAX_D:
        inv1 = _exact_H1_inverse(d)
        out = [[x / hq ** (c + 1) for c, x in enumerate(row)] for row in inv1]
        if exact:
            return out
        return np.array([[float(x) for x in row] for row in out])
    if exact:
        raise ValueError(f"exact inverse only available for d <= {EXACT_MAX_D}")
    H1 = np.array([[(i / d) ** l for i in range(1, d + 1)] for l in range(1, d + 1)])
    inv1 = scipy.linalg.solve(H1, np.eye(d))
    return inv1 / H.h ** np.arange(1, d + 1)[None, :]


def h_inverse_norm_certificate(d: int, h_list) -> list[tuple[float, float, float]]:
    """Rows (h, ||H_d(h)^{-1}||_2, ||H_d(h)^{-1}||_2 * h^d)."""
    rows = []
    for h in h_list:
        if not (0 < h <= 1):
            raise ValueError(f"h={h} outside (0, 1]")
        nrm = float(np.linalg.norm(invert_H(build_H(d, h)), 2))
        rows.append((float(h), nrm, nrm * h**d))
    return rows


# -- increments and factorization -------------------------------------------


def nodes(v0: float, h: float, d: int) -> np.ndarray:
    return v0 + h * np.arange(d + 1) / d


def build_increment_matrix(flux: FluxModel, v0: float, h: float) -> np.ndarray:
    """Columns f'(v_i) - f'(v_0) for v_i = v0 + i h / d, i = 1..d."""
    if v0 < 0 or h <= 0 or v0 + h > 1 + 1e-15:
        raise ValueError(f"node interval [{v0}, {v0 + h}] leaves [0, 1]")
    v = nodes(v0, h, flux.d)
    fp = flux.deriv(v, 1)  # (d+1, d)
    return (fp[1:] - fp[0]).T


@dataclass
class Factorization:
    wronskian: np.ndarray  # row l: f^{(1+l)}(v0) / l!
    H: np.ndarray
    remainder: np.ndarray
    scale: float  # (h/d)^(d+1)
    increments: np.ndarray
    reconstruction_error: float
    mean_value_nodes: np.ndarray = field(default_factory=lambda: np.empty(0))

    def leading(self) -> np.ndarray:
        """W^T H_d(h): component rows, node columns, like the increments."""
        return self.wronskian.T @ self.H


def remainder_matrix(flux: FluxModel, v0: float, h: float) -> Factorization:
    """Split the increments into the Wronskian part and the Taylor remainder.

    Polynomial fluxes get the remainder from their exact Taylor tail; other
    kinds from the difference ``A - W^T H``. Each remainder entry also has a
    mean-value node xi in [v0, v_i] solved for where the derivative
    f_j^{(d+2)} brackets the required value.
    """
    d = flux.d
    A = build_increment_matrix(flux, v0, h)
    W = wronskian(flux, v0)
    H = build_H(d, h).matrix
    scale = (h / d) ** (d + 1)
    if flux.is_polynomial:
        R = np.zeros((d, d))
        idx = np.arange(1, d + 1, dtype=float)
        for j, comp in enumerate(flux.components):
            dp = comp.deriv(1)
            for l in range(d + 1, dp.degree() + 1):
                coef = dp.deriv(l)(v0) / math.factorial(l)
                R[j] += coef * idx**l * (h / d) ** (l - d - 1)
    else:
        R = (A - W.T @ H) / scale
    err = float(np.linalg.norm(A - (W.T @ H + R * scale)))
    xi = np.full((d, d), np.nan)
    vi = nodes(v0, h, d)
    fact = math.factorial(d + 1)
    for j in range(d):
        for i in range(d):
            target = fact * R[j, i] / (i + 1) ** (d + 1)
            g = lambda s: flux.deriv(s, d + 2)[j] - target  # noqa: E731
            lo, hi = g(v0), g(vi[i + 1])
            if lo == 0:
                xi[j, i] = v0
            elif lo * hi < 0:
                xi[j, i] = brentq(g, v0, vi[i + 1])
            elif hi == 0:
                xi[j, i] = vi[i + 1]
    return Factorization(W, H, R, scale, A, err, xi)


def inverse_perturbation_bound(A_tilde: np.ndarray, R: np.ndarray) -> float:
    """Neumann-series bound ||A~^{-1}|| / (1 - ||A~^{-1} R||) on ||(A~ + R)^{-1}||.

    Returns inf when ||A~^{-1} R|| >= 1.
    """
    inv = np.linalg.inv(A_tilde)
    q = float(np.linalg.norm(inv @ R, 2))
    if q >= 1:
        return math.inf
    return float(np.linalg.norm(inv, 2)) / (1 - q)


# -- decompositions -----------------------------------------------------------


@dataclass
class Decomposition:
    kind: str  # "improved" | "general"
    nodes: np.ndarray
    coefficients: np.ndarray
    residual: float
    bound_ratio: float
    condition: float
    zero_sum: float = 0.0
    target: np.ndarray | None = None

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "nodes": self.nodes.tolist(),
            "coefficients": self.coefficients.tolist(),
            "residual": self.residual,
            "bound_ratio": self.bound_ratio,
            "condition": self.condition,
        }
        if self.kind == "general":
            out["zero_sum"] = self.zero_sum
        return out


def _equilibrated_solve(A: np.ndarray, b: np.ndarray, where: str) -> tuple[np.ndarray, float]:
    scale = np.abs(A).max(axis=1)
    if np.any(scale == 0):
        raise IllConditionedError(f"singular increment matrix on {where}")
    As, bs = A / scale[:, None], b / scale
    cond = float(np.linalg.cond(As))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(f"condition number {cond:.3e} exceeds {COND_LIMIT:.0e} on {where}")
    lu = scipy.linalg.lu_factor(As)
    x = scipy.linalg.lu_solve(lu, bs)
    # one step of iterative refinement
    x += scipy.linalg.lu_solve(lu, bs - As @ x)
    return x, cond


def decompose_improved(flux: FluxModel, v: float, h: float, a, check_spanning: bool = True) -> Decomposition:
    """Solve a = sum_i lambda_i (f'(v_i) - f'(v_0)) on v_i = v + i h / d."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    d = flux.d
    if a.shape != (d,):
        raise ValueError(f"a must have shape ({d},)")
    if v < 0 or not (0 < h <= 1) or v + h > 1 + 1e-15:
        raise ValueError(f"need v >= 0, 0 < h <= 1, v + h <= 1 (got v={v}, h={h})")
    if check_spanning and not spanning_check(flux, v)[0]:
        raise IllConditionedError(f"flux derivatives do not span R^{d} at v={v}")
    A = build_increment_matrix(flux, v, h)
    lam, cond = _equilibrated_solve(A, a, f"[{v}, {v + h}]")
    na = float(np.linalg.norm(a))
    return Decomposition(
        kind="improved",
        nodes=nodes(v, h, d),
        coefficients=lam,
        residual=float(np.linalg.norm(A @ lam - a)),
        bound_ratio=float(np.linalg.norm(lam) * h**d / na) if na > 0 else 0.0,
        condition=cond,
        target=a,
    )


def _node_tuples(d: int, positions: int = 21) -> np.ndarray:
    """Increasing index tuples on a ``positions`` grid with spacing >= 1/(2(d+1))."""
    gap = math.ceil((positions - 1) / (2 * (d + 1)) - 1e-12)
    out = [c for c in itertools.combinations(range(positions), d + 1) if min(np.diff(c), default=gap) >= gap]
    return np.array(out, dtype=float) / (positions - 1)


def _smallest_sv(flux: FluxModel, vs: np.ndarray) -> np.ndarray:
    """Smallest singular value of rows (1, f'(v_i)) for each tuple in ``vs``."""
    fp = flux.deriv(vs, 1)  # (..., d+1, d)
    M = np.concatenate([np.ones(vs.shape + (1,)), fp], axis=-1)
    return np.linalg.svd(M, compute_uv=False)[..., -1]


def select_general_nodes(flux: FluxModel, v: float, h: float, refine_steps: int = 40) -> tuple[np.ndarray, float]:
    d = flux.d
    min_gap = h / (2 * (d + 1))
    cand = v + h * _node_tuples(d)
    score = _smallest_sv(flux, cand)
    best = int(np.argmax(score))
    x, s = cand[best].copy(), float(score[best])
    step = h / 40
    for _ in range(refine_steps):
        improved = False
        for k in range(d + 1):
            for sign in (1.0, -1.0):
                y = x.copy()
                y[k] += sign * step
                if y[0] < v or y[-1] > v + h or np.any(np.diff(y) < min_gap - 1e-15):
                    continue
                sy = float(_smallest_sv(flux, y))
                if sy > s:
                    x, s, improved = y, sy, True
        if not improved:
            step /= 2
            if step < h * 1e-6:
                break
    return x, s


def decompose_general(flux: FluxModel, v: float, h: float, a, alpha: float) -> Decomposition:
    """(0, a) = sum_i a_i (1, f'(v_i)) on d + 1 searched nodes in [v, v + h].

    The zero-sum constraint is built in by solving for a_2..a_{d+1} against
    the differences f'(v_i) - f'(v_1) and setting a_1 = -sum.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    d = flux.d
    if a.shape != (d,):
        raise ValueError(f"a must have shape ({d},)")
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    if v < 0 or h <= 0 or v + h > 1 + 1e-15:
        raise ValueError(f"need v >= 0, h > 0, v + h <= 1 (got v={v}, h={h})")
    vs, smin = select_general_nodes(flux, v, h)
    scale = max(1.0, float(np.abs(flux.deriv(vs, 1)).max()))
    if smin <= 1e-13 * scale:
        raise IllConditionedError(f"all node tuples in [{v}, {v + h}] near-singular (best smallest sv {smin:.3e})")
    fp = flux.deriv(vs, 1)
    B = (fp[1:] - fp[0]).T
    rest, cond = _equilibrated_solve(B, a, f"[{v}, {v + h}]")
    coeffs = np.concatenate([[-math.fsum(rest)], rest])
    full = np.vstack([np.ones(d + 1), fp.T])
    resid = float(np.linalg.norm(full @ coeffs - np.concatenate([[0.0], a])))
    na = float(np.linalg.norm(a))
    return Decomposition(
        kind="general",
        nodes=vs,
        coefficients=coeffs,
        residual=resid,
        bound_ratio=float(np.abs(coeffs).max() * h ** (d / alpha) / na) if na > 0 else 0.0,
        condition=cond,
        zero_sum=math.fsum(coeffs),
        target=a,
    )


# -- tables ---------------------------------------------------------------------


def norm_bound_table(flux: FluxModel, v: float, h_list, a=None) -> list[tuple[float, float]]:
    """Rows (h, ||lambda|| h^d / ||a||).

    Without ``a`` the worst direction at each h is used (the left singular
    vector of the smallest singular value of A), so the ratio equals
    ||A^{-1}|| h^d.
    """
    d = flux.d
    rows = []
    for h in h_list:
        if a is None:
            U = np.linalg.svd(build_increment_matrix(flux, v, h))[0]
            target = U[:, -1]
        else:
            target = np.asarray(a, dtype=float)
        dec = decompose_improved(flux, v, h, target)
        rows.append((float(h), dec.bound_ratio))
    return rows


def directional_vector(flux: FluxModel, v: float, h: float, ell: int) -> np.ndarray:
    """Unit direction a_l along which lambda only grows like h^{-l}.

    Burgers-family fluxes use f^{(1+l)}(v) itself; other fluxes use the
    perturbed direction A(v,h,d) H_d(h)^{-1} e_l, which tends to
    f^{(1+l)}(v) / l! as h -> 0.
    """
    if not (1 <= ell <= flux.d):
        raise ValueError(f"ell must lie in 1..{flux.d}")
    if flux.kind == "burgers_family":
        vec = flux.deriv(float(v), 1 + ell)
    else:
        A = build_increment_matrix(flux, v, h)
        vec = A @ invert_H(build_H(flux.d, h))[:, ell - 1]
    return vec / np.linalg.norm(vec)


def directional_gain(flux: FluxModel, v: float, h_list, ell: int) -> list[tuple[float, float]]:
    """Rows (h, ||lambda(h)|| h^l) for the l-th special direction."""
    if not spanning_check(flux, v)[0]:
        raise IllConditionedError(f"flux derivatives do not span at v={v}")
    rows = []
    for h in h_list:
        a = directional_vector(flux, v, h, ell)
        dec = decompose_improved(flux, v, h, a, check_spanning=False)
        rows.append((float(h), float(np.linalg.norm(dec.coefficients)) * h**ell))
    return rows
