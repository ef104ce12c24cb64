import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from holderlab.regularity import (
    bootstrap_iterate,
    bootstrap_map,
    burgers_constants,
    cusp_h_r,
    empirical_holder,
    fit_power_law,
    h_r,
    holder_constant,
    holder_constant_cap,
    oscillation_profile,
)
from holderlab.solution import GridSolution
from holderlab.solver import manufactured

RADII = 2.0 ** -np.arange(2, 9)


@pytest.fixture(scope="module")
def ramp():
    x = (np.arange(1000) + 0.5) / 1000
    return GridSolution(x[None], [0.0], 1.0)


def test_h_r_of_linear_field(ramp):
    # averages of x over [c - r, c + r] equal c, so h_r = r
    for r in (0.05, 0.1, 0.2):
        assert h_r(ramp, 0, 0.5, r) == pytest.approx(r, abs=1e-12)


def test_h_r_of_step_is_half():
    n = 512
    u = np.zeros((1, n))
    u[0, n // 2 :] = 1
    sol = GridSolution(u, [0.0], 1.0)
    # radii on the grid: the extreme centres x +- r are vertices
    for r in (2**-6, 2**-4, 2**-3):
        assert h_r(sol, 0, 0.5, r) == pytest.approx(0.5, abs=1e-12)


def test_h_r_ball_of_2d_step():
    n = 128
    u = np.zeros((1, n, n))
    u[0, :, n // 2 :] = 1
    sol = GridSolution(u, [0.0], 1.0)
    assert h_r(sol, 0, (0.5, 0.5), 0.125, "ball") == pytest.approx(0.5, abs=1e-12)
    assert h_r(sol, 0, (0.5, 0.5), 0.125, "cube") == pytest.approx(0.5, abs=1e-12)


def test_h_r_validation(ramp):
    with pytest.raises(ValueError):
        h_r(ramp, 0, 0.5, 1e-3)
    with pytest.raises(ValueError):
        h_r(ramp, 0, 0.5, 0.3)
    with pytest.raises(ValueError):
        h_r(ramp, 0, 0.5, 0.1, "hexagon")


@settings(max_examples=20, deadline=None)
@given(gamma=st.floats(0.1, 1.0), r=st.floats(1e-3, 0.5))
def test_cusp_formula_matches_quadrature(gamma, r):
    f = lambda x: abs(x) ** gamma  # noqa: E731
    lo = 2 * quad(f, 0, r, epsabs=0, epsrel=1e-13)[0] / (2 * r)
    hi = quad(f, 0, 2 * r, epsabs=0, epsrel=1e-13)[0] / (2 * r)
    assert cusp_h_r(gamma, r) == pytest.approx(0.5 * (hi - lo), rel=1e-9)


@pytest.mark.parametrize("gamma", [0.3, 0.6])
def test_profile_recovers_cusp_exponent(gamma):
    sol = manufactured("holder_profile", {"gamma": gamma, "cells": 2**14})
    prof = oscillation_profile(sol, 0, 0.0, RADII)
    assert not prof.inconclusive
    assert prof.gamma == pytest.approx(gamma, abs=0.02)
    assert prof.C == pytest.approx(cusp_h_r(gamma, 1.0), rel=0.1)


def test_profile_validation(ramp):
    with pytest.raises(ValueError, match="4 radii"):
        oscillation_profile(ramp, 0, 0.5, RADII[:3])
    with pytest.raises(ValueError, match="decreasing"):
        oscillation_profile(ramp, 0, 0.5, RADII[::-1])
    with pytest.raises(ValueError, match="decades"):
        oscillation_profile(ramp, 0, 0.5, RADII[:4])


def test_fit_power_law_exact_and_floor():
    r = np.array([1.0, 0.5, 0.25, 0.125])
    g, C, used = fit_power_law(r, 3 * r**0.4)
    assert g == pytest.approx(0.4) and C == pytest.approx(3.0)
    g, _, used = fit_power_law(r, 3 * r**0.4, floor=2.5)
    assert math.isnan(g) and used.sum() < 3


def test_holder_constants():
    assert holder_constant(1.0, 0.5) == pytest.approx(2 * (1 + 2 / (math.sqrt(2) - 1)))
    assert holder_constant_cap(2.0) == 20.0
    with pytest.raises(ValueError):
        holder_constant(1.0, 1.0)


def test_empirical_holder():
    n = 256
    u = np.zeros((1, n))
    u[0, n // 2 :] = 1
    sol = GridSolution(u, [0.0], 1.0)
    # unit jump across one cell dominates: 1 / dx^gamma
    assert empirical_holder(sol, 0, 0.5) == pytest.approx(1 / math.sqrt(1 / n))
    x = (np.arange(n) + 0.5) / n
    lin = GridSolution((0.5 + 0.25 * np.sin(2 * np.pi * x))[None], [0.0], 1.0)
    assert empirical_holder(lin, 0, 1.0) <= 0.5 * np.pi + 1e-12
    with pytest.raises(ValueError):
        empirical_holder(sol, 0, 0.0)


@settings(max_examples=100, deadline=None)
@given(g1=st.floats(0, 0.99), g2=st.floats(0, 0.99), d=st.integers(1, 3), alpha=st.floats(0.05, 1.0))
def test_bootstrap_map_contracts(g1, g2, d, alpha):
    diff = abs(bootstrap_map(g1, d, alpha) - bootstrap_map(g2, d, alpha))
    assert diff == pytest.approx(abs(g1 - g2) / (1 + d / alpha), abs=1e-15)
    assert diff <= abs(g1 - g2) / 2 + 1e-15


@settings(max_examples=50, deadline=None)
@given(d=st.integers(1, 3), alpha=st.floats(0.05, 1.0))
def test_bootstrap_limits(d, alpha):
    s = bootstrap_iterate(d, alpha, 1e-14)
    assert s.converged and len(s.gammas) <= 201
    assert s.gammas[-1] == pytest.approx(alpha / (2 * d), abs=1e-12)
    assert all(b > a for a, b in zip(s.gammas, s.gammas[1:]))
    nd = bootstrap_iterate(d, alpha, 1e-14, "nondegenerate")
    assert nd.gammas[-1] == pytest.approx(1 / (2 * d), abs=1e-12)


def test_burgers_schedule_closed_form():
    s = bootstrap_iterate(1, 1.0, 0.0, "burgers_1d", max_iter=39)
    for n, g, _ in s.rows():
        assert g == pytest.approx(0.5 * (1 - 3.0**-n), abs=1e-14)
    assert s.first_index == 1


def test_burgers_constants_stay_bounded():
    g = 2.0
    s = bootstrap_iterate(1, 1.0, 1e-14, "burgers_1d", g_norm=g)
    th = burgers_constants(g)
    assert s.constants[0] == pytest.approx((24 * g) ** (1 / 3))
    assert s.constants[-1] == pytest.approx(th.C_fixed_point, rel=1e-9)
    assert max(s.constants) <= th.C_uniform_bound
    assert th.limit_holder == pytest.approx(th.compact_holder)


def test_bootstrap_validation():
    with pytest.raises(ValueError):
        bootstrap_iterate(2, 1.0, variant="other")
    with pytest.raises(ValueError):
        bootstrap_iterate(2, 0.0)
    with pytest.raises(ValueError):
        bootstrap_map(1.0, 1, 1.0)
