import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from holderlab.flux import (
    FluxModel,
    eval_deriv,
    fit_alpha,
    nonlinearity_measure,
    sample_directions,
    spanning_check,
    wronskian,
)


def test_burgers_derivatives():
    f2 = FluxModel.burgers(2)
    np.testing.assert_allclose(eval_deriv(f2, 0.5, 1), [0.5, 0.25])
    np.testing.assert_allclose(eval_deriv(f2, 0.0, 2), [1.0, 0.0])
    np.testing.assert_allclose(eval_deriv(FluxModel.burgers(3), 0.0, 4), [0.0, 0.0, 6.0])


def test_eval_deriv_rejects_bad_input():
    f = FluxModel.burgers(2)
    with pytest.raises(ValueError):
        eval_deriv(f, 1.5, 1)
    with pytest.raises(ValueError):
        eval_deriv(f, 0.5, 5)


def test_tabulated_matches_polynomial():
    f = FluxModel.burgers(2)
    tab = FluxModel.from_callable(lambda u: np.stack([u**2 / 2, u**3 / 3], axis=-1), 2)
    v = np.linspace(0.05, 0.95, 7)
    np.testing.assert_allclose(tab.deriv(v, 1), f.deriv(v, 1), atol=1e-6)
    np.testing.assert_allclose(tab.deriv(v, 2), f.deriv(v, 2), atol=1e-5)


def test_config_roundtrip():
    f = FluxModel.polynomial([[0, 0, 0.5], [0, 0, 0, 1 / 3]])
    g = FluxModel.from_config(f.to_config())
    np.testing.assert_allclose(g.deriv(0.3, 1), f.deriv(0.3, 1))


def test_config_error_names_key():
    with pytest.raises(ValueError, match="kind"):
        FluxModel.from_config({"d": 2})


def test_measures():
    assert nonlinearity_measure(FluxModel.burgers(1), 0.0, [1.0], 0.1) == pytest.approx(0.1)
    assert nonlinearity_measure(FluxModel.burgers(2), 0.0, [0.0, 1.0], 0.01) == pytest.approx(0.1)


def test_measure_requires_unit_direction():
    with pytest.raises(ValueError):
        nonlinearity_measure(FluxModel.burgers(2), 0.0, [1.0, 1.0], 0.1)


def test_measure_matches_counting():
    # tabulated flux goes through the counting path
    f = FluxModel.burgers(2)
    tab = FluxModel.from_callable(lambda u: np.stack([u**2 / 2, u**3 / 3], axis=-1), 2)
    w = np.array([-0.1, 0.6, -0.8])
    w /= np.linalg.norm(w)
    for delta in (0.05, 0.01):
        a = nonlinearity_measure(f, w[0], w[1:], delta)
        b = nonlinearity_measure(tab, w[0], w[1:], delta)
        assert abs(a - b) < 1e-4


@settings(max_examples=40, deadline=None)
@given(phi=st.floats(-1.5, 1.5), theta=st.floats(0, 2 * np.pi), delta=st.floats(1e-4, 0.5))
@example(phi=0.0, theta=5e-324, delta=0.5)  # denormal leading coefficient
def test_measure_monotone_and_bounded(phi, theta, delta):
    f = FluxModel.burgers(2)
    tau = np.sin(phi)
    xi = np.cos(phi) * np.array([np.cos(theta), np.sin(theta)])
    m1 = nonlinearity_measure(f, tau, xi, delta)
    m2 = nonlinearity_measure(f, tau, xi, 2 * delta)
    assert 0 <= m1 <= m2 <= 1


@pytest.mark.parametrize("d", [1, 2, 3])
def test_fit_alpha_burgers(d):
    rep = fit_alpha(FluxModel.burgers(d), seed=3)
    assert abs(rep.alpha - 1 / d) < 0.05
    assert not rep.inconclusive


def test_fit_alpha_validates_grid():
    with pytest.raises(ValueError):
        fit_alpha(FluxModel.burgers(1), delta_grid=np.linspace(0.01, 0.05, 5))


def test_sample_directions_unit():
    dirs = sample_directions(3, 10, seed=1)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0)


def test_wronskian_and_spanning():
    f = FluxModel.burgers(2)
    np.testing.assert_allclose(wronskian(f, 0.3), [[1.0, 0.6], [0.0, 1.0]])
    assert spanning_check(f, 0.0) == (True, pytest.approx(1.0))
    flat = FluxModel.polynomial([[0, 0, 0.5], [0, 0, 1.0]])
    ok, smin = spanning_check(flat, 0.4)
    assert not ok and smin == pytest.approx(0.0, abs=1e-12)
