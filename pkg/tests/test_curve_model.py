import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from rectspec import corpus, curve_model as cm
from rectspec.errors import CurveFitError


def ellipse_15_05():
    return cm.JordanCurve.from_modes({1: 1.5, -1: 0.5}, name="ellipse-1.5-0.5")


def test_evaluate_circle_and_ellipse():
    circle = cm.unit_circle()
    assert cm.evaluate(circle, 0.0) == pytest.approx(1 + 0j)
    assert cm.evaluate(circle, math.pi / 2) == pytest.approx(1j)
    assert cm.evaluate(ellipse_15_05(), 0.0) == pytest.approx(2 + 0j)


def test_derivatives():
    circle = cm.unit_circle()
    assert cm.derivative(circle, 0.0) == pytest.approx(1j)
    assert cm.derivative(circle, math.pi) == pytest.approx(-1j)
    assert cm.derivative(ellipse_15_05(), 0.0) == pytest.approx(1j)
    assert cm.second_derivative(circle, 0.0) == pytest.approx(-1 + 0j)


def test_jet_wraps_parameter():
    j = cm.jet(cm.unit_circle(), 2 * math.pi + 0.5)
    assert j.t == pytest.approx(0.5)
    assert j.value == pytest.approx(np.exp(0.5j))
    assert j.deriv == pytest.approx(1j * np.exp(0.5j))
    assert j.deriv2 == pytest.approx(-np.exp(0.5j))


def test_evaluate_is_vectorized():
    t = cm.parameter_grid(16)
    out = cm.evaluate(cm.unit_circle(), t)
    assert out.shape == (16,)
    assert_allclose(out, np.exp(1j * t), atol=1e-14)


@settings(deadline=None, max_examples=50)
@given(st.floats(min_value=-20.0, max_value=20.0, allow_nan=False))
def test_periodicity(t):
    curve = cm.random_smooth_curve(3)
    assert abs(cm.evaluate(curve, t) - cm.evaluate(curve, t + 2 * math.pi)) < 1e-12


def test_validate():
    assert cm.validate(cm.unit_circle()).valid
    assert cm.validate(ellipse_15_05()).valid

    doubled = cm.JordanCurve.from_modes({2: 1.0})
    verdict = cm.validate(doubled)
    assert not verdict.valid
    assert verdict.self_intersections
    assert "self-intersection" in verdict.summary()


def test_validate_rejects_constant_curve():
    verdict = cm.validate(cm.JordanCurve.from_modes({0: 1.0, 1: 0.0}))
    assert not verdict.valid


def test_from_samples_recovers_coefficients():
    circle_fit = cm.from_samples(cm.sample(cm.unit_circle(), 64), 4)
    assert abs(circle_fit.coefficient(1) - 1) < 1e-12
    others = [abs(circle_fit.coefficient(k)) for k in range(-4, 5) if k != 1]
    assert max(others) < 1e-12

    ellipse_fit = cm.from_samples(cm.sample(ellipse_15_05(), 64), 4)
    assert abs(ellipse_fit.coefficient(1) - 1.5) < 1e-12
    assert abs(ellipse_fit.coefficient(-1) - 0.5) < 1e-12


def test_from_samples_too_few_points():
    with pytest.raises(CurveFitError):
        cm.from_samples([1, 1j, -1], 4)


def test_random_smooth_curve():
    flat = cm.random_smooth_curve(1, decay=0.0)
    assert flat.coefficient(1) == 1
    assert np.count_nonzero(flat.coefficients) == 1
    a, b = cm.random_smooth_curve(7), cm.random_smooth_curve(7)
    assert a.same_coefficients(b)
    assert cm.validate(cm.random_smooth_curve(7, K=6, decay=0.2)).valid
    with pytest.raises(ValueError):
        cm.random_smooth_curve(1, decay=-1.0)


def test_geometry_helpers():
    circle = cm.unit_circle()
    assert cm.diameter(circle) == pytest.approx(2.0, abs=1e-9)
    assert cm.max_curvature(circle) == pytest.approx(1.0)
    assert cm.turning_number(circle) == 1
    assert cm.winding_number(circle) == 1
    assert cm.winding_number(circle, 3 + 0j) == 0
    assert cm.diameter(ellipse_15_05()) == pytest.approx(4.0, abs=1e-9)


def test_curve_json_and_csv(tmp_path):
    curve = cm.random_smooth_curve(2)
    path = cm.save_curve(curve, str(tmp_path / "curve.json"))
    assert cm.load_curve(path).same_coefficients(curve, tol=1e-15)

    pts = cm.sample(cm.unit_circle(), 32)
    csv = tmp_path / "samples.csv"
    csv.write_text("re,im\n" + "\n".join(f"{float(p.real)!r},{float(p.imag)!r}" for p in pts))
    assert_allclose(cm.load_samples(str(csv)), pts, atol=1e-15)


def test_load_samples_without_numeric_rows(tmp_path):
    csv = tmp_path / "samples.csv"
    csv.write_text("re,im\nnp.float64(1.0),np.float64(0.0)\nnan,nan\n")
    with pytest.raises(CurveFitError):
        cm.load_samples(str(csv))


@pytest.mark.parametrize("name", ["circle", "ellipse-2-1", "ellipse-4-1", "random-1", "random-2", "random-5"])
def test_derivative_matches_central_differences(name):
    curve = corpus.curve(name)
    t = np.random.default_rng(11).uniform(0.0, 2 * math.pi, 100)
    h = 1e-4
    fd = (cm.evaluate(curve, t + h) - cm.evaluate(curve, t - h)) / (2 * h)
    fd2 = (cm.derivative(curve, t + h) - cm.derivative(curve, t - h)) / (2 * h)
    scale = max(1.0, float(np.max(np.abs(cm.derivative(curve, t)))))
    assert np.max(np.abs(cm.derivative(curve, t) - fd)) < 1e-6 * scale
    assert np.max(np.abs(cm.second_derivative(curve, t) - fd2)) < 1e-6 * scale
