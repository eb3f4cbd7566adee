import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rectspec import curve_model as cm
from rectspec.chord_space import (
    Chord,
    CurveStrip,
    TorusLinkSpec,
    boundary_direction,
    choose_epsilon,
    fiber_section,
    strip_map,
    tangency_parameters,
)
from rectspec.errors import CurveValidationError, DegenerateChord


def test_strip_map_circle_diameter():
    p = strip_map(cm.unit_circle(), Chord.of(0.0, math.pi), 0.01)
    assert abs(p.midpoint) < 1e-15
    assert p.w == pytest.approx(4.0)
    assert p.phi == pytest.approx(0.0, abs=1e-12) or p.phi == pytest.approx(2 * math.pi)
    assert p.rho == pytest.approx(3.99)


def test_strip_map_quarter_chord():
    p = strip_map(cm.unit_circle(), Chord.of(0.0, math.pi / 2), 0.01)
    assert p.midpoint == pytest.approx((1 + 1j) / 2)
    assert p.w == pytest.approx(-2j)
    assert p.phi == pytest.approx(3 * math.pi / 2)
    assert p.rho == pytest.approx(1.99)


def test_strip_map_degenerate_chord():
    with pytest.raises(DegenerateChord):
        strip_map(cm.unit_circle(), Chord.of(0.0, 1e-4), 1e-6)


@settings(deadline=None, max_examples=60)
@given(
    st.floats(min_value=0.0, max_value=2 * math.pi, allow_nan=False),
    st.floats(min_value=0.1, max_value=2 * math.pi - 0.1, allow_nan=False),
)
def test_strip_map_unordered(a, gap):
    curve = cm.random_smooth_curve(4)
    b = a + gap
    p, q = strip_map(curve, Chord.of(a, b), 1e-6), strip_map(curve, Chord.of(b, a), 1e-6)
    assert p == q
    assert p.rho == pytest.approx(abs(p.w) - 1e-6)
    assert abs(abs(p.w) * np.exp(1j * p.phi) - p.w) < 1e-9


def test_choose_epsilon():
    assert choose_epsilon(cm.unit_circle()) == pytest.approx(4e-6, rel=1e-9)
    ellipse = cm.JordanCurve.from_modes({1: 1.5, -1: 0.5})
    assert choose_epsilon(ellipse) == pytest.approx(1.6e-5, rel=1e-9)
    with pytest.raises(CurveValidationError):
        choose_epsilon(cm.JordanCurve.from_modes({2: 1.0}))


def test_boundary_direction_circle():
    for t in (0.0, 0.3, 2.0):
        assert boundary_direction(cm.unit_circle(), t) == pytest.approx((2 * t + math.pi) % (2 * math.pi))


def test_tangency_parameters_circle():
    assert tangency_parameters(cm.unit_circle(), 0.0) == pytest.approx([math.pi / 2, 3 * math.pi / 2], abs=1e-9)
    roots = tangency_parameters(cm.unit_circle(), math.pi)
    assert len(roots) == 2
    # t = 0 may come back as 2π
    folded = sorted(min(r, 2 * math.pi - r) for r in roots)
    assert folded == pytest.approx([0.0, math.pi], abs=1e-9)


def test_fiber_section_circle():
    section = fiber_section(cm.unit_circle(), 0.0, resolution=256)
    assert [e.t for e in section.endpoints] == pytest.approx([math.pi / 2, 3 * math.pi / 2], abs=1e-9)
    (poly,) = section.polylines
    # horizontal chords: midpoints on the imaginary axis
    assert np.max(np.abs(poly[:, 0])) < 1e-8
    assert np.all(poly[1:-1, 2] > 0)
    assert poly[0, 2] == 0.0 and poly[-1, 2] == 0.0


@pytest.mark.parametrize("phi", [0.0, math.pi / 2, math.pi, 4.0])
def test_fiber_section_boundary_chords_at_default_eps(phi):
    # at ε = 4e-6 the boundary chord sits at the roundoff floor of |Δ|²
    curve = cm.unit_circle()
    eps = choose_epsilon(curve)
    section = fiber_section(curve, phi, resolution=256, eps=eps)
    assert len(section.endpoints) == 2
    for end in section.endpoints:
        on_curve = cm.evaluate(curve, end.t)
        assert abs(complex(end.point[0], end.point[1]) - on_curve) < math.sqrt(eps)
        assert end.point[2] == 0.0


def test_fiber_section_ellipse_two_endpoints():
    ellipse = cm.JordanCurve.from_modes({1: 1.5, -1: 0.5})
    for phi in (0.0, 0.7, 2.5):
        section = fiber_section(ellipse, phi, resolution=256)
        assert len(section.endpoints) == 2
        assert section.max_height() > 0


def test_curve_strip_rotation_shifts_phi():
    strip = CurveStrip(cm.unit_circle(), 4e-6, resolution=128)
    turned = strip.rotated(math.pi / 3)
    section = turned.section(math.pi / 3)
    assert section.phi == pytest.approx(math.pi / 3)
    assert len(section.endpoints) == 2
    p = turned.strip_point(Chord.of(0.0, math.pi))
    assert p.phi == pytest.approx(math.pi / 3)


@pytest.mark.parametrize("n,k,count", [(2, 1, 1), (4, 2, 2), (6, 3, 3)])
def test_torus_link_components(n, k, count):
    spec = TorusLinkSpec(n, k)
    assert spec.component_count == count
    assert spec.winding_pattern == (1, 2)
    components = spec.components(64)
    assert len(components) == count
    for comp in components:
        assert all(spec.contains(g, r) for g, r in comp)


def test_torus_link_rejects_bad_indices():
    with pytest.raises(ValueError):
        TorusLinkSpec(0, 1)
