import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rectspec import curve_model as cm
from rectspec.chord_space import CurveStrip, FiberSection, SectionEndpoint, choose_epsilon
from rectspec.errors import DisjointnessViolated, ExcessBoundaryPoints, PreconditionError
from rectspec.ordering import (
    antisymmetry_suite,
    apex_parities,
    closed_loops,
    cone_parity,
    cycle_suite,
    parity_jump_scan,
    precedes,
    precedes_sections,
    sections_parity,
    segments_cross_count,
    strips_disjoint,
    total_order,
)
from rectspec.rect_solver import solve_at_theta
from rectspec.strip_mesh import DomeStrip, dome_family, mesh_from_dome

LOW = DomeStrip(1.0, 1.0)
TALL = DomeStrip(2.0, -1.0)


@st.composite
def dome_families(draw, size=3):
    heights = draw(st.lists(st.integers(1, 50), min_size=size, max_size=size, unique=True))
    degrees = draw(st.lists(st.integers(0, 359), min_size=size, max_size=size, unique=True))
    return [DomeStrip(h / 10.0, complex(np.exp(1j * math.radians(d)))) for h, d in zip(heights, degrees)]


def test_cone_parity_far_target():
    section = LOW.section(0.5)
    far = np.array([[[10.0, 10.0, 0.5], [11.0, 10.0, 0.5]]])
    assert cone_parity(closed_loops(section), far, np.array([0.1, 0.2, 4.0])) == 0


def test_dome_pair_parities():
    apex = np.array([0.3, 0.2, 4.0])
    low, tall = LOW.section(0.5), TALL.section(0.5)
    assert sections_parity(low, tall, apex) == 0
    assert sections_parity(tall, low, apex) == 1


def test_precedes_domes():
    assert precedes(LOW, TALL)
    assert not precedes(TALL, LOW)
    with pytest.raises(DisjointnessViolated):
        precedes(LOW, LOW)


def test_precedes_meshes():
    low, tall = mesh_from_dome(LOW, 32), mesh_from_dome(TALL, 32)
    assert strips_disjoint(low, tall)
    assert precedes(low, tall, phi=0.5)
    assert not precedes(tall, low, phi=0.5)


@pytest.mark.parametrize("other,disjoint", [
    (TALL, True),
    (DomeStrip(3.0, 1j), True),
    (DomeStrip(2.0, 1.0), False),
    (DomeStrip(1.0, 1j), False),
])
def test_dome_disjointness_matches_meshes(other, disjoint):
    assert strips_disjoint(LOW, other) is disjoint
    assert strips_disjoint(mesh_from_dome(LOW, 32), mesh_from_dome(other, 32)) is disjoint


def test_parity_does_not_depend_on_apex():
    for phi in (0.2, 1.7, 4.0):
        bits = apex_parities(LOW.section(phi), TALL.section(phi), apexes=10, seed=3)
        assert bits == [0] * 10
        bits = apex_parities(TALL.section(phi), LOW.section(phi), apexes=10, seed=3)
        assert bits == [1] * 10


def test_segments_cross_count():
    P1 = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    P2 = np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]])
    P3 = np.array([[1.0, 1.0, 0.0], [-1.0, 1.0, 0.0]])
    assert segments_cross_count(P1, P2) == 1
    assert segments_cross_count(P1, P3) == 0


def test_excess_boundary_points():
    arc = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 1.0], [1.0, 0.0, 0.0]])
    ends = [SectionEndpoint(None, arc[0]), SectionEndpoint(None, arc[-1])]
    section = FiberSection(0.0, [arc, arc + [0.0, 2.0, 0.0]], ends * 2)
    with pytest.raises(ExcessBoundaryPoints):
        precedes_sections(section, LOW.section(0.0))


def test_antisymmetry_suite():
    report = antisymmetry_suite(LOW, TALL, fibers=20, seed=0)
    assert report.passed
    assert report.fibers_tested == 20
    for r in report.results:
        assert r.consistent
        assert r.crossings == 1
        assert (r.parity_ab, r.parity_ba) == (0, 1)
    with pytest.raises(PreconditionError):
        antisymmetry_suite(LOW, LOW, fibers=4)


def test_cycle_suite_and_total_order():
    family = dome_family([1.0, 2.0, 3.0])
    report = cycle_suite(family)
    assert report.passed
    assert report.order == [0, 1, 2]
    assert not report.cycles
    shuffled = [family[2], family[0], family[1]]
    assert total_order(shuffled) == [1, 2, 0]


def test_cycle_suite_preconditions():
    with pytest.raises(PreconditionError):
        cycle_suite([LOW])
    with pytest.raises(PreconditionError, match="at least 3"):
        cycle_suite([LOW, TALL])
    with pytest.raises(PreconditionError, match="intersect"):
        cycle_suite([LOW, DomeStrip(1.0, 1j), TALL])


def test_total_order_of_a_pair():
    assert total_order([TALL, LOW]) == [1, 0]
    with pytest.raises(PreconditionError):
        total_order([LOW])
    with pytest.raises(PreconditionError, match="intersect"):
        total_order([LOW, DomeStrip(1.0, 1j)])


@settings(deadline=None, max_examples=20)
@given(dome_families())
def test_random_dome_families_order_by_height(family):
    report = cycle_suite(family, seed=1)
    assert report.passed
    assert report.order == sorted(range(len(family)), key=lambda i: family[i].apex_height)


def test_parity_jump_scan_domes():
    report = parity_jump_scan(LOW, TALL, fibers=16)
    assert report.applicable
    assert report.jumps == []
    assert set(report.parities) == {0}


def test_parity_jump_scan_skips_intersecting_domes():
    # equal apex heights: the sections cross on the axis at every fiber
    report = parity_jump_scan(DomeStrip(1.0, 1.0), DomeStrip(1.0, 1j), fibers=8)
    assert not report.applicable
    assert "meet" in report.reason
    assert report.jumps == []


def fiber_gap(a, b):
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def test_parity_jump_scan_brackets_rectangle_fibers():
    curve = cm.ellipse(2.0, 1.0)
    theta = math.pi / 2
    strip = CurveStrip(curve, choose_epsilon(curve), resolution=256)
    fibers = 64
    spacing = 2 * math.pi / fibers
    report = parity_jump_scan(strip, strip.rotated(theta), fibers=fibers)
    assert report.applicable

    # the wide and the tall rectangle of aspect tan(π/8), diagonals at ±π/8 and π/2 ± π/8
    expected = [math.pi / 4, 5 * math.pi / 4]
    assert len(report.jumps) == 2
    for phi in expected:
        assert min(fiber_gap(jump, phi) for jump in report.jumps) <= spacing

    # a rectangle at θ is a point of both strips over the fiber arg((γx − γy)²)
    witnesses = solve_at_theta(curve, theta, max_witnesses=8)
    assert witnesses
    for w in witnesses:
        phi = float(np.angle((cm.evaluate(curve, w.x) - cm.evaluate(curve, w.y)) ** 2))
        assert min(fiber_gap(jump, phi) for jump in report.jumps) <= spacing
