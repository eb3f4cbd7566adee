import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rectspec import curve_model as cm
from rectspec.chord_space import TorusLinkSpec, choose_epsilon
from rectspec.errors import MeshResolutionError, NonRegularFiber, PreconditionError
from rectspec.state import MeshFile
from rectspec.strip_mesh import (
    DomeStrip,
    boundary_loops,
    boundary_matches_link,
    boundary_winding,
    dome_family,
    euler_characteristic,
    load_mesh,
    mesh_from_curve,
    mesh_from_dome,
    mesh_from_file,
    meshes_disjoint,
    rotate_strip,
    rotation_intersection_profile,
    save_mesh,
    slice_at,
)


def phi_gap(a, b):
    d = np.abs(a - b) % (2 * math.pi)
    return np.minimum(d, 2 * math.pi - d)


@pytest.fixture(scope="module")
def circle_mesh():
    curve = cm.unit_circle()
    return mesh_from_curve(curve, choose_epsilon(curve), resolution=32)


def test_curve_mesh_topology(circle_mesh):
    assert euler_characteristic(circle_mesh) == 0
    assert len(boundary_loops(circle_mesh)) == 1
    winding = boundary_winding(circle_mesh)
    assert (abs(winding[0]), abs(winding[1])) == (1, 2)
    assert np.all(circle_mesh.vertices[:, 3] >= 0)
    assert_allclose(circle_mesh.vertices[circle_mesh.boundary, 3], 0.0)


def test_ellipse_mesh_topology():
    curve = cm.JordanCurve.from_modes({1: 1.5, -1: 0.5})
    mesh = mesh_from_curve(curve, choose_epsilon(curve), resolution=32)
    assert euler_characteristic(mesh) == 0
    assert boundary_matches_link([mesh], TorusLinkSpec(2, 1))


def test_resolution_too_small():
    with pytest.raises(MeshResolutionError):
        mesh_from_curve(cm.unit_circle(), 4e-6, resolution=2)
    with pytest.raises(MeshResolutionError):
        mesh_from_dome(DomeStrip(1.0), resolution=2)


def test_dome_boundary_is_torus_knot():
    mesh = mesh_from_dome(DomeStrip(1.0, 1.0), resolution=32)
    assert euler_characteristic(mesh) == 0
    assert boundary_matches_link([mesh], TorusLinkSpec(2, 1), check_points=True)


def test_dome_pair_boundary_is_two_component_link():
    meshes = [mesh_from_dome(DomeStrip(1.0, 1.0), 32), mesh_from_dome(DomeStrip(2.0, -1.0), 32)]
    assert boundary_matches_link(meshes, TorusLinkSpec(4, 2), check_points=True)
    assert not boundary_matches_link(meshes, TorusLinkSpec(2, 1))


def test_dome_family_boundaries():
    family = dome_family([1.0, 2.0, 3.0])
    assert [d.rotation for d in family] == pytest.approx([1.0, np.exp(2j * math.pi / 3), np.exp(4j * math.pi / 3)])
    meshes = [mesh_from_dome(d, 24) for d in family]
    assert boundary_matches_link(meshes, TorusLinkSpec(6, 3), check_points=True)
    with pytest.raises(PreconditionError):
        dome_family([1.0, 2.0, 3.0], n=2)


def test_dome_rejects_flat_apex():
    with pytest.raises(PreconditionError):
        DomeStrip(0.0)


def test_rotate_strip_group_action():
    mesh = mesh_from_dome(DomeStrip(1.0), 16)
    assert_allclose(rotate_strip(mesh, 1.0).vertices, mesh.vertices)
    u = np.exp(0.7j)
    back = rotate_strip(rotate_strip(mesh, 1 / u), u)
    assert_allclose(back.vertices[:, [0, 1, 3]], mesh.vertices[:, [0, 1, 3]])
    assert np.max(phi_gap(back.vertices[:, 2], mesh.vertices[:, 2])) < 1e-12


def test_rotated_dome_matches_rotated_construction():
    turned = rotate_strip(mesh_from_dome(DomeStrip(1.0, 1.0), 16), 1j)
    direct = mesh_from_dome(DomeStrip(1.0, 1j), 16)
    assert_allclose(turned.vertices[:, [0, 1, 3]], direct.vertices[:, [0, 1, 3]], atol=1e-14)
    assert np.max(phi_gap(turned.vertices[:, 2], direct.vertices[:, 2])) < 1e-12


def test_slice_at_dome():
    dome = DomeStrip(1.0, 1.0)
    section = slice_at(mesh_from_dome(dome, 32), 0.3)
    assert len(section.polylines) == 1
    assert len(section.endpoints) == 2
    assert all(e.point[2] == pytest.approx(0.0) for e in section.endpoints)
    assert section.max_height() == pytest.approx(1.0, abs=0.05)
    # midpoints lie on the line through 0 along the dome direction
    g = dome.direction(0.3)
    poly = section.polylines[0]
    assert np.max(np.abs(np.imag(np.conj(g) * (poly[:, 0] + 1j * poly[:, 1])))) < 0.1


def test_slice_at_vertex_level_is_not_regular():
    mesh = mesh_from_dome(DomeStrip(1.0, 1.0), 16)
    with pytest.raises(NonRegularFiber):
        slice_at(mesh, float(mesh.vertices[0, 2]))


def test_disjointness_of_domes():
    low = mesh_from_dome(DomeStrip(1.0, 1.0), 16)
    tall = mesh_from_dome(DomeStrip(2.0, -1.0), 16)
    same_height = mesh_from_dome(DomeStrip(1.0, 1j), 16)
    apart = meshes_disjoint(low, tall)
    assert apart.disjoint
    assert apart.distance > 0.1
    assert not meshes_disjoint(low, same_height).disjoint
    assert not meshes_disjoint(low, low).disjoint


def test_rotation_profile_circle(circle_mesh):
    profile = rotation_intersection_profile(circle_mesh, [0.5, 1.5, 2.5])
    assert len(profile.intersecting) == 3
    assert profile.fraction >= 1 / 3


def test_mesh_file_validation(tmp_path):
    mesh = mesh_from_dome(DomeStrip(1.0), 8)
    path = save_mesh(mesh, str(tmp_path / "dome.json"))
    loaded = load_mesh(path)
    assert euler_characteristic(loaded) == 0
    assert loaded.boundary == mesh.boundary

    bad = MeshFile(vertices=[(0, 0, 0, 0)] * 3, triangles=[(0, 1, 3)])
    with pytest.raises(PreconditionError):
        mesh_from_file(bad)
    negative = MeshFile(vertices=[(0, 0, 0, -1.0)] * 3, triangles=[(0, 1, 2)])
    with pytest.raises(PreconditionError):
        mesh_from_file(negative)
