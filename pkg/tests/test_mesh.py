"""Mesh construction, geometry queries and the plain-text format."""
import numpy as np
import pytest

from ksbench import mesh as meshmod
from ksbench.errors import MeshError


def test_unit_square_area_and_counts(square64):
    assert square64.area == pytest.approx(1.0, rel=1e-12)
    assert square64.num_vertices == 65 * 65
    assert square64.genus == 0


def test_disk_area_converges(disk128, disk256):
    err128 = abs(disk128.area - np.pi)
    err256 = abs(disk256.area - np.pi)
    assert err128 / np.pi < 2e-3
    assert err256 < err128


def test_annulus_has_two_loops_and_genus_one():
    ann = meshmod.build_builtin("annulus", 64)
    assert ann.genus == 1
    assert len(meshmod.boundary_loops(ann)) == 2


def test_boundary_distance_square_oracle(square64):
    pts = np.array([[0.5, 0.5], [0.1, 0.3], [0.97, 0.5], [0.5, 0.02]])
    expected = np.array([0.5, 0.1, 0.03, 0.02])
    got = meshmod.boundary_distances(square64, pts)
    assert np.allclose(got, expected, atol=1e-12)


def test_boundary_distance_chunking_matches_direct(disk128):
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.7, 0.7, size=(50, 2))
    got = meshmod.boundary_distances(disk128, pts)
    single = np.array([meshmod.boundary_distance(disk128, p) for p in pts])
    assert np.allclose(got, single, atol=1e-12)


def test_contains_square(square64):
    pts = np.array([[0.5, 0.5], [1.5, 0.5], [-0.01, 0.2], [1.0, 0.5]])
    inside = meshmod.contains(square64, pts)
    assert inside.tolist() == [True, False, False, True]


def test_nearest_boundary_point_is_on_boundary(disk128):
    p = meshmod.nearest_boundary_point(disk128, np.array([0.3, 0.1]))
    assert meshmod.boundary_distance(disk128, p) < 1e-12
    assert np.linalg.norm(p) == pytest.approx(1.0, abs=2e-3)


def test_min_edge_length(square64):
    assert meshmod.min_edge_length(square64) == pytest.approx(1.0 / 64)


def test_load_mesh_roundtrip_and_orientation():
    text = "4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n"
    m = meshmod.load_mesh(text)
    assert m.num_vertices == 4
    assert m.area == pytest.approx(1.0)
    assert len(m.boundary_edges) == 4


def test_load_mesh_rejects_malformed():
    with pytest.raises(MeshError):
        meshmod.load_mesh("")
    with pytest.raises(MeshError):
        meshmod.load_mesh("3 1\n0 0\n1 0\n0 1 2\n")
    with pytest.raises(MeshError):
        meshmod.load_mesh("3 1\n0 0\n1 0\nx y\n0 1 2\n")


def test_lumped_masses_sum_to_area(disk128):
    assert disk128.lumped_masses().sum() == pytest.approx(disk128.area)
