import numpy as np
import pytest

from spmhd.fem.mesh import (BoxSpec, InvalidBoxError, Mesh, MeshError, PointOutsideCellError,
                            build_box_mesh, interior_facets)


@pytest.fixture
def square():
    return build_box_mesh(BoxSpec(subdivisions=2, dim=2))


@pytest.fixture
def cube():
    return build_box_mesh(BoxSpec(subdivisions=2, dim=3))


@pytest.fixture(params=[2, 3])
def mesh(request):
    return build_box_mesh(BoxSpec(subdivisions=2, dim=request.param))


def test_unit_square_counts():
    mesh = build_box_mesh(BoxSpec(subdivisions=1, dim=2))
    assert mesh.num_vertices == 4
    assert mesh.num_cells == 2
    assert mesh.num_facets == 5
    assert mesh.num_edges == 5
    assert len(mesh.interior_facet_ids) == 1


def test_unit_cube_counts():
    mesh = build_box_mesh(BoxSpec(subdivisions=1, dim=3))
    assert mesh.num_vertices == 8
    assert mesh.num_cells == 6
    assert mesh.num_edges == 19
    assert mesh.num_facets == 18
    assert np.count_nonzero(mesh.boundary_facet) == 12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_euler_characteristic_2d(n):
    mesh = build_box_mesh(BoxSpec(subdivisions=n, dim=2))
    assert mesh.num_vertices - mesh.num_edges + mesh.num_cells == 1
    assert np.count_nonzero(mesh.boundary_facet) == 4 * n


@pytest.mark.parametrize("n", [1, 2])
def test_euler_characteristic_3d(n):
    mesh = build_box_mesh(BoxSpec(subdivisions=n, dim=3))
    assert mesh.num_vertices - mesh.num_edges + mesh.num_facets - mesh.num_cells == 1
    assert np.count_nonzero(mesh.boundary_facet) == 12 * n ** 2


@pytest.mark.parametrize("dim, factor", [(2, 4), (3, 8)])
def test_refinement_multiplies_cells(dim, factor):
    coarse = build_box_mesh(BoxSpec(subdivisions=1, dim=dim))
    fine = build_box_mesh(BoxSpec(subdivisions=2, dim=dim))
    assert fine.num_cells == factor * coarse.num_cells
    assert fine.h == pytest.approx(coarse.h / 2)


def test_volumes_sum_to_box(mesh):
    assert mesh.cell_volume.sum() == pytest.approx(2.0 ** mesh.dim)
    assert np.all(mesh.cell_volume > 0)


def test_anisotropic_box():
    mesh = build_box_mesh(BoxSpec(lower=[0, 0], upper=[3, 1], subdivisions=[3, 2]))
    assert mesh.num_cells == 12
    assert mesh.cell_volume.sum() == pytest.approx(3.0)


def test_cells_and_edges_are_ascending(mesh):
    assert np.all(np.diff(mesh.cells, axis=1) > 0)
    assert np.all(mesh.edges[:, 0] < mesh.edges[:, 1])


def test_unit_normals(mesh):
    np.testing.assert_allclose(np.linalg.norm(mesh.facet_normal, axis=1), 1.0, atol=1e-14)


def test_cell_divergence_theorem(mesh):
    """The outward area-weighted normals of every cell sum to zero."""
    f = mesh.cell_to_facet
    weighted = mesh.cell_facet_sign[:, :, None] * mesh.facet_area[f][:, :, None] * mesh.facet_normal[f]
    np.testing.assert_allclose(weighted.sum(axis=1), 0.0, atol=1e-13)


def test_second_cell_sees_opposite_normal(mesh):
    for facet in interior_facets(mesh):
        c1, c2 = facet.cells
        assert c1 < c2
        local = mesh.facet_local[facet.facet, 1]
        grad = mesh.grad_lambda[c2, local]
        np.testing.assert_allclose(-grad / np.linalg.norm(grad), -facet.normal, atol=1e-13)
        assert mesh.cell_facet_sign[c1, mesh.facet_local[facet.facet, 0]] == 1.0
        assert mesh.cell_facet_sign[c2, local] == -1.0


def test_boundary_normals_point_outwards(mesh):
    for f in np.flatnonzero(mesh.boundary_facet):
        cell = mesh.facet_to_cell[f, 0]
        assert mesh.facet_to_cell[f, 1] == -1
        outward = mesh.vertices[mesh.facets[f]].mean(axis=0) - mesh.vertices[mesh.cells[cell]].mean(axis=0)
        assert outward @ mesh.facet_normal[f] > 0
        assert mesh.cell_facet_sign[cell, mesh.facet_local[f, 0]] == 1.0


def test_boundary_vertices(square):
    assert np.count_nonzero(square.boundary_vertex) == 8
    centre = np.flatnonzero(~square.boundary_vertex)
    np.testing.assert_allclose(square.vertices[centre[0]], [0.0, 0.0])


def test_boundary_edges_of_cube(cube):
    """Edges on the boundary are exactly those whose midpoint lies on a box face."""
    midpoints = cube.vertices[cube.edges].mean(axis=1)
    on_face = np.any(np.isclose(np.abs(midpoints), 1.0), axis=1)
    np.testing.assert_array_equal(cube.boundary_edge, on_face)


def test_map_points(square):
    centroid = np.full((1, 3), 1.0 / 3.0)
    points = square.map_points(centroid)
    assert points.shape == (square.num_cells, 1, 2)
    np.testing.assert_allclose(points[:, 0], square.vertices[square.cells].mean(axis=1))


def test_barycentric_of_vertex(square):
    lam = square.barycentric(0, square.vertices[square.cells[0, 1]])
    np.testing.assert_allclose(lam, [0.0, 1.0, 0.0], atol=1e-14)


def test_point_outside_cell(square):
    with pytest.raises(PointOutsideCellError):
        square.barycentric(0, [5.0, 5.0])


@pytest.mark.parametrize("kwargs", [
    {'lower': 1.0, 'upper': -1.0},
    {'lower': 0.0, 'upper': 0.0},
    {'subdivisions': 0},
    {'subdivisions': 1.5},
    {'lower': [0.0, 0.0, 0.0], 'dim': 2},
    {'dim': 4},
])
def test_invalid_box(kwargs):
    with pytest.raises(InvalidBoxError):
        BoxSpec(**kwargs)


def test_dimension_mismatch():
    with pytest.raises(InvalidBoxError):
        build_box_mesh(BoxSpec(dim=2), dim=3)


def test_unsorted_cells_rejected():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(MeshError):
        Mesh(vertices, np.array([[1, 0, 2]]))


def test_degenerate_cell_rejected():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    with pytest.raises(MeshError):
        Mesh(vertices, np.array([[0, 1, 2], [0, 1, 3]]))
