"""
Conforming simplicial triangulations of axis-aligned boxes.

Vertices are numbered lexicographically with the first axis running fastest, and
every cell lists its vertices in ascending order. Facets and edges inherit that
ordering, so an edge is always oriented from its lower to its higher vertex index.
"""
import logging
from itertools import combinations, permutations
from math import factorial
from typing import List, NamedTuple, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)


class Error(Exception):
    """Base class for exceptions in this module."""


class InvalidBoxError(Error):
    """Raised when a box specification is not usable."""


class MeshError(Error):
    """Raised when the generated connectivity is not conforming."""


class PointOutsideCellError(Error):
    """Raised when a point is queried in a cell that does not contain it."""


class BoxSpec:
    """
    Axis-aligned box ``[lower, upper]`` with a number of grid intervals per axis.

    :param lower: lower corner, a scalar is applied to every axis
    :param upper: upper corner, a scalar is applied to every axis
    :param subdivisions: grid intervals per axis, a scalar is applied to every axis
    :param dim: number of axes
    """

    def __init__(self, lower: Union[float, Sequence[float]] = -1.0,
                 upper: Union[float, Sequence[float]] = 1.0,
                 subdivisions: Union[int, Sequence[int]] = 1, dim: int = 2):
        if dim not in (2, 3):
            raise InvalidBoxError("Box dimension must be 2 or 3, got {d}".format(d=dim))
        self.dim = dim
        self.lower = self._expand(lower, float, "lower")
        self.upper = self._expand(upper, float, "upper")
        self.subdivisions = self._expand(subdivisions, int, "subdivisions")

        if np.any(self.upper <= self.lower):
            raise InvalidBoxError("Upper corner {u} must exceed lower corner {l} on every axis"
                                  .format(u=self.upper.tolist(), l=self.lower.tolist()))
        if np.any(self.subdivisions < 1):
            raise InvalidBoxError("Subdivisions must be at least 1 on every axis, got {s}"
                                  .format(s=self.subdivisions.tolist()))

    def _expand(self, value, kind, name):
        array = np.atleast_1d(np.asarray(value))
        if array.size == 1:
            array = np.repeat(array, self.dim)
        if array.size != self.dim:
            raise InvalidBoxError("{n} needs {d} entries, got {v}".format(
                n=name, d=self.dim, v=array.tolist()))
        if kind is int:
            if not np.all(np.equal(np.mod(array, 1), 0)):
                raise InvalidBoxError("{n} must be integers, got {v}".format(n=name, v=array.tolist()))
            return array.astype(np.int64)
        return array.astype(np.float64)

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def __repr__(self):
        return "BoxSpec(lower={l}, upper={u}, subdivisions={s})".format(
            l=self.lower.tolist(), u=self.upper.tolist(), s=self.subdivisions.tolist())


class InteriorFacet(NamedTuple):
    facet: int
    cells: tuple
    normal: np.ndarray


def _freeze(*arrays):
    for array in arrays:
        array.setflags(write=False)


class Mesh:
    """
    Simplicial mesh with facet, edge and orientation data.

    Local facet ``i`` of a cell is the facet opposite its local vertex ``i``. The
    normal of a facet points out of its first cell, which is the lower-numbered of
    the two cells sharing it. Boundary facets have a single cell and an outward
    normal; their second cell is stored as ``-1``.

    :param vertices: vertex coordinates, shape (nv, dim)
    :param cells: vertex indices per cell in ascending order, shape (nc, dim + 1)
    """

    def __init__(self, vertices: np.ndarray, cells: np.ndarray):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.cells = np.ascontiguousarray(cells, dtype=np.int64)
        self.dim = self.vertices.shape[1]

        if self.cells.shape[1] != self.dim + 1:
            raise MeshError("Cells of a {d}D mesh need {n} vertices".format(d=self.dim, n=self.dim + 1))
        if np.any(np.diff(self.cells, axis=1) <= 0):
            raise MeshError("Cell vertices must be listed in ascending order")

        self._build_geometry()
        self._build_facets()
        self._build_edges()
        _freeze(self.vertices, self.cells)

        logger.debug("Mesh built: %d vertices, %d cells, %d facets (%d interior), %d edges",
                     self.num_vertices, self.num_cells, self.num_facets,
                     len(self.interior_facet_ids), self.num_edges)

    def _build_geometry(self):
        d = self.dim
        coords = self.vertices[self.cells]
        jacobian = np.swapaxes(coords[:, 1:, :] - coords[:, :1, :], 1, 2)
        det = np.linalg.det(jacobian)
        if np.any(np.abs(det) <= 1e-14 * np.max(np.abs(det))):
            raise MeshError("Degenerate cell in mesh")

        grad = np.empty((self.num_cells, d + 1, d))
        grad[:, 1:, :] = np.linalg.inv(jacobian)
        grad[:, 0, :] = -grad[:, 1:, :].sum(axis=1)

        self.cell_volume = np.abs(det) / factorial(d)
        self.grad_lambda = grad
        pairs = list(combinations(range(d + 1), 2))
        lengths = np.stack([np.linalg.norm(coords[:, a] - coords[:, b], axis=1) for a, b in pairs], axis=1)
        self.cell_diameter = lengths.max(axis=1)
        _freeze(self.cell_volume, self.grad_lambda, self.cell_diameter)

    def _build_facets(self):
        d = self.dim
        nc = self.num_cells
        local = np.stack([np.delete(self.cells, i, axis=1) for i in range(d + 1)], axis=1)
        self.facets, inverse = np.unique(local.reshape(-1, d), axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        self.cell_to_facet = inverse.reshape(nc, d + 1)

        counts = np.bincount(inverse, minlength=len(self.facets))
        if np.any(counts > 2):
            raise MeshError("Non-conforming mesh: a facet is shared by more than two cells")

        order = np.argsort(inverse, kind='stable')
        starts = np.cumsum(counts) - counts
        owner_cell = order // (d + 1)
        owner_local = order % (d + 1)

        self.facet_to_cell = np.full((len(self.facets), 2), -1, dtype=np.int64)
        self.facet_local = np.full((len(self.facets), 2), -1, dtype=np.int64)
        self.facet_to_cell[:, 0] = owner_cell[starts]
        self.facet_local[:, 0] = owner_local[starts]
        shared = counts == 2
        self.facet_to_cell[shared, 1] = owner_cell[starts[shared] + 1]
        self.facet_local[shared, 1] = owner_local[starts[shared] + 1]

        first, first_local = self.facet_to_cell[:, 0], self.facet_local[:, 0]
        grad = self.grad_lambda[first, first_local]
        grad_norm = np.linalg.norm(grad, axis=1)
        self.facet_normal = -grad / grad_norm[:, None]
        self.facet_area = d * self.cell_volume[first] * grad_norm

        self.boundary_facet = ~shared
        self.interior_facet_ids = np.flatnonzero(shared)
        self.boundary_vertex = np.zeros(self.num_vertices, dtype=bool)
        self.boundary_vertex[self.facets[self.boundary_facet].ravel()] = True

        # +1 where the cell is the first cell of its local facet
        self.cell_facet_sign = np.where(self.facet_to_cell[self.cell_to_facet, 0]
                                        == np.arange(nc)[:, None], 1.0, -1.0)
        _freeze(self.facets, self.cell_to_facet, self.facet_to_cell, self.facet_local,
                self.facet_normal, self.facet_area, self.boundary_facet, self.interior_facet_ids,
                self.boundary_vertex, self.cell_facet_sign)

    def _build_edges(self):
        d = self.dim
        nv = self.num_vertices
        self.local_edges = np.array(list(combinations(range(d + 1), 2)), dtype=np.int64)
        local = self.cells[:, self.local_edges]
        self.edges, inverse = np.unique(local.reshape(-1, 2), axis=0, return_inverse=True)
        self.cell_to_edge = np.asarray(inverse).reshape(self.num_cells, len(self.local_edges))

        # An interior edge can join two boundary vertices, so flag edges through
        # the boundary facets that contain them.
        edge_keys = self.edges[:, 0] * nv + self.edges[:, 1]
        boundary = self.facets[self.boundary_facet]
        facet_pairs = np.concatenate([boundary[:, [a, b]] for a, b in combinations(range(d), 2)])
        positions = np.searchsorted(edge_keys, facet_pairs[:, 0] * nv + facet_pairs[:, 1])
        self.boundary_edge = np.zeros(len(self.edges), dtype=bool)
        self.boundary_edge[positions] = True
        _freeze(self.local_edges, self.edges, self.cell_to_edge, self.boundary_edge)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @property
    def num_facets(self) -> int:
        return len(self.facets)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def h(self) -> float:
        """Maximum cell diameter."""
        return float(self.cell_diameter.max())

    def map_points(self, barycentric: np.ndarray, cells=None) -> np.ndarray:
        """
        Maps barycentric coordinates to physical points.

        :param barycentric: shape (nq, dim + 1)
        :param cells: cell indices, all cells by default
        :return: points of shape (ncells, nq, dim)
        """
        cells = slice(None) if cells is None else cells
        return np.einsum('qi,cid->cqd', barycentric, self.vertices[self.cells[cells]])

    def barycentric(self, cell: int, point, tol: float = 1e-12) -> np.ndarray:
        """
        Barycentric coordinates of ``point`` in ``cell``.

        :raises PointOutsideCellError: when a coordinate is below ``-tol``
        """
        point = np.asarray(point, dtype=np.float64)
        origin = self.vertices[self.cells[cell, 0]]
        lam = np.empty(self.dim + 1)
        lam[1:] = self.grad_lambda[cell, 1:] @ (point - origin)
        lam[0] = 1.0 - lam[1:].sum()
        if np.any(lam < -tol):
            raise PointOutsideCellError("Point {p} is not inside cell {c}".format(p=point.tolist(), c=cell))
        return lam

    def __repr__(self):
        return "Mesh(dim={d}, vertices={v}, cells={c})".format(
            d=self.dim, v=self.num_vertices, c=self.num_cells)


def build_box_mesh(spec: BoxSpec, dim: int = None) -> Mesh:
    """
    Triangulates a box. Every grid square is split into two triangles along the
    diagonal through its lowest and highest corners; every grid cube is split into
    the six Kuhn tetrahedra sharing that diagonal.

    :param spec: box to triangulate
    :param dim: dimension, must match ``spec.dim`` when given
    """
    if dim is not None and dim != spec.dim:
        raise InvalidBoxError("Box is {b}D but a {d}D mesh was requested".format(b=spec.dim, d=dim))
    d = spec.dim
    n = spec.subdivisions

    axes = [np.linspace(spec.lower[i], spec.upper[i], n[i] + 1) for i in range(d)]
    grid = np.meshgrid(*axes, indexing='ij')
    vertices = np.stack([g.ravel(order='F') for g in grid], axis=1)

    strides = np.cumprod(np.concatenate([[1], n[:-1] + 1]))
    base = np.zeros(tuple(n), dtype=np.int64)
    for i in range(d):
        shape = [1] * d
        shape[i] = n[i]
        base = base + (np.arange(n[i]) * strides[i]).reshape(shape)
    base = base.ravel(order='F')

    cells = []
    for perm in permutations(range(d)):
        path = np.concatenate([[0], np.cumsum(strides[list(perm)])])
        cells.append(base[:, None] + path[None, :])
    cells = np.stack(cells, axis=1).reshape(-1, d + 1)

    mesh = Mesh(vertices, cells)
    total = mesh.cell_volume.sum()
    if abs(total - spec.volume) > 1e-13 * spec.volume:
        raise MeshError("Cell volumes sum to {t}, box volume is {v}".format(t=total, v=spec.volume))
    return mesh


def interior_facets(mesh: Mesh) -> List[InteriorFacet]:
    """
    Lists interior facets with their two cells and the normal pointing from the
    first cell into the second.
    """
    return [InteriorFacet(int(f), (int(mesh.facet_to_cell[f, 0]), int(mesh.facet_to_cell[f, 1])),
                          mesh.facet_normal[f])
            for f in mesh.interior_facet_ids]
