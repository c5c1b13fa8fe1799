"""
Lowest-order finite element spaces on a :class:`~spmhd.fem.mesh.Mesh`.

============  ==========  ======================================  ==================
family        entities    degree of freedom                       boundary condition
============  ==========  ======================================  ==================
``RT0``       facets      flux along the stored facet normal       u . n = 0
``NED0``      edges       circulation from lower to higher vertex  u x n = 0
``CG1``       vertices    vertex value                             f = 0
``DG0``       cells       cell value                               none
============  ==========  ======================================  ==================

Constrained boundary entities get no global degree of freedom; they are marked
with ``-1`` in :attr:`Space.cell_dofs`. Orientation signs are folded into the
tabulated basis, so assembly never sees them.
"""
import logging
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np

from spmhd.fem.linalg import FactorHandle, TripletList, assemble, factorize, saddle_matrix, solve_saddle
from spmhd.fem.mesh import Mesh
from spmhd.fem.quadrature import simplex_rule

logger = logging.getLogger(__name__)

RT0 = 'RT0'
NED0 = 'NED0'
CG1 = 'CG1'
DG0 = 'DG0'
FAMILIES = (RT0, NED0, CG1, DG0)

ASSEMBLY_DEGREE = 4
INTERPOLATION_DEGREE = 8


class Error(Exception):
    """Base class for exceptions in this module."""


class SpaceMismatchError(Error):
    """Raised when fields or spaces are combined that do not fit together."""


class Space:
    """
    Discrete space of one family on one mesh.

    :param mesh: the mesh
    :param family: one of ``RT0``, ``NED0``, ``CG1``, ``DG0``
    """

    def __init__(self, mesh: Mesh, family: str):
        if family not in FAMILIES:
            raise SpaceMismatchError("Unknown family {f}, expected one of {a}".format(f=family, a=FAMILIES))
        self.mesh = mesh
        self.family = family
        nc = mesh.num_cells

        if family == RT0:
            boundary = mesh.boundary_facet
            local = mesh.cell_to_facet
            self.cell_signs = mesh.cell_facet_sign
            # local facet i holds every vertex but i
            self.local_vertices = np.array([[j for j in range(mesh.dim + 1) if j != i]
                                            for i in range(mesh.dim + 1)])
        elif family == NED0:
            boundary = mesh.boundary_edge
            local = mesh.cell_to_edge
            self.cell_signs = np.ones(local.shape)
            self.local_vertices = mesh.local_edges
        elif family == CG1:
            boundary = mesh.boundary_vertex
            local = mesh.cells
            self.cell_signs = np.ones(local.shape)
            self.local_vertices = np.arange(mesh.dim + 1)[:, None]
        else:
            boundary = np.zeros(nc, dtype=bool)
            local = np.arange(nc)[:, None]
            self.cell_signs = np.ones((nc, 1))
            self.local_vertices = np.arange(mesh.dim + 1)[None, :]

        self.dof_entity = np.flatnonzero(~boundary)
        self.entity_dof = np.full(len(boundary), -1, dtype=np.int64)
        self.entity_dof[self.dof_entity] = np.arange(len(self.dof_entity))
        self.boundary_entity = boundary
        self.cell_dofs = self.entity_dof[local]
        self._local_mask = self.cell_dofs >= 0

    @property
    def num_dofs(self) -> int:
        return len(self.dof_entity)

    @property
    def num_local(self) -> int:
        return self.cell_dofs.shape[1]

    @property
    def value_size(self) -> int:
        """Number of components of a basis function."""
        return self.mesh.dim if self.family in (RT0, NED0) else 1

    @property
    def is_vector(self) -> bool:
        return self.family in (RT0, NED0)

    def table(self, barycentric: np.ndarray, cells=None) -> np.ndarray:
        """
        Basis values at barycentric points with orientation signs applied.

        :param barycentric: points, shape (nq, dim + 1)
        :param cells: cell indices, all cells by default
        :return: array of shape (ncells, nq, nlocal, value_size)
        """
        mesh = self.mesh
        cells = np.arange(mesh.num_cells) if cells is None else np.asarray(cells)
        lam = np.asarray(barycentric, dtype=np.float64)
        nq = lam.shape[0]
        d = mesh.dim

        if self.family == RT0:
            corners = mesh.vertices[mesh.cells[cells]]
            points = np.einsum('qi,cid->cqd', lam, corners)
            scale = self.cell_signs[cells] / (d * mesh.cell_volume[cells][:, None])
            return (points[:, :, None, :] - corners[:, None, :, :]) * scale[:, None, :, None]
        if self.family == NED0:
            grad = mesh.grad_lambda[cells]
            a, b = mesh.local_edges[:, 0], mesh.local_edges[:, 1]
            return (lam[None, :, a, None] * grad[:, None, b, :]
                    - lam[None, :, b, None] * grad[:, None, a, :])
        if self.family == CG1:
            return np.broadcast_to(lam[None, :, :, None], (len(cells), nq, d + 1, 1)).copy()
        return np.ones((len(cells), nq, 1, 1))

    def tabulate(self, barycentric: np.ndarray, cells=None) -> np.ndarray:
        """Like :meth:`table`, with the component axis dropped for scalar families."""
        values = self.table(barycentric, cells)
        return values if self.is_vector else values[..., 0]

    def derivative_table(self, cells=None) -> np.ndarray:
        """
        Cellwise constant derivative of the basis: the divergence for RT0, the curl
        for NED0 (a scalar in 2D), the rotated gradient ``(d_y f, -d_x f)`` for CG1.

        :return: array of shape (ncells, nlocal, components)
        """
        mesh = self.mesh
        cells = np.arange(mesh.num_cells) if cells is None else np.asarray(cells)
        grad = mesh.grad_lambda[cells]
        if self.family == RT0:
            return (self.cell_signs[cells] / mesh.cell_volume[cells][:, None])[:, :, None]
        if self.family == NED0:
            ga = grad[:, mesh.local_edges[:, 0], :]
            gb = grad[:, mesh.local_edges[:, 1], :]
            if mesh.dim == 3:
                return 2.0 * np.cross(ga, gb)
            return 2.0 * (ga[..., 0] * gb[..., 1] - ga[..., 1] * gb[..., 0])[..., None]
        if self.family == CG1:
            if mesh.dim != 2:
                raise SpaceMismatchError("The rotated gradient of CG1 is only defined in 2D")
            return np.stack([grad[..., 1], -grad[..., 0]], axis=-1)
        raise SpaceMismatchError("DG0 functions have no derivative in this setting")

    def gather(self, coefficients: np.ndarray, cells=None) -> np.ndarray:
        """Local coefficients per cell, zero on constrained dofs."""
        dofs = self.cell_dofs if cells is None else self.cell_dofs[cells]
        # index -1 picks the appended zero, which also covers spaces without dofs
        return np.append(np.asarray(coefficients, dtype=np.float64), 0.0)[dofs]

    def scatter(self, local: np.ndarray) -> np.ndarray:
        """Sums local contributions of shape (ncells, nlocal) into a global vector."""
        mask = self._local_mask
        return np.bincount(self.cell_dofs[mask], weights=local[mask], minlength=self.num_dofs)

    def values_at(self, coefficients: np.ndarray, barycentric: np.ndarray) -> np.ndarray:
        """Field values at the same barycentric points in every cell, shape (nc, nq, value_size)."""
        return np.einsum('cqkr,ck->cqr', self.table(barycentric), self.gather(coefficients))

    def load_vector(self, values: np.ndarray, rule) -> np.ndarray:
        """
        Integrates ``values`` (shape (nc, nq, value_size), given at the points of
        ``rule``) against every basis function.
        """
        values = np.asarray(values).reshape(self.mesh.num_cells, rule.num_points, self.value_size)
        local = np.einsum('cqr,cqkr,q,c->ck', values, self.table(rule.barycentric),
                          rule.weights, self.mesh.cell_volume)
        return self.scatter(local)

    def local_matrix(self, trial: 'Space', rule=None, cell_weights: Optional[np.ndarray] = None) -> np.ndarray:
        """Cell matrices of the L2 inner product with ``trial``, shape (nc, nlocal, nlocal_trial)."""
        if trial.mesh is not self.mesh or trial.value_size != self.value_size:
            raise SpaceMismatchError("Cannot pair {a} with {b}".format(a=self.family, b=trial.family))
        rule = rule or simplex_rule(self.mesh.dim, ASSEMBLY_DEGREE)
        weights = self.mesh.cell_volume if cell_weights is None else self.mesh.cell_volume * cell_weights
        return np.einsum('cqkr,cqlr,q,c->ckl', self.table(rule.barycentric), trial.table(rule.barycentric),
                         rule.weights, weights)

    def assemble_local(self, trial: 'Space', local: np.ndarray):
        """Assembles cell matrices of shape (nc, nlocal, nlocal_trial) into a CSR matrix."""
        rows = np.broadcast_to(self.cell_dofs[:, :, None], local.shape)
        cols = np.broadcast_to(trial.cell_dofs[:, None, :], local.shape)
        keep = (rows >= 0) & (cols >= 0)
        triplets = TripletList((self.num_dofs, trial.num_dofs))
        triplets.add(rows[keep], cols[keep], local[keep])
        return assemble(triplets)

    @cached_property
    def local_mass(self) -> np.ndarray:
        return self.local_matrix(self)

    @cached_property
    def mass_matrix(self):
        return self.assemble_local(self, self.local_mass)

    @cached_property
    def mass_factor(self) -> FactorHandle:
        return factorize(self.mass_matrix, "{f} mass matrix".format(f=self.family))

    def weighted_mass(self, cell_weights: np.ndarray):
        """Mass matrix with a cellwise constant weight, e.g. a DG0 density."""
        return self.assemble_local(self, self.local_mass * np.asarray(cell_weights)[:, None, None])

    def norm(self, coefficients: np.ndarray) -> float:
        return float(np.sqrt(max(coefficients @ (self.mass_matrix @ coefficients), 0.0)))

    def __repr__(self):
        return "Space({f}, dofs={n})".format(f=self.family, n=self.num_dofs)


class Field:
    """
    Coefficient vector tagged with its space.

    :param space: the space
    :param values: coefficients over the unconstrained dofs, zeros by default
    """

    def __init__(self, space: Space, values: Optional[np.ndarray] = None):
        self.space = space
        if values is None:
            values = np.zeros(space.num_dofs)
        self.values = np.array(values, dtype=np.float64).reshape(-1)
        if len(self.values) != space.num_dofs:
            raise SpaceMismatchError("{s} has {n} dofs, got {m} coefficients".format(
                s=space.family, n=space.num_dofs, m=len(self.values)))

    def eval(self, cell: int, point) -> Union[float, np.ndarray]:
        """
        Value at a physical point inside ``cell``.

        :raises PointOutsideCellError: when the point is not in the cell
        """
        lam = self.space.mesh.barycentric(cell, point)
        table = self.space.table(lam[None, :], cells=[cell])[0, 0]
        value = self.space.gather(self.values, cells=[cell])[0] @ table
        return value if self.space.is_vector else float(value[0])

    def norm(self) -> float:
        return self.space.norm(self.values)

    def copy(self) -> 'Field':
        return Field(self.space, self.values.copy())

    def __repr__(self):
        return "Field({s}, norm={n:.6g})".format(s=self.space.family, n=self.norm())


def require_family(field: Field, family: str, name: str = 'field'):
    if field.space.family != family:
        raise SpaceMismatchError("{n} must live in {f}, got {g}".format(n=name, f=family, g=field.space.family))


def require_same_mesh(*fields: Field):
    meshes = {id(f.space.mesh) for f in fields}
    if len(meshes) > 1:
        raise SpaceMismatchError("Fields live on different meshes")


def _sample(space: Space, source: Union[Field, Callable], rule) -> np.ndarray:
    """Values of an analytic function or a discrete field at the points of ``rule``."""
    mesh = space.mesh
    if isinstance(source, Field):
        if source.space.mesh is not mesh:
            raise SpaceMismatchError("Source field lives on another mesh")
        values = source.space.values_at(source.values, rule.barycentric)
    else:
        points = mesh.map_points(rule.barycentric).reshape(-1, mesh.dim)
        values = np.asarray(source(points), dtype=np.float64)
    return values.reshape(mesh.num_cells, rule.num_points, -1)


def project_L2(space: Space, source: Union[Field, Callable], degree: int = ASSEMBLY_DEGREE) -> Field:
    """
    L2-orthogonal projection onto ``space``.

    :param space: target space
    :param source: a :class:`Field` or a callable mapping points (n, dim) to values
        of shape (n,) or (n, dim)
    :param degree: quadrature exactness used for the right-hand side
    """
    rule = simplex_rule(space.mesh.dim, degree)
    values = _sample(space, source, rule)
    if values.shape[-1] != space.value_size:
        raise SpaceMismatchError("{f} needs {n} components, got {m}".format(
            f=space.family, n=space.value_size, m=values.shape[-1]))
    return Field(space, space.mass_factor.solve(space.load_vector(values, rule)))


def interpolate(space: Space, function: Callable) -> Field:
    """
    Canonical interpolant: facet fluxes (RT0), edge circulations (NED0), vertex
    values (CG1) or cell means (DG0) of ``function``.
    """
    mesh = space.mesh
    d = mesh.dim
    if space.family == CG1:
        return Field(space, np.asarray(function(mesh.vertices[space.dof_entity]), dtype=np.float64).reshape(-1))
    if space.family == DG0:
        rule = simplex_rule(d, INTERPOLATION_DEGREE)
        values = _sample(space, function, rule)[..., 0]
        return Field(space, values @ rule.weights)

    if space.family == RT0:
        corners = mesh.vertices[mesh.facets[space.dof_entity]]
        rule = simplex_rule(d - 1, INTERPOLATION_DEGREE)
        direction = mesh.facet_normal[space.dof_entity] * mesh.facet_area[space.dof_entity][:, None]
    else:
        corners = mesh.vertices[mesh.edges[space.dof_entity]]
        rule = simplex_rule(1, INTERPOLATION_DEGREE)
        direction = corners[:, 1] - corners[:, 0]
    points = np.einsum('qi,eid->eqd', rule.barycentric, corners)
    values = np.asarray(function(points.reshape(-1, d)), dtype=np.float64).reshape(len(corners), -1, d)
    return Field(space, np.einsum('eqd,q,ed->e', values, rule.weights, direction))


def mixed_mass_matrix(test: Space, trial: Space):
    """L2 inner products ``<trial basis, test basis>`` as a (test x trial) matrix."""
    return test.assemble_local(trial, test.local_matrix(trial))


def div_matrix(rt: Space, dg: Space):
    """
    ``D[K, e] = integral over K of div phi_e``; the cellwise divergence of ``u`` is
    ``(D u)_K / |K|``.
    """
    if rt.family != RT0 or dg.family != DG0:
        raise SpaceMismatchError("The divergence maps RT0 into DG0, got {a} and {b}".format(
            a=rt.family, b=dg.family))
    mask = rt.cell_dofs >= 0
    rows = np.broadcast_to(np.arange(rt.mesh.num_cells)[:, None], rt.cell_dofs.shape)
    triplets = TripletList((dg.num_dofs, rt.num_dofs))
    triplets.add(rows[mask], rt.cell_dofs[mask], rt.cell_signs[mask])
    return assemble(triplets)


def curl_matrix(curl_space: Space, rt: Space):
    """
    Exact map from coefficients in NED0 (3D) or CG1 (2D) to the RT0 coefficients
    of their curl.

    Each row is the flux of the basis curls through one interior facet, evaluated
    from the facet's first cell; only basis functions attached to the facet enter.
    """
    d = rt.mesh.dim
    if rt.family != RT0 or not ((d == 3 and curl_space.family == NED0) or (d == 2 and curl_space.family == CG1)):
        raise SpaceMismatchError("No curl map from {a} to {b} in {d}D".format(
            a=curl_space.family, b=rt.family, d=d))
    mesh = rt.mesh
    facets = rt.dof_entity
    cells = mesh.facet_to_cell[facets, 0]
    opposite = mesh.facet_local[facets, 0]

    curls = curl_space.derivative_table(cells)
    flux = np.einsum('fkr,fr->fk', curls, mesh.facet_normal[facets]) * mesh.facet_area[facets][:, None]
    on_facet = np.all(curl_space.local_vertices[None, :, :] != opposite[:, None, None], axis=2)
    cols = curl_space.cell_dofs[cells]
    keep = on_facet & (cols >= 0)
    rows = np.broadcast_to(np.arange(len(facets))[:, None], cols.shape)

    triplets = TripletList((rt.num_dofs, curl_space.num_dofs))
    triplets.add(rows[keep], cols[keep], flux[keep])
    return assemble(triplets)


class DivergenceFreeProjector:
    """
    Nearest element in L2 of the discretely divergence-free RT0 subspace.

    The constraint ``D u = 0`` has one redundant row, so the multiplier is fixed
    by a zero-mean condition.

    :param rt: velocity space
    """

    def __init__(self, rt: Space):
        self.rt = rt
        self.dg = Space(rt.mesh, DG0)
        self.constraint = -div_matrix(rt, self.dg)
        self._handle = None

    def _solve(self, load: np.ndarray) -> Field:
        if self._handle is None:
            self._handle = factorize(saddle_matrix(self.rt.mass_matrix, self.constraint, self.rt.mesh.cell_volume),
                                     'divergence-free projection')
        u, _ = solve_saddle(self.rt.mass_matrix, self.constraint, load, gauge=self.rt.mesh.cell_volume,
                            handle=self._handle)
        return Field(self.rt, u)

    def __call__(self, source: Union[Field, Callable], degree: int = ASSEMBLY_DEGREE) -> Field:
        rule = simplex_rule(self.rt.mesh.dim, degree)
        return self._solve(self.rt.load_vector(_sample(self.rt, source, rule), rule))


def project_divfree(rt: Space, source: Union[Field, Callable], degree: int = ASSEMBLY_DEGREE) -> Field:
    """
    Nearest element in L2 to ``source`` among RT0 fields with zero divergence and
    zero normal trace.
    """
    return DivergenceFreeProjector(rt)(source, degree)
