"""
Conserved quantities, constraint norms and error norms of discrete states.
"""
import logging
import math
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.sparse.linalg import cg

from spmhd.fem.forms import FormCache
from spmhd.fem.quadrature import simplex_rule
from spmhd.fem.spaces import Field

logger = logging.getLogger(__name__)

ERROR_DEGREE = 8


class Error(Exception):
    """Base class for exceptions in this module."""


class PotentialRecoveryError(Error):
    """Raised when no vector potential with the requested accuracy was found."""


class InvariantRecord(NamedTuple):
    t: float
    mass: float
    rho2: float
    energy: float
    cross_helicity: float
    magnetic_helicity: Optional[float]
    div_u_l2: float
    div_B_l2: float
    fp_iters: int


def recover_potential(B: Field, cache: FormCache, rtol: float = 1e-12, atol: float = 0.0) -> Field:
    """
    Vector potential ``A`` in NED0 with ``<curl A, curl V> = <B, curl V>`` for all V.

    The system is singular (gradients lie in its kernel); conjugate gradients from
    a zero initial guess stay in the range of the operator and converge to its
    minimum-norm solution.

    :raises PotentialRecoveryError: when the residual check fails
    """
    if cache.mesh.dim != 3:
        raise PotentialRecoveryError("Vector potentials are only recovered in 3D")
    curl = cache.curl
    mass = cache.rt.mass_matrix
    operator = (curl.T @ mass @ curl).tocsr()
    rhs = curl.T @ (mass @ B.values)
    size = B.norm()
    if size == 0.0:
        return Field(cache.ned)

    solution, info = cg(operator, rhs, x0=np.zeros(len(rhs)), rtol=rtol, atol=atol,
                        maxiter=10 * max(len(rhs), 1))
    residual = np.linalg.norm(operator @ solution - rhs)
    logger.debug("Potential recovery: cg info %d, residual %.3e", info, residual)
    if residual > 1e-9 * max(size, np.linalg.norm(rhs)):
        raise PotentialRecoveryError("Curl-curl solve stopped at residual {r:.3e} (cg info {i})".format(
            r=residual, i=info))
    return Field(cache.ned, solution)


def magnetic_helicity(B: Field, cache: FormCache) -> float:
    """``int A . B`` with ``A`` from :func:`recover_potential`."""
    potential = recover_potential(B, cache)
    return float(potential.values @ (cache.mixed_mass @ B.values))


def divergence_l2(field: Field, cache: FormCache) -> float:
    """L2 norm of the cellwise constant divergence of an RT0 field."""
    integrals = cache.div @ field.values
    return float(np.sqrt(np.sum(integrals ** 2 / cache.mesh.cell_volume)))


def invariants(state, cache: FormCache, fp_iters: int = 0, helicity: bool = True) -> InvariantRecord:
    """
    Invariant record of ``state``. In 2D, and when the potential cannot be
    recovered, the magnetic helicity is ``None``.
    """
    rho, u, B = state.rho.values, state.u.values, state.B.values
    volume = cache.mesh.cell_volume
    rt_mass = cache.rt.mass_matrix

    value = None
    if helicity and cache.mesh.dim == 3:
        try:
            value = magnetic_helicity(state.B, cache)
        except PotentialRecoveryError as error:
            logger.warning("Magnetic helicity unavailable at t=%s: %s", state.t, error)

    return InvariantRecord(
        t=float(state.t),
        mass=float(rho @ volume),
        rho2=float((rho ** 2) @ volume),
        energy=0.5 * float(u @ (cache.rt.weighted_mass(rho) @ u) + B @ (rt_mass @ B)),
        cross_helicity=float(u @ (rt_mass @ B)),
        magnetic_helicity=value,
        div_u_l2=divergence_l2(state.u, cache),
        div_B_l2=divergence_l2(state.B, cache),
        fp_iters=int(fp_iters),
    )


def l2_error(field: Field, function: Optional[Callable], t: float = 0.0, degree: int = ERROR_DEGREE) -> float:
    """
    ``||field - function(., t)||`` in L2, with ``function(points, t)`` mapping
    points of shape (n, dim) to values. ``None`` stands for the zero function.
    """
    space = field.space
    mesh = space.mesh
    rule = simplex_rule(mesh.dim, degree)
    discrete = space.values_at(field.values, rule.barycentric)
    if function is not None:
        points = mesh.map_points(rule.barycentric).reshape(-1, mesh.dim)
        exact = np.asarray(function(points, t), dtype=np.float64).reshape(discrete.shape)
        discrete = discrete - exact
    squares = np.sum(discrete ** 2, axis=-1) @ rule.weights
    return math.sqrt(float(squares @ mesh.cell_volume))


def drift(records, name: str):
    """Absolute and relative drift ``|F(t_k) - F(0)|`` of one invariant over a run."""
    values = [getattr(r, name) for r in records]
    if values[0] is None:
        return [None] * len(values), [None] * len(values)
    absolute = [abs(v - values[0]) if v is not None else None for v in values]
    scale = abs(values[0])
    relative = [a / scale if (a is not None and scale > 0) else a for a in absolute]
    return absolute, relative
