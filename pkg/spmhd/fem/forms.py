"""
Transport forms, upwinding, and the auxiliary fields that turn the nonlinear
momentum and induction terms into mass-matrix solves.

At lowest order, with DG0 scalars and an RT0 advecting field, the transport form
reduces to a sum over interior facets:

    b_h(f, g, u)              = sum_e u_e (f1 - f2) (g1 + g2) / 2
    b~_h(a; f, g, v) - b_h    = sum_e gamma_e(a) v_e (f1 - f2) (g1 - g2)

where ``u_e`` is the flux of ``u`` through facet ``e`` and cells 1 and 2 are the
first and second cell of the facet.
"""
import logging
from typing import Optional

import numpy as np

from spmhd.fem.linalg import TripletList, assemble
from spmhd.fem.mesh import Mesh
from spmhd.fem.quadrature import simplex_rule
from spmhd.fem.spaces import (ASSEMBLY_DEGREE, CG1, DG0, NED0, RT0, Field, Space,
                              SpaceMismatchError, curl_matrix, div_matrix, mixed_mass_matrix)

logger = logging.getLogger(__name__)

ABS = 'abs'
SMOOTH = 'smooth'
SCHEME_A = 'A'
SCHEME_B = 'B'


class Error(Exception):
    """Base class for exceptions in this module."""


class UpwindParameterError(Error):
    """Raised for upwind parameters outside their admissible range."""


class UpwindParameters:
    """
    Facet weights of the upwind stabilization.

    The weight enters the forms only through ``gamma = beta(u) / (u . n)``, which is
    ``c sign(u . n)`` for the ``abs`` family and ``(2c / pi) arctan(u . n / eps)``
    for the ``smooth`` family.

    :param c: strength in [0, 1/2], 1/2 is full upwinding
    :param eps: smoothing width of the ``smooth`` family, positive
    :param variant: ``abs`` or ``smooth``
    """

    def __init__(self, c: float = 0.5, eps: float = 0.01, variant: str = SMOOTH):
        if not 0.0 <= c <= 0.5:
            raise UpwindParameterError("Upwind strength c must lie in [0, 1/2], got {c}".format(c=c))
        if not eps > 0.0:
            raise UpwindParameterError("Upwind smoothing eps must be positive, got {e}".format(e=eps))
        if variant not in (ABS, SMOOTH):
            raise UpwindParameterError("Upwind variant must be '{a}' or '{s}', got '{v}'".format(
                a=ABS, s=SMOOTH, v=variant))
        self.c = float(c)
        self.eps = float(eps)
        self.variant = variant

    @classmethod
    def off(cls) -> 'UpwindParameters':
        return cls(c=0.0)

    @property
    def active(self) -> bool:
        return self.c > 0.0

    def gamma(self, normal_velocity: np.ndarray) -> np.ndarray:
        normal_velocity = np.asarray(normal_velocity, dtype=np.float64)
        if self.variant == ABS:
            return self.c * np.sign(normal_velocity)
        return (2.0 * self.c / np.pi) * np.arctan(normal_velocity / self.eps)

    def beta(self, normal_velocity: np.ndarray) -> np.ndarray:
        return self.gamma(normal_velocity) * normal_velocity

    def __repr__(self):
        return "UpwindParameters(c={c}, eps={e}, variant={v})".format(c=self.c, e=self.eps, v=self.variant)


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Cross product on trailing component axes.

    In 3D both factors are vectors. In 2D a vector times a vector gives the scalar
    ``a_x b_y - a_y b_x`` and a scalar ``w`` times a vector ``u`` gives
    ``w (-u_y, u_x)``. Scalars carry a trailing axis of length one.
    """
    ra, rb = a.shape[-1], b.shape[-1]
    if ra == 3 and rb == 3:
        return np.cross(a, b)
    if ra == 2 and rb == 2:
        return (a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0])[..., None]
    if ra == 1 and rb == 2:
        return a * np.stack([-b[..., 1], b[..., 0]], axis=-1)
    raise SpaceMismatchError("No cross product between {a} and {b} components".format(a=ra, b=rb))


def _facet_cells(space: Space):
    facets = space.dof_entity
    cells = space.mesh.facet_to_cell[facets]
    return cells[:, 0], cells[:, 1]


def _check_transport(f: Field, g: Field, u: Field):
    for name, field, family in (('f', f, DG0), ('g', g, DG0), ('u', u, RT0)):
        if field.space.family != family:
            raise SpaceMismatchError("{n} must live in {fam}, got {got}".format(
                n=name, fam=family, got=field.space.family))
    if not (f.space.mesh is g.space.mesh is u.space.mesh):
        raise SpaceMismatchError("Transport form arguments live on different meshes")


def bh(f: Field, g: Field, u: Field) -> float:
    """Transport form ``b_h(f, g, u)`` for DG0 scalars and an RT0 field."""
    _check_transport(f, g, u)
    c1, c2 = _facet_cells(u.space)
    return float(np.sum(u.values * (f.values[c1] - f.values[c2]) * (g.values[c1] + g.values[c2])) / 2.0)


def bh_upwind(u_adv: Field, f: Field, g: Field, v: Field,
              upwind: Optional[UpwindParameters] = None) -> float:
    """
    Upwinded transport form ``b~_h(u_adv; f, g, v)``.

    :param upwind: facet weights, no stabilization when omitted
    """
    value = bh(f, g, v)
    if upwind is None or not upwind.active:
        return value
    _check_transport(f, g, u_adv)
    mesh = v.space.mesh
    c1, c2 = _facet_cells(v.space)
    gamma = upwind.gamma(u_adv.values / mesh.facet_area[v.space.dof_entity])
    return value + float(np.sum(gamma * v.values * (f.values[c1] - f.values[c2]) * (g.values[c1] - g.values[c2])))


class AuxFields:
    """
    Auxiliary fields of one fixed-point sweep, all evaluated at the midpoint.

    ``convection`` is the RT0 load vector of the nonlinear momentum term and
    ``gamma`` the frozen upwind ratio per velocity dof.
    """

    def __init__(self, w: Field, J: Field, theta: Field, E: Field, convection: np.ndarray,
                 gamma: np.ndarray, H: Optional[Field] = None, U: Optional[Field] = None,
                 alpha: Optional[Field] = None):
        self.w = w
        self.J = J
        self.theta = theta
        self.E = E
        self.H = H
        self.U = U
        self.alpha = alpha
        self.convection = convection
        self.gamma = gamma


class FormCache:
    """
    Spaces, time-independent operators and factorizations on one mesh.

    In 3D the curl space (for w, J, E) is NED0; in 2D it is CG1 with zero boundary
    values, and H, U, alpha live in the planar NED0 space.

    :param mesh: the mesh
    :param upwind: facet weights, upwinding off when omitted
    """

    def __init__(self, mesh: Mesh, upwind: Optional[UpwindParameters] = None):
        self.mesh = mesh
        self.upwind = upwind or UpwindParameters.off()
        self.rt = Space(mesh, RT0)
        self.dg = Space(mesh, DG0)
        self.ned = Space(mesh, NED0)
        self.curl_space = self.ned if mesh.dim == 3 else Space(mesh, CG1)
        self.rule = simplex_rule(mesh.dim, ASSEMBLY_DEGREE)

        self.curl = curl_matrix(self.curl_space, self.rt)
        self.div = div_matrix(self.rt, self.dg)
        self.mixed_mass = mixed_mass_matrix(self.ned, self.rt)
        self.facet_first, self.facet_second = _facet_cells(self.rt)
        self.facet_area = mesh.facet_area[self.rt.dof_entity]
        logger.debug("Form cache ready: %d RT0, %d DG0, %d NED0, %d curl-space dofs",
                     self.rt.num_dofs, self.dg.num_dofs, self.ned.num_dofs, self.curl_space.num_dofs)

    def field(self, family: str, values=None) -> Field:
        space = {RT0: self.rt, DG0: self.dg, NED0: self.ned, CG1: self.curl_space}[family]
        return Field(space, values)

    def gamma(self, u_adv: np.ndarray) -> np.ndarray:
        if not self.upwind.active:
            return np.zeros(self.rt.num_dofs)
        return self.upwind.gamma(u_adv / self.facet_area)

    def _values(self, space: Space, coefficients: np.ndarray) -> np.ndarray:
        return space.values_at(coefficients, self.rule.barycentric)

    def _project(self, space: Space, values: np.ndarray) -> Field:
        return Field(space, space.mass_factor.solve(space.load_vector(values, self.rule)))

    def curl_adjoint(self, load: np.ndarray) -> Field:
        """Curl-space field ``w`` with ``<w, z> = load . (C z)`` for every ``z``."""
        return Field(self.curl_space, self.curl_space.mass_factor.solve(self.curl.T @ load))

    def aux_w(self, rho, u) -> Field:
        """``<w, z> = <rho u, curl z>``."""
        rho_values = rho.values if isinstance(rho, Field) else np.asarray(rho, dtype=np.float64)
        u_values = u.values if isinstance(u, Field) else np.asarray(u)
        return self.curl_adjoint(self.rt.weighted_mass(rho_values) @ u_values)

    def aux_J(self, B) -> Field:
        """``<J, K> = <B, curl K>``."""
        B_values = B.values if isinstance(B, Field) else np.asarray(B)
        return self.curl_adjoint(self.rt.mass_matrix @ B_values)

    def aux_theta(self, u_a, u_b) -> Field:
        """``<theta, tau> = <u_a . u_b, tau> / 2``."""
        a = u_a.values if isinstance(u_a, Field) else np.asarray(u_a)
        b = u_b.values if isinstance(u_b, Field) else np.asarray(u_b)
        products = np.sum(self._values(self.rt, a) * self._values(self.rt, b), axis=-1)
        return Field(self.dg, 0.5 * products @ self.rule.weights)

    def _to_ned(self, field) -> Field:
        values = field.values if isinstance(field, Field) else np.asarray(field)
        return Field(self.ned, self.ned.mass_factor.solve(self.mixed_mass @ values))

    def aux_H(self, B) -> Field:
        """``<H, G> = <B, G>``."""
        return self._to_ned(B)

    def aux_U(self, u) -> Field:
        """``<U, V> = <u, V>``."""
        return self._to_ned(u)

    def aux_E(self, U: Field, H: Field) -> Field:
        """``<E, F> = -<U x H, F>``; U and H may be NED0 or RT0 fields."""
        product = cross(self._values(U.space, U.values), self._values(H.space, H.values))
        return self._project(self.curl_space, -product)

    def aux_alpha(self, w: Field, U: Field, J: Field, H: Field) -> Field:
        """``<alpha, beta> = <w x U - J x H, beta>``."""
        return self._project(self.ned, self._lorentz_values(w, U, J, H))

    def _lorentz_values(self, w: Field, u: Field, J: Field, B: Field) -> np.ndarray:
        return (cross(self._values(w.space, w.values), self._values(u.space, u.values))
                - cross(self._values(J.space, J.values), self._values(B.space, B.values)))

    def convection_load(self, w: Field, u: Field, J: Field, B: Field) -> np.ndarray:
        """RT0 load vector ``<w x u - J x B, v>``."""
        return self.rt.load_vector(self._lorentz_values(w, u, J, B), self.rule)

    def auxiliary(self, scheme: str, rho0: np.ndarray, u0: np.ndarray, B0: np.ndarray,
                  rho1: np.ndarray, u1: np.ndarray, B1: np.ndarray) -> AuxFields:
        """
        Auxiliary fields for a step from ``(rho0, u0, B0)`` to ``(rho1, u1, B1)``:
        w from the midpoint momentum, J, H, U, E from midpoint values, theta from
        ``u0 . u1``.
        """
        u_mid = Field(self.rt, 0.5 * (u0 + u1))
        B_mid = Field(self.rt, 0.5 * (B0 + B1))
        momentum = 0.5 * (self.rt.weighted_mass(rho0) @ u0 + self.rt.weighted_mass(rho1) @ u1)
        w = self.curl_adjoint(momentum)
        J = self.aux_J(B_mid)
        theta = self.aux_theta(u0, u1)
        gamma = self.gamma(u_mid.values)

        if scheme == SCHEME_A:
            E = self.aux_E(u_mid, B_mid)
            return AuxFields(w, J, theta, E, self.convection_load(w, u_mid, J, B_mid), gamma)
        if scheme == SCHEME_B:
            H = self.aux_H(B_mid)
            U = self.aux_U(u_mid)
            E = self.aux_E(U, H)
            alpha = self.aux_alpha(w, U, J, H)
            return AuxFields(w, J, theta, E, self.mixed_mass.T @ alpha.values, gamma, H=H, U=U, alpha=alpha)
        raise SpaceMismatchError("Unknown scheme {s}".format(s=scheme))

    def transport_vector(self, theta: np.ndarray, rho: np.ndarray, gamma: np.ndarray) -> np.ndarray:
        """Coefficients of ``v -> b~_h(.; theta, rho, v)`` over the RT0 basis, gamma frozen."""
        c1, c2 = self.facet_first, self.facet_second
        return (theta[c1] - theta[c2]) * (0.5 * (rho[c1] + rho[c2]) + gamma * (rho[c1] - rho[c2]))

    def density_operator(self, u: np.ndarray, gamma: np.ndarray):
        """
        Matrix ``K`` with ``sigma . K rho = b~_h(u; sigma, rho, u)``, gamma frozen.
        Its columns sum to zero, so ``K`` never changes the total mass.
        """
        c1, c2 = self.facet_first, self.facet_second
        mean = 0.5 * u
        jump = gamma * u
        triplets = TripletList((self.dg.num_dofs, self.dg.num_dofs))
        triplets.add(c1, c1, mean + jump)
        triplets.add(c1, c2, mean - jump)
        triplets.add(c2, c1, -mean - jump)
        triplets.add(c2, c2, -mean + jump)
        return assemble(triplets)

    def load_rt(self, function) -> np.ndarray:
        points = self.mesh.map_points(self.rule.barycentric).reshape(-1, self.mesh.dim)
        return self.rt.load_vector(np.asarray(function(points)), self.rule)

    def load_dg(self, function) -> np.ndarray:
        points = self.mesh.map_points(self.rule.barycentric).reshape(-1, self.mesh.dim)
        return self.dg.load_vector(np.asarray(function(points)), self.rule)


def momentum_residual(cache: FormCache, rho0: np.ndarray, u0: np.ndarray, rho1: np.ndarray,
                      u1: np.ndarray, p: np.ndarray, aux: AuxFields, dt: float,
                      transport: bool = True, forcing: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Weak momentum residual over the RT0 test functions:

        <(rho1 u1 - rho0 u0) / dt, v> + <convection, v> + b~_h(u_mid; theta, rho_mid, v)
        - <p, div v> - <f, v>

    :param transport: include the ``b~_h`` term, dropped for constant density
    :param forcing: RT0 load vector of the momentum forcing
    """
    residual = (cache.rt.weighted_mass(rho1) @ u1 - cache.rt.weighted_mass(rho0) @ u0) / dt
    residual = residual + aux.convection - cache.div.T @ p
    if transport:
        residual = residual + cache.transport_vector(aux.theta.values, 0.5 * (rho0 + rho1), aux.gamma)
    if forcing is not None:
        residual = residual - forcing
    return residual
