"""
Manufactured solutions and experiment presets.

Fields are written once as sympy expressions; forcing terms are derived from them
symbolically and compiled to numpy evaluators with ``lambdify``. Every evaluator
takes points of shape (n, dim) and a time.
"""
from typing import Callable, List, Optional, Sequence

import numpy as np
import sympy as sp

from spmhd.fem.mesh import BoxSpec
from spmhd.stepper import Forcing

x, y, z, t = sp.symbols('x y z t', real=True)
PLANE = (x, y)
SPACE = (x, y, z)


class AnalyticField:
    """
    Closed-form scalar or vector field of space and time.

    :param components: one sympy expression for a scalar, a sequence for a vector
    :param coordinates: the spatial symbols, ``(x, y)`` or ``(x, y, z)``
    """

    def __init__(self, components, coordinates: Sequence[sp.Symbol] = PLANE):
        self.is_vector = isinstance(components, (list, tuple, sp.Matrix))
        self.expressions = [sp.sympify(c) for c in components] if self.is_vector else [sp.sympify(components)]
        self.coordinates = tuple(coordinates)
        self._functions = [sp.lambdify(self.coordinates + (t,), e, 'numpy') for e in self.expressions]

    def __call__(self, points: np.ndarray, time: float = 0.0) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n = points.shape[0]
        columns = [np.broadcast_to(np.asarray(f(*points.T, time), dtype=np.float64), (n,))
                   for f in self._functions]
        if self.is_vector:
            return np.stack(columns, axis=1)
        return np.array(columns[0])

    def at(self, time: float) -> Callable:
        """The field frozen at ``time``, as a function of points only."""
        return lambda points: self(points, time)

    def __getitem__(self, index) -> sp.Expr:
        return self.expressions[index]

    def __len__(self):
        return len(self.expressions)


def _rot(f):
    return [sp.diff(f, y), -sp.diff(f, x)]


def _curl_2d(v):
    return sp.diff(v[1], x) - sp.diff(v[0], y)


def _cross_2d(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _curl_3d(v):
    return [sp.diff(v[2], y) - sp.diff(v[1], z),
            sp.diff(v[0], z) - sp.diff(v[2], x),
            sp.diff(v[1], x) - sp.diff(v[0], y)]


class MmsCase:
    """
    Manufactured solution on [-1, 1]^2 with its forcing.

    The forcing makes the fields satisfy

        rho (d_t u + u . grad u) - (curl B) x B = -grad p + f_u
        d_t B - curl (u x B) = f_B
        d_t rho + div (rho u) = f_rho
    """

    dim = 2
    lower = -1.0
    upper = 1.0

    def __init__(self):
        pi = sp.pi
        self.potential_expr = (2 / pi * sp.sin(t) * sp.cos(pi * x / 2) * sp.cos(pi * y / 2)
                               + sp.cos(t) / pi * sp.sin(pi * x) * sp.sin(pi * y))
        u = [sp.cos(t) * sp.cos(pi * x / 2) * sp.sin(pi * y / 2) + sp.sin(t) * sp.sin(pi * x) * sp.cos(pi * y),
             -sp.cos(t) * sp.sin(pi * x / 2) * sp.cos(pi * y / 2) - sp.sin(t) * sp.cos(pi * x) * sp.sin(pi * y)]
        B = [-sp.sin(t) * sp.cos(pi * x / 2) * sp.sin(pi * y / 2) + sp.cos(t) * sp.sin(pi * x) * sp.cos(pi * y),
             sp.sin(t) * sp.sin(pi * x / 2) * sp.cos(pi * y / 2) - sp.cos(t) * sp.cos(pi * x) * sp.sin(pi * y)]
        rho = 2 + sp.cos(t) * sp.sin(pi * x) * sp.cos(pi * y) + sp.sin(t) * sp.cos(pi * x) * sp.sin(pi * y)
        speed2 = u[0] ** 2 + u[1] ** 2
        p = rho * speed2 - 1

        f_rho = sp.diff(rho, t) + sp.diff(rho * u[0], x) + sp.diff(rho * u[1], y)
        emf = _cross_2d(u, B)
        f_B = [sp.diff(B[i], t) - _rot(emf)[i] for i in range(2)]
        current = _curl_2d(B)
        lorentz = [-current * B[1], current * B[0]]
        f_u = [rho * (sp.diff(u[i], t) + u[0] * sp.diff(u[i], x) + u[1] * sp.diff(u[i], y))
               - lorentz[i] + sp.diff(p, PLANE[i]) for i in range(2)]

        self.u = AnalyticField(u)
        self.B = AnalyticField(B)
        self.rho = AnalyticField(rho)
        self.p = AnalyticField(p)
        self.potential = AnalyticField(self.potential_expr)
        self.modified_pressure = AnalyticField(p + rho * speed2)
        self.f_u = AnalyticField(f_u)
        self.f_B = AnalyticField(f_B)
        self.f_rho = AnalyticField(f_rho)
        # the discrete momentum equation is in conservative form
        self.f_momentum = AnalyticField([f_u[i] + f_rho * u[i] for i in range(2)])

    def box(self, level: int) -> BoxSpec:
        """Box with 2^level intervals per axis."""
        return BoxSpec(self.lower, self.upper, 2 ** int(level), dim=self.dim)

    def forcing(self) -> Forcing:
        return Forcing(momentum=self.f_momentum, magnetic=self.f_B, density=self.f_rho)


def mms_2d() -> MmsCase:
    return MmsCase()


def mms_forcing(case: MmsCase, points: np.ndarray, time: float):
    """
    Forcing of the strong equations at ``points`` and ``time``.

    :return: ``(f_u, f_B, f_rho)``
    """
    return case.f_u(points, time), case.f_B(points, time), case.f_rho(points, time)


class Preset3D:
    """
    Initial data on [-1, 1]^3: a swirling velocity that is not tangential at the
    boundary, a magnetic field given by a potential with zero tangential trace,
    and a variable or constant density.

    :param variable_density: ``rho0 = 2 + sin(xy)`` when true, ``rho0 = 1`` otherwise
    :param dt: time step
    :param T: final time
    """

    dim = 3
    lower = -1.0
    upper = 1.0

    def __init__(self, variable_density: bool = True, dt: float = 0.02, T: float = 1.0):
        pi = sp.pi
        self.variable_density = variable_density
        self.dt = dt
        self.T = T
        envelope = sp.exp(-4 * (x ** 2 + y ** 2))
        bump = (1 - x ** 2) * (1 - y ** 2) * (1 - z ** 2)
        potential = [bump * sp.sin(pi * c) / 2 for c in SPACE]
        rho = 2 + sp.sin(x * y) if variable_density else sp.Integer(1)

        self.u0 = AnalyticField([y * envelope, -x * envelope, sp.Integer(0)], SPACE)
        self.A0 = AnalyticField(potential, SPACE)
        self.B0 = AnalyticField(_curl_3d(potential), SPACE)
        self.rho0 = AnalyticField(rho, SPACE)

    def box(self, subdivisions: int = 2) -> BoxSpec:
        return BoxSpec(self.lower, self.upper, subdivisions, dim=self.dim)


def preset_3d(variable_density: bool = True) -> Preset3D:
    return Preset3D(variable_density)


def observed_orders(errors: Sequence[float]) -> List[Optional[float]]:
    """``log2(e_j / e_j+1)`` for consecutive refinements, ``None`` for the first."""
    orders = [None]
    for coarse, fine in zip(errors[:-1], errors[1:]):
        orders.append(float(np.log2(coarse / fine)) if fine > 0 and coarse > 0 else None)
    return orders
