"""
Conservative midpoint time stepping with a fixed-point iteration.

One step from t_k to t_k+1 solves the coupled density, induction and
velocity-pressure equations. Each sweep of the fixed-point iteration freezes the
auxiliary fields (and the upwind weights) at the current iterate and then solves,
in order, the density system, the explicit induction update
``B_k+1 = B_k - dt curl E`` and the velocity-pressure saddle system.
"""
import logging
from typing import Callable, Iterable, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from spmhd import diagnostics
from spmhd.fem.forms import SCHEME_A, SCHEME_B, FormCache, UpwindParameters, momentum_residual
from spmhd.fem.linalg import factorize, saddle_matrix, solve_saddle
from spmhd.fem.mesh import Mesh
from spmhd.fem.spaces import DivergenceFreeProjector, Field, interpolate, project_divfree, project_L2

logger = logging.getLogger(__name__)


class Error(Exception):
    """Base class for exceptions in this module."""


class SchemeConfigError(Error):
    """Raised for an inconsistent time stepping configuration."""


class StepFailureError(Error):
    """
    Raised when the fixed-point iteration does not converge.

    :param last_increment: relative increment of the last sweep
    :param iterations: number of sweeps performed
    """

    def __init__(self, message: str, last_increment: float, iterations: int):
        super().__init__(message)
        self.last_increment = last_increment
        self.iterations = iterations


class SchemeConfig:
    """
    Time stepping parameters.

    :param variant: ``A`` (plain auxiliary fields) or ``B`` (composed projections,
        also conserves magnetic helicity)
    :param dt: time step
    :param T: final time
    :param upwind: upwind weights, none by default
    :param fp_tol: relative increment at which the fixed-point iteration stops
    :param fp_maxiter: maximum number of sweeps per step
    :param fp_stagnation: a step whose increment stops decreasing is still accepted
        while the increment is below ``fp_stagnation * fp_tol``; 1 disables this
    :param constant_density: keep the density fixed and drop the transport term
    """

    def __init__(self, variant: str = SCHEME_B, dt: float = 0.02, T: float = 0.0,
                 upwind: Optional[UpwindParameters] = None, fp_tol: float = 1e-12,
                 fp_maxiter: int = 100, fp_stagnation: float = 1e3, constant_density: bool = False):
        variant = str(variant).upper()
        if variant not in (SCHEME_A, SCHEME_B):
            raise SchemeConfigError("Scheme must be A or B, got {v}".format(v=variant))
        if not dt > 0:
            raise SchemeConfigError("Time step must be positive, got {d}".format(d=dt))
        if T < 0:
            raise SchemeConfigError("Final time must not be negative, got {t}".format(t=T))
        if not fp_tol > 0:
            raise SchemeConfigError("Fixed-point tolerance must be positive, got {t}".format(t=fp_tol))
        if int(fp_maxiter) < 1:
            raise SchemeConfigError("At least one fixed-point sweep is needed, got {m}".format(m=fp_maxiter))
        if not fp_stagnation >= 1.0:
            raise SchemeConfigError("Stagnation factor must be at least 1, got {f}".format(f=fp_stagnation))
        self.variant = variant
        self.dt = float(dt)
        self.T = float(T)
        self.upwind = upwind or UpwindParameters.off()
        self.fp_tol = float(fp_tol)
        self.fp_maxiter = int(fp_maxiter)
        self.fp_stagnation = float(fp_stagnation)
        self.constant_density = bool(constant_density)

    @property
    def num_steps(self) -> int:
        return int(round(self.T / self.dt))

    def __repr__(self):
        return ("SchemeConfig(variant={v}, dt={dt}, T={T}, upwind={u}, fp_tol={tol}, fp_maxiter={m}, "
                "fp_stagnation={s}, constant_density={c})").format(
            v=self.variant, dt=self.dt, T=self.T, u=self.upwind, tol=self.fp_tol, m=self.fp_maxiter,
            s=self.fp_stagnation, c=self.constant_density)


class State:
    """
    Discrete solution at one time level.

    :param k: step index
    :param t: time
    :param u: velocity in RT0
    :param B: magnetic field in RT0
    :param rho: density in DG0
    :param p: zero-mean pressure in DG0
    """

    def __init__(self, k: int, t: float, u: Field, B: Field, rho: Field, p: Field):
        self.k = k
        self.t = t
        self.u = u
        self.B = B
        self.rho = rho
        self.p = p

    def copy(self) -> 'State':
        return State(self.k, self.t, self.u.copy(), self.B.copy(), self.rho.copy(), self.p.copy())

    def __repr__(self):
        return "State(k={k}, t={t:.6g})".format(k=self.k, t=self.t)


class Forcing:
    """
    Right-hand sides of the momentum, induction and density equations. Each is a
    callable ``f(points, t)`` on points of shape (n, dim).
    """

    def __init__(self, momentum: Optional[Callable] = None, magnetic: Optional[Callable] = None,
                 density: Optional[Callable] = None):
        self.momentum = momentum
        self.magnetic = magnetic
        self.density = density


class Residuals(NamedTuple):
    momentum: np.ndarray
    induction: np.ndarray
    density: np.ndarray
    incompressibility: np.ndarray

    def max_norm(self) -> float:
        return max(float(np.max(np.abs(r))) if len(r) else 0.0 for r in self)


class _Loads(NamedTuple):
    momentum: np.ndarray
    magnetic: np.ndarray
    density: np.ndarray


Observer = Callable[[int, float, State, 'diagnostics.InvariantRecord'], None]


class Stepper:
    """
    Advances a :class:`State` with the configured scheme.

    :param mesh: the mesh
    :param config: scheme parameters
    :param forcing: optional right-hand sides
    """

    def __init__(self, mesh: Mesh, config: SchemeConfig, forcing: Optional[Forcing] = None):
        self.mesh = mesh
        self.config = config
        self.forcing = forcing
        self.cache = FormCache(mesh, config.upwind)
        self.gauge = mesh.cell_volume
        self.constraint = -self.cache.div
        self._projector = None
        self._constant_handle = None
        self._constant_rho = None
        self.last_increment = None

    @property
    def projector(self) -> DivergenceFreeProjector:
        if self._projector is None:
            self._projector = DivergenceFreeProjector(self.cache.rt)
        return self._projector

    def init_state(self, u0: Optional[Callable] = None, B0: Optional[Callable] = None,
                   A0: Optional[Callable] = None, rho0: Union[float, Callable] = 1.0,
                   t0: float = 0.0) -> State:
        """
        Discrete initial state. The velocity is the nearest divergence-free RT0
        field to ``u0``. The magnetic field is the exact discrete curl of the
        interpolated potential ``A0`` when it is given (a scalar potential in 2D),
        otherwise the nearest divergence-free field to ``B0``.
        """
        cache = self.cache
        u = project_divfree(cache.rt, u0) if u0 is not None else Field(cache.rt)
        if A0 is not None:
            potential = interpolate(cache.curl_space, A0)
            B = Field(cache.rt, cache.curl @ potential.values)
        elif B0 is not None:
            B = self.projector(B0)
        else:
            B = Field(cache.rt)
        if callable(rho0):
            rho = project_L2(cache.dg, rho0)
        else:
            rho = Field(cache.dg, np.full(cache.dg.num_dofs, float(rho0)))
        return State(0, t0, u, B, rho, Field(cache.dg))

    def loads(self, t: float) -> _Loads:
        """Forcing load vectors at time ``t``; the magnetic one is an RT0 coefficient vector."""
        cache = self.cache
        zero_rt, zero_dg = np.zeros(cache.rt.num_dofs), np.zeros(cache.dg.num_dofs)
        if self.forcing is None:
            return _Loads(zero_rt, zero_rt, zero_dg)
        momentum = zero_rt
        magnetic = zero_rt
        density = zero_dg
        if self.forcing.momentum is not None:
            momentum = cache.load_rt(lambda x: self.forcing.momentum(x, t))
        if self.forcing.magnetic is not None:
            magnetic = self.projector(lambda x: self.forcing.magnetic(x, t)).values
        if self.forcing.density is not None and not self.config.constant_density:
            density = cache.load_dg(lambda x: self.forcing.density(x, t))
        return _Loads(momentum, magnetic, density)

    def _saddle_handle(self, rho: np.ndarray):
        a = self.cache.rt.weighted_mass(rho) / self.config.dt
        if not self.config.constant_density:
            return a, factorize(saddle_matrix(a, self.constraint, self.gauge), 'momentum system')
        if self._constant_handle is None or not np.array_equal(rho, self._constant_rho):
            self._constant_rho = rho.copy()
            self._constant_handle = (a, factorize(saddle_matrix(a, self.constraint, self.gauge), 'momentum system'))
        return self._constant_handle

    def fixed_point_sweep(self, state: State, iterate: State, loads: Optional[_Loads] = None) -> Tuple[State, float]:
        """
        One Gauss-Seidel sweep: auxiliary fields, then density, magnetic field and
        velocity-pressure.

        :return: the new iterate and its relative increment
        """
        config = self.config
        cache = self.cache
        dt = config.dt
        loads = loads or self.loads(state.t + 0.5 * dt)
        rho0, u0, B0 = state.rho.values, state.u.values, state.B.values
        rho1, u1, B1 = iterate.rho.values, iterate.u.values, iterate.B.values

        aux = cache.auxiliary(config.variant, rho0, u0, B0, rho1, u1, B1)

        if config.constant_density:
            rho_new = rho0.copy()
        else:
            mass = cache.dg.mass_matrix / dt
            transport = 0.5 * cache.density_operator(0.5 * (u0 + u1), aux.gamma)
            rho_new = factorize(mass + transport, 'density system').solve(
                (mass - transport) @ rho0 + loads.density)

        B_new = B0 - dt * (cache.curl @ aux.E.values) + dt * loads.magnetic

        a, handle = self._saddle_handle(rho_new)
        rhs = cache.rt.weighted_mass(rho0) @ u0 / dt - aux.convection + loads.momentum
        if not config.constant_density:
            rhs = rhs - cache.transport_vector(aux.theta.values, 0.5 * (rho0 + rho_new), aux.gamma)
        u_new, p_new = solve_saddle(a, self.constraint, rhs, gauge=self.gauge, handle=handle)

        increment = max(_relative_change(cache.rt, u1, u_new),
                        _relative_change(cache.rt, B1, B_new),
                        _relative_change(cache.dg, rho1, rho_new))
        new = State(state.k + 1, state.t + dt, Field(cache.rt, u_new), Field(cache.rt, B_new),
                    Field(cache.dg, rho_new), Field(cache.dg, p_new))
        return new, increment

    def step(self, state: State) -> Tuple[State, int]:
        """
        Advances one time step.

        :return: the new state and the number of sweeps
        :raises StepFailureError: when the increment stays above the tolerance
        """
        config = self.config
        loads = self.loads(state.t + 0.5 * config.dt)
        iterate = state
        previous = np.inf
        increment = np.inf
        for sweep in range(1, config.fp_maxiter + 1):
            iterate, increment = self.fixed_point_sweep(state, iterate, loads)
            logger.debug("Step %d sweep %d: increment %.3e", state.k + 1, sweep, increment)
            if increment < config.fp_tol:
                self.last_increment = increment
                return iterate, sweep
            # rounding noise floor: the increment stopped shrinking within reach of the tolerance
            if sweep > 2 and increment >= previous and increment < config.fp_stagnation * config.fp_tol:
                logger.warning("Step %d accepted after %d sweeps at increment %.3e above fp_tol %.1e (stagnated)",
                               state.k + 1, sweep, increment, config.fp_tol)
                self.last_increment = increment
                return iterate, sweep
            previous = increment
        raise StepFailureError("Fixed-point iteration did not converge in step {k} after {n} sweeps "
                               "(last increment {i:.3e})".format(k=state.k + 1, n=config.fp_maxiter, i=increment),
                               last_increment=float(increment), iterations=config.fp_maxiter)

    def residuals(self, state: State, iterate: State) -> Residuals:
        """Weak residuals of the coupled step equations for a candidate ``iterate``."""
        config = self.config
        cache = self.cache
        dt = config.dt
        loads = self.loads(state.t + 0.5 * dt)
        rho0, u0, B0 = state.rho.values, state.u.values, state.B.values
        rho1, u1, B1, p1 = iterate.rho.values, iterate.u.values, iterate.B.values, iterate.p.values
        aux = cache.auxiliary(config.variant, rho0, u0, B0, rho1, u1, B1)

        momentum = momentum_residual(cache, rho0, u0, rho1, u1, p1, aux, dt,
                                     transport=not config.constant_density, forcing=loads.momentum)
        induction = cache.rt.mass_matrix @ ((B1 - B0) / dt + cache.curl @ aux.E.values - loads.magnetic)
        if config.constant_density:
            density = rho1 - rho0
        else:
            density = (cache.dg.mass_matrix @ (rho1 - rho0) / dt
                       + cache.density_operator(0.5 * (u0 + u1), aux.gamma) @ (0.5 * (rho0 + rho1))
                       - loads.density)
        return Residuals(momentum, induction, density, cache.div @ u1)

    def run(self, state: State, num_steps: Optional[int] = None, observers: Iterable[Observer] = (),
            keep_states: bool = False) -> Tuple[State, List['diagnostics.InvariantRecord'], List[State]]:
        """
        Steps ``num_steps`` times (``config.num_steps`` by default), recording the
        invariants of the initial state and of every accepted step.

        :param observers: called as ``observer(k, t, state, record)`` after each record
        :return: final state, invariant records, and the states when ``keep_states``
        """
        num_steps = self.config.num_steps if num_steps is None else num_steps
        observers = list(observers)
        record = diagnostics.invariants(state, self.cache, fp_iters=0)
        records = [record]
        states = [state] if keep_states else []
        for observer in observers:
            observer(state.k, state.t, state, record)

        for _ in range(num_steps):
            state, sweeps = self.step(state)
            record = diagnostics.invariants(state, self.cache, fp_iters=sweeps)
            records.append(record)
            if keep_states:
                states.append(state)
            for observer in observers:
                observer(state.k, state.t, state, record)
        return state, records, states


def _relative_change(space, old: np.ndarray, new: np.ndarray) -> float:
    change = space.norm(new - old)
    size = space.norm(new)
    return change / size if size > 0 else change
