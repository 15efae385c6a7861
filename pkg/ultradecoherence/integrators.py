''' Integration of linear complex matrix equations

All solvers of the package integrate equations of the form dy/dt = f(t, y)
for flattened complex matrices. Three methods are available: a fixed-step
classical Runge-Kutta scheme, scipy's adaptive Dormand-Prince pair, and
exact propagation with matrix exponentials for time-independent generators.

Classes
-------
IntegratorConfig
    Method tag, tolerances and step bound.

Functions
---------
check_time_grid(t_grid)
    Validate an output grid.
integrate(rhs, y0, t_grid, config, stiffness_rate)
    Runge-Kutta integration sampled on a grid.
propagate(generator, y0, t_grid)
    Exact propagation y(t) = expm(generator t) y0 sampled on a grid.
'''

import logging
import math

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from ultradecoherence.core import ConfigurationError, IntegrationError

logger = logging.getLogger(__name__)


METHODS = ("RK4", "RK45", "expm")

# Largest gamma * step for which classical RK4 stays stable on a decaying mode.
RK4_STABILITY_LIMIT = 2.78



@dataclass(frozen=True)
class IntegratorConfig:
    ''' Configuration of an integration.

    Parameters
    ----------
    method : {"RK45", "RK4", "expm"}
        Adaptive Runge-Kutta, fixed-step Runge-Kutta, or exact matrix
        exponential propagation (time-independent generators only).
    rel_tol, abs_tol : float
        Tolerances of the adaptive method.
    max_step : float
        Largest step of the adaptive method, and the step of RK4.
    '''

    method: str = "RK45"
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 0.05

    def __post_init__(self):
        matches = [method for method in METHODS if method.lower() == str(self.method).lower()]
        if not matches:
            raise ConfigurationError("solver.method must be one of {0}, got {1!r}".format(METHODS, self.method))
        object.__setattr__(self, "method", matches[0])

        for name in ("rel_tol", "abs_tol", "max_step"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0):
                raise ConfigurationError("solver.{0} must be positive, got {1!r}".format(name, value))

    def replace(self, **changes) -> "IntegratorConfig":
        return replace(self, **changes)

    def effective_max_step(self, stiffness_rate: float = 0.0) -> float:
        ''' Step bound of the adaptive method.

        The step is bounded by ``0.1 / stiffness_rate`` so that the fastest
        dephasing is resolved.
        '''

        if stiffness_rate > 0:
            return min(self.max_step, 0.1 / stiffness_rate)
        return self.max_step



def check_time_grid(t_grid) -> np.ndarray:
    ''' Validate an output time grid.

    Parameters
    ----------
    t_grid : array_like
        Strictly increasing times starting at 0.

    Returns
    -------
    ndarray
        The grid as a float array.

    Raises
    ------
    ConfigurationError
    '''

    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0:
        raise ConfigurationError("Time grid must be a non-empty 1-d sequence")
    if t_grid[0] != 0:
        raise ConfigurationError("Time grid must start at 0, got {0}".format(t_grid[0]))
    if np.any(np.diff(t_grid) <= 0):
        raise ConfigurationError("Time grid must be strictly increasing")
    return t_grid



def integrate(rhs: Callable[[float, np.ndarray], np.ndarray],
              y0: np.ndarray,
              t_grid,
              config: IntegratorConfig,
              stiffness_rate: float = 0.0) -> np.ndarray:
    ''' Integrate a complex ODE with a Runge-Kutta method.

    Parameters
    ----------
    rhs : Callable[[float, ndarray], ndarray]
        Right-hand side acting on the flattened state.
    y0 : ndarray
        Initial state, any shape; it is flattened internally.
    t_grid : array_like
        Output times, strictly increasing, starting at 0.
    config : IntegratorConfig
        Method "RK45" or "RK4".
    stiffness_rate : float
        Fastest decay rate of the equation (largest dephasing rate).

    Returns
    -------
    ndarray
        States of shape ``(len(t_grid),) + y0.shape``.

    Raises
    ------
    IntegrationError
        If the step becomes too small, or the RK4 step is unstable for
        `stiffness_rate`.
    ConfigurationError
        If `config.method` is "expm".
    '''

    t_grid = check_time_grid(t_grid)
    shape = np.shape(y0)
    y0 = np.asarray(y0, dtype=complex).ravel()

    if config.method == "expm":
        raise ConfigurationError("integrate() needs a Runge-Kutta method; use propagate() for expm")

    if len(t_grid) == 1:
        return y0.reshape((1,) + shape)

    if config.method == "RK45":
        max_step = config.effective_max_step(stiffness_rate)
        logger.debug("RK45 over [0, %g] with max_step %g", t_grid[-1], max_step)
        solution = solve_ivp(rhs, (t_grid[0], t_grid[-1]), y0,
                             method="RK45",
                             t_eval=t_grid,
                             rtol=config.rel_tol,
                             atol=config.abs_tol,
                             max_step=max_step)
        if not solution.success:
            raise IntegrationError(
                "Adaptive integration failed: {0}. Fastest rate gamma = {1:g}, "
                "gamma * max_step = {2:g}; lower max_step or use method 'expm'.".format(
                    solution.message, stiffness_rate, stiffness_rate * max_step))
        return solution.y.T.reshape((len(t_grid),) + shape)

    return _integrate_rk4(rhs, y0, t_grid, config.max_step, stiffness_rate).reshape((len(t_grid),) + shape)


def _integrate_rk4(rhs, y0, t_grid, step, stiffness_rate):
    if stiffness_rate * step > RK4_STABILITY_LIMIT:
        raise IntegrationError(
            "RK4 step {0:g} is unstable for gamma = {1:g} (gamma * step = {2:g} > {3}); "
            "use max_step < {4:.3g}.".format(step, stiffness_rate, stiffness_rate * step,
                                             RK4_STABILITY_LIMIT, 2.5 / stiffness_rate))

    states = np.empty((len(t_grid), len(y0)), dtype=complex)
    states[0] = y0
    y = y0
    for index in range(1, len(t_grid)):
        t = t_grid[index - 1]
        interval = t_grid[index] - t
        substeps = max(1, math.ceil(interval / step - 1e-12))
        dt = interval / substeps
        for _ in range(substeps):
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
            k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
            k4 = rhs(t + dt, y + dt * k3)
            y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = t + dt
        if not np.all(np.isfinite(y)):
            raise IntegrationError("RK4 produced non-finite values at t = {0:g}".format(t_grid[index]))
        states[index] = y
    return states



def propagate(generator: np.ndarray, y0: np.ndarray, t_grid) -> np.ndarray:
    ''' Exact propagation of a time-independent linear equation.

    Solves dy/dt = generator @ y by repeated application of
    ``expm(generator * dt)``; one exponential is computed per distinct step.

    Parameters
    ----------
    generator : ndarray
        Square matrix acting on the flattened state.
    y0 : ndarray
        Initial state, any shape.
    t_grid : array_like
        Output times, strictly increasing, starting at 0.

    Returns
    -------
    ndarray
        States of shape ``(len(t_grid),) + y0.shape``.
    '''

    t_grid = check_time_grid(t_grid)
    shape = np.shape(y0)
    y = np.asarray(y0, dtype=complex).ravel()

    states = np.empty((len(t_grid), len(y)), dtype=complex)
    states[0] = y
    propagators = {}
    for index, dt in enumerate(np.diff(t_grid), start=1):
        key = round(float(dt), 12)
        if key not in propagators:
            propagators[key] = expm(generator * dt)
        y = propagators[key] @ y
        states[index] = y

    if not np.all(np.isfinite(states)):
        raise IntegrationError("Matrix exponential propagation produced non-finite values")
    return states.reshape((len(t_grid),) + shape)
