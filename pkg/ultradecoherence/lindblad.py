''' Integration of the joint master equation

The joint state of device and measured system is integrated in the
interaction picture, block by block,

    d rho_{mu nu}/dt = -i sum_lambda (exp(i Omega_{mu lambda} t) V^I_{mu lambda} rho_{lambda nu}
                                      - rho_{mu lambda} V^I_{lambda nu} exp(i Omega_{lambda nu} t))
                       - gamma_{mu nu} rho_{mu nu}

with V^I(t) = exp(i H_Q t) V exp(-i H_Q t). The result is the reference
against which the reduced dynamics is validated.

Classes
-------
Timeline
    Joint states sampled on a time grid.

Functions
---------
evolve_full(spec, rho0, t_grid, config)
    Integrate the joint master equation.
device_populations(rho)
    Populations p_mu = tr(rho_{mu mu}).
coherence_norms(rho)
    Frobenius norms of the off-diagonal blocks.
'''

import logging

from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd

from ultradecoherence.core import (BlockDensityMatrix, ConfigurationError, DEFAULT_TOLERANCES, InvariantViolation,
                                   ModelSpec, Tolerances, assemble_full, dagger, disassemble, min_eigenvalue)
from ultradecoherence.integrators import IntegratorConfig, check_time_grid, integrate, propagate

logger = logging.getLogger(__name__)



@dataclass(frozen=True, eq=False)
class Timeline:
    ''' Joint states sampled on a time grid.

    Parameters
    ----------
    times : ndarray
        Strictly increasing times.
    states : List[BlockDensityMatrix]
        One state per time, in the interaction picture.
    '''

    times: np.ndarray
    states: List[BlockDensityMatrix]

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ConfigurationError("Timeline has {0} times but {1} states".format(len(self.times), len(self.states)))

    def __len__(self):
        return len(self.times)

    def populations(self) -> np.ndarray:
        '''Device populations, shape (len(times), M+1).'''
        return np.array([device_populations(state) for state in self.states])

    def max_coherence(self) -> np.ndarray:
        '''Largest off-diagonal block norm at each time.'''
        return np.array([np.max(coherence_norms(state)) for state in self.states])

    def to_frame(self) -> pd.DataFrame:
        ''' Tabulate the timeline.

        Returns
        -------
        DataFrame
            Columns t, p_0 .. p_M and maxcoh.
        '''

        populations = self.populations()
        frame = pd.DataFrame({"t": self.times})
        for mu in range(populations.shape[1]):
            frame["p_{0}".format(mu)] = populations[:, mu]
        frame["maxcoh"] = self.max_coherence()
        return frame

    def plot(self, ax=None, **kwargs):
        ''' Plot the device populations against time.

        Any keyword arguments are passed to `Axes.plot`.
        '''

        import matplotlib.pyplot as plt

        if ax is None:
            ax = plt.gca()
        populations = self.populations()
        for mu in range(populations.shape[1]):
            ax.plot(self.times, populations[:, mu], label="$p_{0}$".format(mu), **kwargs)
        ax.set_xlabel("t")
        ax.set_ylabel("population")
        ax.legend()
        return ax



def device_populations(rho: BlockDensityMatrix, tolerances: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    ''' Device populations p_mu = tr(rho_{mu mu}).

    Parameters
    ----------
    rho : BlockDensityMatrix
    tolerances : Tolerances, optional
        The trace tolerance bounds the accepted imaginary residue.

    Returns
    -------
    ndarray
        Real vector of length M+1.

    Raises
    ------
    InvariantViolation
        If a population has an imaginary part above tolerance.
    '''

    populations = np.einsum("mmaa->m", rho.blocks)
    residue = float(np.max(np.abs(populations.imag)))
    if residue > tolerances.trace:
        raise InvariantViolation("Device populations have imaginary residue {0:.3g}".format(residue))
    return populations.real


def coherence_norms(rho: BlockDensityMatrix) -> np.ndarray:
    ''' Frobenius norms of the coherence blocks.

    Parameters
    ----------
    rho : BlockDensityMatrix

    Returns
    -------
    ndarray
        Symmetric (M+1)x(M+1) matrix with zero diagonal.
    '''

    norms = np.linalg.norm(rho.blocks, axis=(2, 3))
    norms = (norms + norms.T) / 2
    np.fill_diagonal(norms, 0.0)
    return norms



class _JointGenerator:
    # The joint equation written in the eigenbasis of H_Q, with the joint
    # index (mu, a) flattened to mu * d + a.

    def __init__(self, spec: ModelSpec):
        n, d = spec.num_levels, spec.dim
        eigenvalues, basis = spec.system.eigensystem()

        self.num_levels = n
        self.basis = np.kron(np.eye(n), basis)

        grid = spec.coupling_grid()
        grid = np.einsum("ai,mnab,bj->mnij", basis.conj(), grid, basis)
        self.coupling = grid.transpose(0, 2, 1, 3).reshape(n * d, n * d)

        self.energies = (spec.device.energies[:, None] + eigenvalues[None, :]).ravel()
        self.phases = self.energies[:, None] - self.energies[None, :]
        self.damping = np.kron(spec.device.gamma_matrix(), np.ones((d, d)))
        self.stiffness_rate = float(np.max(self.damping)) if self.damping.size else 0.0

    def to_eigenbasis(self, full: np.ndarray) -> np.ndarray:
        return dagger(self.basis) @ full @ self.basis

    def from_eigenbasis(self, full: np.ndarray) -> np.ndarray:
        return self.basis @ full @ dagger(self.basis)

    def rhs(self, t, y):
        rho = y.reshape(self.phases.shape)
        coupling = self.coupling * np.exp(1j * self.phases * t)
        return (-1j * (coupling @ rho - rho @ coupling) - self.damping * rho).ravel()

    def schrodinger_liouvillian(self) -> np.ndarray:
        # Row-major vectorisation: vec(A rho B) = kron(A, B.T) vec(rho)
        hamiltonian = np.diag(self.energies) + self.coupling
        identity = np.eye(len(self.energies))
        return (-1j * (np.kron(hamiltonian, identity) - np.kron(identity, hamiltonian.T))
                - np.diag(self.damping.ravel()))



def evolve_full(spec: ModelSpec,
                rho0: BlockDensityMatrix,
                t_grid,
                config: IntegratorConfig = None,
                tolerances: Tolerances = DEFAULT_TOLERANCES) -> Timeline:
    ''' Integrate the joint master equation.

    With the methods "RK45" and "RK4" the interaction-picture block equation
    is integrated directly. With "expm" the constant Schrödinger-picture
    Liouvillian is exponentiated and the result is transformed back to the
    interaction picture.

    Parameters
    ----------
    spec : ModelSpec
    rho0 : BlockDensityMatrix
        Initial joint state.
    t_grid : array_like
        Output times, strictly increasing, starting at 0.
    config : IntegratorConfig, optional
    tolerances : Tolerances, optional

    Returns
    -------
    Timeline
        Interaction-picture states at the times of `t_grid`.

    Raises
    ------
    IntegrationError
        If the integrator fails, with step-size guidance.
    InvariantViolation
        If hermiticity or positivity is lost beyond tolerance.
    '''

    config = config or IntegratorConfig()
    t_grid = check_time_grid(t_grid)

    if rho0.num_levels != spec.num_levels or rho0.dim != spec.dim:
        raise ConfigurationError("Initial state has shape ({0}, {1}), model has ({2}, {3})".format(
            rho0.num_levels, rho0.dim, spec.num_levels, spec.dim))

    generator = _JointGenerator(spec)
    initial = generator.to_eigenbasis(assemble_full(rho0))

    logger.debug("Joint integration: %d levels, dim %d, method %s, gamma_max %g",
                 spec.num_levels, spec.dim, config.method, generator.stiffness_rate)

    if config.method == "expm":
        states = propagate(generator.schrodinger_liouvillian(), initial, t_grid)
        states = states * np.exp(1j * generator.phases[None, :, :] * t_grid[:, None, None])
    else:
        states = integrate(generator.rhs, initial, t_grid, config, generator.stiffness_rate)

    timeline_states = []
    for t, full in zip(t_grid, states):
        full = _check_joint(generator.from_eigenbasis(full), t, tolerances)
        timeline_states.append(disassemble(full, spec.num_levels))

    return Timeline(t_grid, timeline_states)


def _check_joint(full: np.ndarray, t: float, tolerances: Tolerances) -> np.ndarray:
    deviation = float(np.max(np.abs(full - dagger(full))))
    if deviation > tolerances.hermitian:
        raise InvariantViolation("Joint state lost hermiticity at t = {0:g} (deviation {1:.3g})".format(t, deviation))
    full = (full + dagger(full)) / 2

    trace = np.trace(full).real
    if abs(trace - 1) > tolerances.trace:
        logger.warning("Trace drift %.3g at t = %g, renormalising", trace - 1, t)
        full = full / trace

    smallest = min_eigenvalue(full)
    if smallest < -tolerances.psd:
        raise InvariantViolation("Joint state has eigenvalue {0:.3g} at t = {1:g}".format(smallest, t))
    return full
