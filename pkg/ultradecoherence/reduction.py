''' Adiabatic elimination of the device coherences

When the device dephases much faster than anything else, the coherence
blocks follow the diagonal blocks adiabatically and can be eliminated.
What remains is a master equation for the diagonal blocks only, written in
terms of the operators

    K_{mu nu}      = integral_0^inf exp(-(gamma_{mu nu} + i Omega_{mu nu}) tau) V^I_{mu nu}(-tau) d tau
    F_{mu lambda}  = K_{lambda mu} V_{mu lambda} + V_{lambda mu} K_{mu lambda}
    Gamma_mu       = sum_{lambda != mu} V_{mu lambda} K_{lambda mu}

The transition lambda -> mu happens with rate tr(F_{mu lambda} rho_{lambda lambda}).

Classes
-------
KMode
    Exact or resonant evaluation of K.
ReducedModel
    The operators K, F and Gamma of a model.

Functions
---------
compute_K(spec, mu, nu, mode)
    K_{mu nu} in closed form.
quadrature_K(spec, mu, nu)
    K_{mu nu} by numerical quadrature of its defining integral.
compute_reduced(spec, mode)
    All K, F and Gamma operators of a model.
evolve_diagonal(reduced, diagonal, t_grid, config)
    Integrate the diagonal-block master equation.
transition_rates(reduced, rho, source)
    Rates W_{mu lambda} = tr(F_{mu lambda} rho).
check_timescales(reduced)
    Warn when the slow rates are not well separated from the dephasing.
'''

import logging

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Tuple, Union

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import expm

from ultradecoherence.core import (BlockDensityMatrix, ConfigurationError, DecoherenceRateError, DEFAULT_TOLERANCES,
                                   ModelSpec, PositivityError, Tolerances, as_operator, dagger, min_eigenvalue,
                                   _complex_to_pairs)
from ultradecoherence.integrators import IntegratorConfig, check_time_grid, integrate, propagate
from ultradecoherence.lindblad import Timeline

logger = logging.getLogger(__name__)


# Largest accepted ratio between the fastest transition rate and the slowest dephasing
TIMESCALE_RATIO = 0.1



class KMode(Enum):
    ''' Evaluation of the K operators.

    EXACT uses the Markov integral in closed form; RESONANT uses the
    approximation K = V / gamma, exact when H_Q = 0 and Omega = 0.
    '''

    EXACT = "exact"
    RESONANT = "resonant"

    @classmethod
    def parse(cls, value) -> "KMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigurationError("k_mode must be 'exact' or 'resonant', got {0!r}".format(value)) from None



def _pair_rate(spec: ModelSpec, mu: int, nu: int) -> float:
    if mu == nu:
        raise ConfigurationError("K is only defined for mu != nu, got ({0},{1})".format(mu, nu))
    gamma = spec.device.gamma(mu, nu)
    if not gamma > 0:
        raise DecoherenceRateError(
            "gamma_({0},{1}) = {2:g}: adiabatic elimination needs a positive dephasing rate".format(mu, nu, gamma))
    return gamma


def compute_K(spec: ModelSpec, mu: int, nu: int, mode: KMode = KMode.RESONANT) -> np.ndarray:
    ''' The operator K_{mu nu}.

    In exact mode the matrix elements in the eigenbasis of H_Q are

        (K_{mu nu})_{ab} = (V_{mu nu})_{ab} / (gamma_{mu nu} + i (Omega_{mu nu} + E_a - E_b)).

    Parameters
    ----------
    spec : ModelSpec
    mu, nu : int
        Distinct device levels.
    mode : KMode
        Exact or resonant evaluation.

    Returns
    -------
    ndarray
        K_{mu nu} in the original basis of Q.

    Raises
    ------
    DecoherenceRateError
        If gamma_{mu nu} = 0.
    '''

    mode = KMode.parse(mode)
    gamma = _pair_rate(spec, mu, nu)
    coupling = spec.coupling_block(mu, nu)

    if mode is KMode.RESONANT:
        return coupling / gamma

    eigenvalues, basis = spec.system.eigensystem()
    rotated = dagger(basis) @ coupling @ basis
    denominator = gamma + 1j * (spec.device.omega(mu, nu) + eigenvalues[:, None] - eigenvalues[None, :])
    return basis @ (rotated / denominator) @ dagger(basis)


def quadrature_K(spec: ModelSpec, mu: int, nu: int, horizon: float = 40.0, step: float = 0.01) -> np.ndarray:
    ''' K_{mu nu} by numerical quadrature.

    Evaluates the Markov integral with Simpson's rule on a uniform grid.

    Parameters
    ----------
    spec : ModelSpec
    mu, nu : int
        Distinct device levels.
    horizon : float
        Upper limit of the integral in units of 1/gamma_{mu nu}.
    step : float
        Quadrature step in units of 1/gamma_{mu nu}.

    Returns
    -------
    ndarray
    '''

    gamma = _pair_rate(spec, mu, nu)
    h = step / gamma
    num_steps = int(np.ceil(horizon / step))
    num_steps += num_steps % 2
    taus = h * np.arange(num_steps + 1)

    hamiltonian = spec.system.hamiltonian
    coupling = spec.coupling_block(mu, nu)
    # V^I(-tau) = exp(-i H tau) V exp(i H tau)
    step_propagator = expm(-1j * hamiltonian * h)
    propagator = np.eye(spec.dim, dtype=complex)

    samples = np.empty((len(taus), spec.dim, spec.dim), dtype=complex)
    for index in range(len(taus)):
        samples[index] = propagator @ coupling @ dagger(propagator)
        propagator = step_propagator @ propagator

    weights = np.exp(-(gamma + 1j * spec.device.omega(mu, nu)) * taus)
    return simpson(weights[:, None, None] * samples, x=taus, axis=0)



@dataclass(frozen=True, eq=False)
class ReducedModel:
    ''' Operators of the reduced jump dynamics.

    Parameters
    ----------
    spec : ModelSpec
        The model the operators were derived from.
    mode : KMode
    K : dict
        ``(mu, nu) -> K_{mu nu}`` for every coupled pair.
    F : dict
        ``(mu, lambda) -> F_{mu lambda}``, the rate operator of lambda -> mu.
    Gamma : dict
        ``mu -> Gamma_mu``, the back-reaction operator of level mu.
    '''

    spec: ModelSpec
    mode: KMode
    K: Mapping[Tuple[int, int], np.ndarray] = field(default_factory=dict)
    F: Mapping[Tuple[int, int], np.ndarray] = field(default_factory=dict)
    Gamma: Mapping[int, np.ndarray] = field(default_factory=dict)

    @property
    def num_levels(self) -> int:
        return self.spec.num_levels

    @property
    def dim(self) -> int:
        return self.spec.dim

    def _zeros(self):
        return np.zeros((self.dim, self.dim), dtype=complex)

    def K_block(self, mu: int, nu: int) -> np.ndarray:
        return np.array(self.K.get((mu, nu), self._zeros()))

    def F_block(self, mu: int, nu: int) -> np.ndarray:
        '''F_{mu nu}, zero for uncoupled pairs.'''
        return np.array(self.F.get((mu, nu), self._zeros()))

    def back_reaction(self, mu: int) -> np.ndarray:
        '''Gamma_mu.'''
        return np.array(self.Gamma.get(mu, self._zeros()))

    def targets(self, source: int) -> Tuple[int, ...]:
        '''Levels reachable from `source` in one transition.'''
        return tuple(mu for mu in range(self.num_levels) if (mu, source) in self.F)

    def to_dict(self) -> dict:
        ''' Dump the operators as plain Python containers.

        Complex entries are written as ``[re, im]`` pairs.
        '''

        return {
            "model": self.spec.name,
            "mode": self.mode.value,
            "K": [{"mu": mu, "nu": nu, "operator": _complex_to_pairs(op)} for (mu, nu), op in sorted(self.K.items())],
            "F": [{"mu": mu, "nu": nu, "operator": _complex_to_pairs(op)} for (mu, nu), op in sorted(self.F.items())],
            "Gamma": [{"mu": mu, "operator": _complex_to_pairs(op)} for mu, op in sorted(self.Gamma.items())],
        }



def compute_reduced(spec: ModelSpec, mode: KMode = KMode.RESONANT) -> ReducedModel:
    ''' Derive the reduced model.

    Parameters
    ----------
    spec : ModelSpec
    mode : KMode, optional
        Resonant by default.

    Returns
    -------
    ReducedModel

    Raises
    ------
    DecoherenceRateError
        If a coupled pair has gamma_{mu nu} = 0.
    '''

    mode = KMode.parse(mode)
    pairs = spec.coupling.pairs()

    K = {(mu, nu): compute_K(spec, mu, nu, mode) for mu, nu in pairs}

    F = {}
    Gamma = {mu: np.zeros((spec.dim, spec.dim), dtype=complex) for mu in range(spec.num_levels)}
    for mu, lam in pairs:
        coupling_forward = spec.coupling_block(mu, lam)
        coupling_backward = spec.coupling_block(lam, mu)
        F[(mu, lam)] = K[(lam, mu)] @ coupling_forward + coupling_backward @ K[(mu, lam)]
        Gamma[mu] = Gamma[mu] + coupling_forward @ K[(lam, mu)]

    reduced = ReducedModel(spec, mode, K, F, Gamma)
    check_timescales(reduced)
    return reduced



def check_timescales(reduced: ReducedModel, threshold: float = TIMESCALE_RATIO) -> float:
    ''' Compare the slow transition rates with the dephasing rates.

    The largest possible transition rate is the largest spectral norm of
    the F operators. A warning is logged if its ratio to the smallest
    dephasing rate of a coupled pair exceeds `threshold`.

    Returns
    -------
    float
        The ratio.
    '''

    if not reduced.F:
        return 0.0

    max_rate = max(np.linalg.norm(op, 2) for op in reduced.F.values())
    min_gamma = min(reduced.spec.device.gamma(mu, nu) for mu, nu in reduced.F)
    ratio = float(max_rate / min_gamma)
    if ratio > threshold:
        logger.warning("Transition rate %.3g is not small against the dephasing rate %.3g (ratio %.3g > %g); "
                       "the reduced dynamics may be inaccurate", max_rate, min_gamma, ratio, threshold)
    return ratio



def _diagonal_generator(reduced: ReducedModel) -> np.ndarray:
    # Generator of the diagonal blocks in the Schrödinger picture of Q, acting
    # on the row-major vectorisation of all blocks stacked by level.
    n, d = reduced.num_levels, reduced.dim
    size = d * d
    identity = np.eye(d)
    hamiltonian = np.array(reduced.spec.system.hamiltonian)

    generator = np.zeros((n * size, n * size), dtype=complex)
    for mu in range(n):
        gamma = reduced.back_reaction(mu)
        effective = hamiltonian - 1j * gamma
        # -i (H_eff D - D H_eff^dagger)
        generator[mu * size:(mu + 1) * size, mu * size:(mu + 1) * size] = (
            -1j * np.kron(effective, identity) + 1j * np.kron(identity, effective.conj()))

    for mu, lam in reduced.F:
        coupling_forward = reduced.spec.coupling_block(mu, lam)
        coupling_backward = reduced.spec.coupling_block(lam, mu)
        # V_{mu lam} D_lam K_{lam mu} + K_{mu lam} D_lam V_{lam mu}
        gain = (np.kron(coupling_forward, reduced.K[(lam, mu)].T)
                + np.kron(reduced.K[(mu, lam)], coupling_backward.T))
        generator[mu * size:(mu + 1) * size, lam * size:(lam + 1) * size] += gain

    return generator


def evolve_diagonal(reduced: ReducedModel,
                    diagonal: Union[Mapping[int, np.ndarray], BlockDensityMatrix],
                    t_grid,
                    config: IntegratorConfig = None,
                    tolerances: Tolerances = DEFAULT_TOLERANCES) -> Timeline:
    ''' Integrate the master equation of the diagonal blocks.

    The equation is integrated in the Schrödinger picture of Q, where it is
    time independent, and the blocks are returned in the interaction
    picture, comparable with `evolve_full`.

    Parameters
    ----------
    reduced : ReducedModel
    diagonal : dict or BlockDensityMatrix
        Initial diagonal blocks ``mu -> rho_{mu mu}``; missing levels are empty.
    t_grid : array_like
        Output times, strictly increasing, starting at 0.
    config : IntegratorConfig, optional
    tolerances : Tolerances, optional

    Returns
    -------
    Timeline
        Block-diagonal states.

    Raises
    ------
    PositivityError
        If a block acquires a negative eigenvalue beyond tolerance, which
        may happen in exact mode.
    '''

    config = config or IntegratorConfig()
    t_grid = check_time_grid(t_grid)
    n, d = reduced.num_levels, reduced.dim

    if isinstance(diagonal, BlockDensityMatrix):
        diagonal = diagonal.diagonal()

    initial = np.zeros((n, d, d), dtype=complex)
    for mu, block in diagonal.items():
        if not 0 <= mu < n:
            raise ConfigurationError("Diagonal block for level {0} outside 0..{1}".format(mu, n - 1))
        initial[mu] = as_operator(block, d)

    total = np.einsum("maa->", initial)
    if abs(total - 1) > tolerances.trace:
        raise ConfigurationError("Diagonal blocks have total trace {0:.12g}, expected 1".format(total.real))
    for mu in range(n):
        if min_eigenvalue(initial[mu]) < -tolerances.psd:
            raise ConfigurationError("Initial block {0} is not positive semidefinite".format(mu))

    generator = _diagonal_generator(reduced)
    if config.method == "expm":
        states = propagate(generator, initial, t_grid)
    else:
        stiffness = max(2 * np.linalg.norm(reduced.back_reaction(mu), 2) for mu in range(n))
        states = integrate(lambda t, y: generator @ y, initial, t_grid, config, stiffness)

    eigenvalues, basis = reduced.spec.system.eigensystem()
    timeline_states = []
    for t, blocks in zip(t_grid, states):
        blocks = _check_diagonal(blocks, t, reduced.mode, tolerances)
        # Back to the interaction picture: exp(i H t) D exp(-i H t)
        rotation = basis @ np.diag(np.exp(1j * eigenvalues * t)) @ dagger(basis)
        blocks = np.einsum("ab,mbc,cd->mad", rotation, blocks, dagger(rotation))
        timeline_states.append(BlockDensityMatrix.from_diagonal(dict(enumerate(blocks)), n))

    return Timeline(t_grid, timeline_states)


def _check_diagonal(blocks: np.ndarray, t: float, mode: KMode, tolerances: Tolerances) -> np.ndarray:
    blocks = (blocks + dagger(blocks)) / 2

    total = np.einsum("maa->", blocks).real
    if abs(total - 1) > tolerances.trace:
        logger.warning("Trace drift %.3g of the diagonal blocks at t = %g, renormalising", total - 1, t)
        blocks = blocks / total

    for mu, block in enumerate(blocks):
        smallest = min_eigenvalue(block)
        if smallest < -tolerances.psd:
            hint = "; the exact K mode does not guarantee positivity, use resonant mode" if mode is KMode.EXACT else ""
            raise PositivityError("Block ({0},{0}) has eigenvalue {1:.3g} at t = {2:g}{3}".format(
                mu, smallest, t, hint))
    return blocks



def transition_rates(reduced: ReducedModel, rho: np.ndarray, source: int, tol: float = 1e-12) -> np.ndarray:
    ''' Transition rates out of a device level.

    Parameters
    ----------
    reduced : ReducedModel
    rho : ndarray
        Normalised state of Q while the device is in `source`, in the same
        picture as the operators (they coincide at t = 0).
    source : int
        The device level lambda.
    tol : float
        Negative rates below ``-tol`` are reported with a warning.

    Returns
    -------
    ndarray
        Vector W of length M+1 with W[mu] = tr(F_{mu lambda} rho) and
        W[lambda] = 0.
    '''

    rho = as_operator(rho, reduced.dim)
    rates = np.zeros(reduced.num_levels)
    for mu in reduced.targets(source):
        rates[mu] = np.trace(reduced.F[(mu, source)] @ rho).real

    if np.any(rates < -tol):
        logger.warning("Negative transition rates %s from level %d (%s mode)",
                       np.array2string(rates[rates < -tol]), source, reduced.mode.value)
    return rates
