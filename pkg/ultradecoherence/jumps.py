''' The classical jump process of the device

While the device rests in a level mu, the measured system follows the
trace-decreasing back-reaction dynamics

    d rho/dt = -i (H_eff rho - rho H_eff^dagger),    H_eff = H_Q - i Gamma_mu,

and the trace of rho is the probability that no transition has happened
yet. A transition to nu happens with rate tr(F_{nu mu} rho) / tr(rho), after
which the measured system assumes the renormalised state
(V_{nu mu} rho K_{mu nu} + K_{nu mu} rho V_{mu nu}) / tr(...).

States of the conditional dynamics are kept in the Schrödinger picture of Q.

Classes
-------
ConditionalTimeline
    Unnormalised states of the back-reaction dynamics.
SurvivalCurve
    Probability that no transition happened before t.
FirstStepDistribution
    Probabilities of the first transition target.
ClickEvent, Trajectory
    Records of sampled transitions.
FirstClickSampler
    Inverse-transform sampler of the first transition.

Functions
---------
effective_hamiltonian(hamiltonian, gamma)
back_react(gamma, rho0, hamiltonian, t_grid, config)
survival(timeline)
first_step_distribution(reduced, rho0, source, t_max, config)
post_transition_state(reduced, rho, source, target)
jump_operator(reduced, source, target)
sample_first_click(reduced, rho0, source, seed, t_max, config)
sample_trajectories(reduced, rho0, source, n_traj, seed, t_max, config)
empirical_survival(trajectories, t_grid)
estimate_survival_mc(reduced, rho0, source, n_traj, seed, t_grid, config)
'''

import logging

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.integrate import simpson
from scipy.stats import norm
from tqdm import tqdm

from ultradecoherence.core import (ConfigurationError, DEFAULT_TOLERANCES, ForbiddenTransitionError, InvariantViolation,
                                   NumericalError, Tolerances, as_operator, dagger, min_eigenvalue)
from ultradecoherence.integrators import IntegratorConfig, check_time_grid, integrate, propagate
from ultradecoherence.reduction import ReducedModel

logger = logging.getLogger(__name__)


# Survival below which the first-step quadrature is considered complete
ESCAPE_CUTOFF = 1e-6



# CONDITIONAL DYNAMICS



def effective_hamiltonian(hamiltonian: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    '''Non-hermitian Hamiltonian H_Q - i Gamma.'''
    return as_operator(hamiltonian) - 1j * as_operator(gamma)


@dataclass(frozen=True, eq=False)
class ConditionalTimeline:
    ''' Unnormalised states of the back-reaction dynamics.

    Parameters
    ----------
    times : ndarray
    states : ndarray
        Array of shape (len(times), d, d).
    gamma : ndarray
        The back-reaction operator.
    '''

    times: np.ndarray
    states: np.ndarray
    gamma: np.ndarray

    def __len__(self):
        return len(self.times)

    def traces(self) -> np.ndarray:
        return np.einsum("taa->t", self.states).real

    def normalized(self) -> np.ndarray:
        '''States divided by their trace.'''
        return self.states / self.traces()[:, None, None]

    def density(self) -> np.ndarray:
        '''Probability density of the transition time, tr((Gamma + Gamma^dagger) rho).'''
        loss = self.gamma + dagger(self.gamma)
        return np.einsum("ab,tba->t", loss, self.states).real

    def rates(self, operator: np.ndarray) -> np.ndarray:
        '''Unnormalised rate tr(operator rho) along the timeline.'''
        return np.einsum("ab,tba->t", operator, self.states).real


def back_react(gamma: np.ndarray,
               rho0: np.ndarray,
               hamiltonian: np.ndarray = None,
               t_grid=None,
               config: IntegratorConfig = None,
               tolerances: Tolerances = DEFAULT_TOLERANCES) -> ConditionalTimeline:
    ''' Integrate the back-reaction dynamics.

    Parameters
    ----------
    gamma : ndarray
        Back-reaction operator Gamma_mu.
    rho0 : ndarray
        Initial normalised state of Q.
    hamiltonian : ndarray, optional
        H_Q; zero if omitted.
    t_grid : array_like
        Output times, strictly increasing, starting at 0.
    config : IntegratorConfig, optional
        Exact exponentiation by default.
    tolerances : Tolerances, optional

    Returns
    -------
    ConditionalTimeline

    Raises
    ------
    InvariantViolation
        If the trace increases or the state loses positivity.
    '''

    gamma = as_operator(gamma)
    dim = gamma.shape[0]
    rho0 = as_operator(rho0, dim)
    hamiltonian = np.zeros((dim, dim), dtype=complex) if hamiltonian is None else as_operator(hamiltonian, dim)
    config = config or IntegratorConfig(method="expm")
    t_grid = check_time_grid(t_grid)

    if abs(np.trace(rho0) - 1) > tolerances.trace:
        raise ConfigurationError("Initial state has trace {0:.12g}, expected 1".format(np.trace(rho0).real))
    if min_eigenvalue(rho0) < -tolerances.psd:
        raise ConfigurationError("Initial state is not positive semidefinite")

    effective = effective_hamiltonian(hamiltonian, gamma)
    identity = np.eye(dim)
    # Row-major vectorisation of -i (H_eff rho - rho H_eff^dagger)
    generator = -1j * np.kron(effective, identity) + 1j * np.kron(identity, effective.conj())

    if config.method == "expm":
        states = propagate(generator, rho0, t_grid)
    else:
        stiffness = 2 * float(np.linalg.norm(gamma, 2))
        states = integrate(lambda t, y: generator @ y, rho0, t_grid, config, stiffness)

    states = (states + dagger(states)) / 2
    timeline = ConditionalTimeline(t_grid, states, gamma)

    traces = timeline.traces()
    increase = np.diff(traces)
    if np.any(increase > tolerances.trace):
        index = int(np.argmax(increase))
        raise InvariantViolation("Survival increases by {0:.3g} at t = {1:g}; check the sign of Gamma".format(
            increase[index], t_grid[index + 1]))

    for t, state, trace in zip(t_grid, states, traces):
        if min_eigenvalue(state) < -tolerances.psd * max(trace, 1e-300):
            raise InvariantViolation("Conditional state lost positivity at t = {0:g}".format(t))

    return timeline



# SURVIVAL AND FIRST STEP



@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    ''' Probability Pr(T >= t) that no transition happened before t.

    Parameters
    ----------
    times : ndarray
    values : ndarray
    ci_halfwidth : ndarray, optional
        Pointwise confidence half-widths of an empirical estimate.
    '''

    times: np.ndarray
    values: np.ndarray
    ci_halfwidth: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.times)

    def hazard(self) -> np.ndarray:
        '''Transition rate -d/dt log Pr(T >= t), by finite differences.'''
        with np.errstate(divide="ignore", invalid="ignore"):
            return -np.gradient(np.log(self.values), self.times)

    def density(self) -> np.ndarray:
        '''Probability density -d/dt Pr(T >= t), by finite differences.'''
        return -np.gradient(self.values, self.times)

    def to_frame(self, value_column: str = "p", analytic: np.ndarray = None) -> pd.DataFrame:
        ''' Tabulate the curve.

        Parameters
        ----------
        value_column : str
            Name of the value column.
        analytic : ndarray, optional
            Reference values, written to the column p_analytic.

        Returns
        -------
        DataFrame
        '''

        frame = pd.DataFrame({"t": self.times, value_column: self.values})
        if self.ci_halfwidth is not None:
            frame["ci_halfwidth"] = self.ci_halfwidth
        if analytic is not None:
            frame["p_analytic"] = analytic
        return frame

    def plot(self, ax=None, **kwargs):
        ''' Plot the survival probability against time.

        Empirical estimates are drawn with a shaded confidence band. Any
        keyword arguments are passed to `Axes.plot`.
        '''

        import matplotlib.pyplot as plt

        if ax is None:
            ax = plt.gca()
        ax.plot(self.times, self.values, **kwargs)
        if self.ci_halfwidth is not None:
            ax.fill_between(self.times, self.values - self.ci_halfwidth, self.values + self.ci_halfwidth, alpha=0.3)
        ax.set_xlabel("t")
        ax.set_ylabel("Pr(T >= t)")
        return ax


def survival(timeline: ConditionalTimeline) -> SurvivalCurve:
    '''Survival curve tr(rho(t)) of a back-reaction timeline.'''
    return SurvivalCurve(np.array(timeline.times), timeline.traces())



@dataclass(frozen=True, eq=False)
class FirstStepDistribution:
    ''' Distribution of the first transition target.

    Parameters
    ----------
    source : int
    targets : tuple of int
    probabilities : ndarray
        pi_{nu mu}, aligned with `targets`.
    remainder : float
        Survival at the end of the quadrature, the probability never accounted for.
    t_max : float
        Quadrature horizon.
    '''

    source: int
    targets: Tuple[int, ...]
    probabilities: np.ndarray
    remainder: float
    t_max: float

    @property
    def escape_total(self) -> float:
        return float(np.sum(self.probabilities))

    def probability(self, target: int) -> float:
        if target not in self.targets:
            return 0.0
        return float(self.probabilities[self.targets.index(target)])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"to_level": list(self.targets), "probability": self.probabilities})


def first_step_distribution(reduced: ReducedModel,
                            rho0: np.ndarray,
                            source: int = 0,
                            t_max: float = None,
                            config: IntegratorConfig = None,
                            t_points: int = 2001,
                            cutoff: float = ESCAPE_CUTOFF,
                            max_doublings: int = 12,
                            tolerances: Tolerances = DEFAULT_TOLERANCES) -> FirstStepDistribution:
    ''' Probabilities of the first transition target.

    pi_{nu mu} is the integral of tr(F_{nu mu} rho(t)) along the back-reaction
    timeline, evaluated with Simpson's rule.

    Parameters
    ----------
    reduced : ReducedModel
    rho0 : ndarray
        Initial normalised state of Q.
    source : int
        Initial device level.
    t_max : float, optional
        Quadrature horizon. If omitted, the horizon is doubled until the
        survival falls below `cutoff`.
    config : IntegratorConfig, optional
    t_points : int
        Number of quadrature points.
    cutoff : float
        Survival accepted as complete escape.
    max_doublings : int
        Largest number of horizon doublings.
    tolerances : Tolerances, optional

    Returns
    -------
    FirstStepDistribution
    '''

    targets = reduced.targets(source)
    gamma = reduced.back_reaction(source)
    hamiltonian = reduced.spec.system.hamiltonian
    t_points = t_points + 1 - t_points % 2

    if t_max is None:
        scale = 2 * float(np.linalg.norm(gamma, 2))
        horizon = 10.0 / scale if scale > 0 else 1.0
        doublings = max_doublings
    else:
        horizon = float(t_max)
        doublings = 0

    while True:
        t_grid = np.linspace(0, horizon, t_points)
        timeline = back_react(gamma, rho0, hamiltonian, t_grid, config, tolerances)
        remainder = float(timeline.traces()[-1])
        if remainder < cutoff or doublings == 0:
            break
        horizon *= 2
        doublings -= 1

    if remainder >= cutoff:
        logger.warning("Slow escape from level %d: survival %.3g at t_max = %g is above %g; "
                       "first-step probabilities miss at most this remainder", source, remainder, horizon, cutoff)

    probabilities = np.array([simpson(timeline.rates(reduced.F[(target, source)]), x=t_grid) for target in targets])
    return FirstStepDistribution(source, targets, probabilities, remainder, horizon)



# TRANSITIONS



def post_transition_state(reduced: ReducedModel,
                          rho: np.ndarray,
                          source: int,
                          target: int,
                          tolerances: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    ''' State of Q right after a transition.

    Parameters
    ----------
    reduced : ReducedModel
    rho : ndarray
        Normalised state of Q before the transition.
    source, target : int
        Device levels mu and nu of the transition mu -> nu.
    tolerances : Tolerances, optional
        The degenerate tolerance bounds the accepted normalisation.

    Returns
    -------
    ndarray
        Unit-trace density operator.

    Raises
    ------
    ForbiddenTransitionError
        If the transition has zero rate from `rho`.
    '''

    rho = as_operator(rho, reduced.dim)
    if (target, source) not in reduced.F:
        raise ForbiddenTransitionError("No coupling between levels {0} and {1}".format(source, target))

    state = (reduced.spec.coupling_block(target, source) @ rho @ reduced.K[(source, target)]
             + reduced.K[(target, source)] @ rho @ reduced.spec.coupling_block(source, target))
    trace = np.trace(state).real
    if trace <= tolerances.degenerate:
        raise ForbiddenTransitionError("Transition {0} -> {1} has rate {2:.3g} from this state".format(
            source, target, trace))

    state = state / trace
    return (state + dagger(state)) / 2


def jump_operator(reduced: ReducedModel, source: int, target: int) -> np.ndarray:
    ''' Transition operator R = sqrt(2 / gamma_{nu mu}) V_{nu mu}.

    In resonant mode the rate is tr(R rho R^dagger) and the post-transition
    state is R rho R^dagger / tr(R rho R^dagger).
    '''

    gamma = reduced.spec.device.gamma(target, source)
    if not gamma > 0:
        raise ConfigurationError("Transition {0} -> {1} has no dephasing rate".format(source, target))
    return np.sqrt(2 / gamma) * reduced.spec.coupling_block(target, source)



# SAMPLING



@dataclass(frozen=True, eq=False)
class ClickEvent:
    ''' A sampled transition.

    Parameters
    ----------
    time : float
    from_level, to_level : int
    post_state : ndarray
        State of Q right after the transition.
    '''

    time: float
    from_level: int
    to_level: int
    post_state: np.ndarray


@dataclass(frozen=True, eq=False)
class Trajectory:
    ''' A sampled history.

    Parameters
    ----------
    seed : int
        Master seed of the ensemble.
    index : int
        Trajectory index within the ensemble.
    events : tuple of ClickEvent
    censored : bool
        True if the horizon was reached without a further transition.
    t_max : float
    '''

    seed: int
    index: int
    events: Tuple[ClickEvent, ...] = field(default_factory=tuple)
    censored: bool = True
    t_max: float = np.inf

    @property
    def t_click(self) -> float:
        '''Time of the first transition, infinite if there is none.'''
        return self.events[0].time if self.events else np.inf

    @property
    def to_level(self) -> int:
        '''Target of the first transition, -1 if there is none.'''
        return self.events[0].to_level if self.events else -1


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    ''' Random generator of one trajectory.

    The stream is derived from ``SeedSequence(seed, spawn_key=(index,))``,
    so it depends only on the master seed and the trajectory index.
    '''

    if seed is None:
        raise ConfigurationError("A seed is required for sampling")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))



class FirstClickSampler:
    ''' Inverse-transform sampler of the first transition.

    The back-reaction timeline is computed once on a uniform grid, refined
    by doubling until linear interpolation of the survival between grid
    points is accurate to `interpolation_tol`. Each trajectory then draws
    two uniforms: the first is inverted on the survival curve to give the
    transition time, the second selects the target with probability
    proportional to tr(F_{nu mu} rho(T)).

    Parameters
    ----------
    reduced : ReducedModel
    rho0 : ndarray
        Initial normalised state of Q.
    source : int
        Initial device level.
    t_max : float
        Horizon; trajectories without a transition before it are censored.
    config : IntegratorConfig, optional
    tolerances : Tolerances, optional
    interpolation_tol : float
        Accepted interpolation error of the survival curve.
    initial_points : int
        Size of the first grid.
    max_refinements : int
        Largest number of grid doublings.
    '''

    def __init__(self,
                 reduced: ReducedModel,
                 rho0: np.ndarray,
                 source: int = 0,
                 t_max: float = 100.0,
                 config: IntegratorConfig = None,
                 tolerances: Tolerances = DEFAULT_TOLERANCES,
                 interpolation_tol: float = 1e-6,
                 initial_points: int = 257,
                 max_refinements: int = 14):

        if not t_max > 0:
            raise ConfigurationError("t_max must be positive, got {0!r}".format(t_max))

        self.reduced = reduced
        self.rho0 = as_operator(rho0, reduced.dim)
        self.source = source
        self.t_max = float(t_max)
        self.config = config
        self.tolerances = tolerances
        self.interpolation_tol = interpolation_tol
        self.targets = reduced.targets(source)

        self._build_cache(initial_points, max_refinements)


    def _build_cache(self, points, max_refinements):
        gamma = self.reduced.back_reaction(self.source)
        hamiltonian = self.reduced.spec.system.hamiltonian

        def timeline_on(num_points):
            return back_react(gamma, self.rho0, hamiltonian, np.linspace(0, self.t_max, num_points),
                              self.config, self.tolerances)

        timeline = timeline_on(points)
        error = np.inf
        for _ in range(max_refinements):
            fine = timeline_on(2 * points - 1)
            values = fine.traces()
            error = float(np.max(np.abs(values[1::2] - (values[:-2:2] + values[2::2]) / 2)))
            timeline, points = fine, 2 * points - 1
            if error < self.interpolation_tol:
                break
        else:
            logger.warning("Survival interpolation error %.3g above %g after %d refinements",
                           error, self.interpolation_tol, max_refinements)

        logger.debug("Sampler cache for level %d: %d points, interpolation error %.3g", self.source, points, error)

        values = timeline.traces()
        self.times = timeline.times
        self.states = timeline.states
        self.survival = np.minimum.accumulate(values / values[0])
        self.weights = np.stack([timeline.rates(self.reduced.F[(target, self.source)]) for target in self.targets],
                                axis=-1) if self.targets else np.zeros((len(values), 0))


    def draw(self, u: float, v: float) -> Optional[ClickEvent]:
        ''' Map two uniforms to a transition.

        Parameters
        ----------
        u : float
            Inverted on the survival curve; no transition if ``u`` is below
            the survival at the horizon.
        v : float
            Selects the target.

        Returns
        -------
        ClickEvent or None
            None for a censored draw.
        '''

        survival = self.survival
        if not self.targets or u < survival[-1]:
            return None

        k = max(int(np.searchsorted(-survival, -u, side="left")), 1)
        drop = survival[k - 1] - survival[k]
        fraction = (survival[k - 1] - u) / drop if drop > 0 else 0.0
        fraction = min(max(fraction, 0.0), 1.0)
        time = self.times[k - 1] + fraction * (self.times[k] - self.times[k - 1])

        weights = np.clip((1 - fraction) * self.weights[k - 1] + fraction * self.weights[k], 0, None)
        total = weights.sum()
        if not total > 0:
            raise NumericalError("All transition rates vanish at the sampled time t = {0:g}".format(time))
        choice = min(int(np.searchsorted(np.cumsum(weights), v * total, side="right")), len(weights) - 1)
        target = self.targets[choice]

        state = (1 - fraction) * self.states[k - 1] + fraction * self.states[k]
        state = state / np.trace(state).real
        post_state = post_transition_state(self.reduced, state, self.source, target, self.tolerances)
        return ClickEvent(float(time), self.source, target, post_state)


    def sample(self, seed: int, index: int = 0, max_clicks: int = 1) -> Trajectory:
        ''' Sample one trajectory.

        Parameters
        ----------
        seed : int
            Master seed.
        index : int
            Trajectory index; the random stream depends only on (seed, index).
        max_clicks : int
            1 for first-click semantics. Larger values chain further
            transitions from each post-transition state.

        Returns
        -------
        Trajectory
        '''

        rng = trajectory_rng(seed, index)
        events = []
        sampler, offset = self, 0.0
        censored = True

        while len(events) < max_clicks:
            u, v = rng.random(2)
            event = sampler.draw(u, v)
            if event is None:
                censored = True
                break

            event = ClickEvent(offset + event.time, event.from_level, event.to_level, event.post_state)
            events.append(event)
            censored = False

            if len(events) < max_clicks:
                offset = event.time
                if self.t_max - offset <= 0:
                    censored = True
                    break
                sampler = FirstClickSampler(self.reduced, event.post_state, event.to_level, self.t_max - offset,
                                            self.config, self.tolerances, self.interpolation_tol)

        return Trajectory(int(seed), int(index), tuple(events), censored, self.t_max)


    def sample_range(self, seed: int, indices: Sequence[int], max_clicks: int = 1) -> List[Trajectory]:
        return [self.sample(seed, index, max_clicks) for index in indices]



def sample_first_click(reduced: ReducedModel,
                       rho0: np.ndarray,
                       source: int,
                       seed: int,
                       t_max: float,
                       config: IntegratorConfig = None,
                       index: int = 0,
                       tolerances: Tolerances = DEFAULT_TOLERANCES) -> Trajectory:
    '''Sample the first transition of a single trajectory.'''
    return FirstClickSampler(reduced, rho0, source, t_max, config, tolerances).sample(seed, index)


def sample_trajectories(reduced: ReducedModel,
                        rho0: np.ndarray,
                        source: int,
                        n_traj: int,
                        seed: int,
                        t_max: float,
                        config: IntegratorConfig = None,
                        n_jobs: int = 1,
                        progress: bool = False,
                        max_clicks: int = 1,
                        chunk_size: int = 1000,
                        tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[Trajectory]:
    ''' Sample an ensemble of trajectories.

    Trajectory i uses the random stream of (seed, i), so the result does
    not depend on `n_jobs` or `chunk_size`.

    Parameters
    ----------
    reduced : ReducedModel
    rho0 : ndarray
    source : int
    n_traj : int
    seed : int
    t_max : float
    config : IntegratorConfig, optional
    n_jobs : int
        Number of worker threads.
    progress : bool
        Show a progress bar.
    max_clicks : int
        Values above 1 chain transitions beyond the first click.
    chunk_size : int
        Trajectories per task.
    tolerances : Tolerances, optional

    Returns
    -------
    List[Trajectory]
        Ordered by index.
    '''

    if not n_traj >= 1:
        raise ConfigurationError("n_traj must be at least 1, got {0!r}".format(n_traj))
    if max_clicks > 1:
        logger.warning("Chaining %d transitions per trajectory extrapolates beyond first-click statistics", max_clicks)

    sampler = FirstClickSampler(reduced, rho0, source, t_max, config, tolerances)
    chunks = [range(start, min(start + chunk_size, n_traj)) for start in range(0, n_traj, chunk_size)]

    parallel = Parallel(n_jobs=n_jobs, prefer="threads")
    results = parallel(delayed(sampler.sample_range)(seed, chunk, max_clicks)
                       for chunk in tqdm(chunks, desc="trajectories", disable=not progress))
    return [trajectory for chunk in results for trajectory in chunk]


def empirical_survival(trajectories: Sequence[Trajectory], t_grid, confidence: float = 0.95) -> SurvivalCurve:
    ''' Empirical survival of the first transition.

    Censored trajectories count as surviving the whole grid. Confidence
    half-widths use the normal approximation of the binomial distribution.

    Parameters
    ----------
    trajectories : sequence of Trajectory
    t_grid : array_like
    confidence : float
        Two-sided confidence level of the half-widths.

    Returns
    -------
    SurvivalCurve
    '''

    t_grid = check_time_grid(t_grid)
    n = len(trajectories)
    times = np.sort([trajectory.t_click for trajectory in trajectories])
    surviving = n - np.searchsorted(times, t_grid, side="left")
    values = surviving / n
    z = norm.ppf(0.5 + confidence / 2)
    return SurvivalCurve(t_grid, values, z * np.sqrt(values * (1 - values) / n))


def estimate_survival_mc(reduced: ReducedModel,
                         rho0: np.ndarray,
                         source: int,
                         n_traj: int,
                         seed: int,
                         t_grid,
                         config: IntegratorConfig = None,
                         n_jobs: int = 1,
                         confidence: float = 0.95) -> SurvivalCurve:
    ''' Monte Carlo estimate of the survival curve.

    Samples `n_traj` first-click trajectories up to the end of `t_grid`.
    '''

    t_grid = check_time_grid(t_grid)
    if len(t_grid) < 2:
        raise ConfigurationError("Time grid needs at least two points")
    trajectories = sample_trajectories(reduced, rho0, source, n_traj, seed, t_grid[-1], config, n_jobs=n_jobs)
    return empirical_survival(trajectories, t_grid, confidence)
