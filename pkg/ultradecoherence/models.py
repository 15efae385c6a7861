''' Concrete measurement devices

Builders and closed-form results for three devices: an ideal von Neumann
measurement, a narrow-band single-photon detector on one resonant mode, and
a detector on one site of a two-site tight-binding system, which records
the arrival time of a particle.

Classes
-------
VonNeumannParams, PhotonDetectorParams, TwoSiteParams
    Validated parameters of the builders.
VonNeumann, PhotonDetector, TwoSite, RandomModel, CustomModel
    Devices whose properties resolve to a model and an initial state.

Functions
---------
build_von_neumann(params), build_photon_detector(params), build_two_site(params)
    Model builders.
analytic_survival_von_neumann(chi, t)
analytic_survival_two_site(hopping, chi, t)
analytic_arrival_density_two_site(hopping, chi, t)
analytic_survival_photon(chi, field_state, t)
von_neumann_populations(chi, weights, t)
photon_click_rate(params, field_state)
analytic_survival(spec, rho0, t)
    Closed-form survival for a resolved model, if one is known.
annihilation(n_max), basis_state(dim, k), pure_state(amplitudes),
fock_state(n, n_max), coherent_state(alpha, n_max), maximally_mixed(dim)
    Operators and states.
parse_state(description, dim)
    State from a short text description.
truncation_weight(description, n_max)
    Field weight a described state loses to the Fock truncation.
load_model(source)
    Model from a JSON description.
get_device(name, **properties)
    Device registered under a model name.
'''

import json
import logging

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from ultradecoherence.core import (ConfigurationError, CouplingSpec, DeviceSpec, ModelSpec, SystemSpec, as_operator,
                                   dagger, is_psd)
from ultradecoherence.devices import Device

logger = logging.getLogger(__name__)


# Below this value of |s| t^2 the two-site survival is evaluated by its series
SERIES_THRESHOLD = 1e-3

# Field weight above n_max beyond which a photon detector logs a warning
TRUNCATION_TOLERANCE = 1e-8



# OPERATORS AND STATES



def annihilation(n_max: int) -> np.ndarray:
    '''Annihilation operator on the Fock space truncated at `n_max` photons.'''
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def basis_state(dim: int, k: int) -> np.ndarray:
    if not 0 <= k < dim:
        raise ConfigurationError("Basis index {0} outside 0..{1}".format(k, dim - 1))
    state = np.zeros((dim, dim), dtype=complex)
    state[k, k] = 1
    return state


def pure_state(amplitudes) -> np.ndarray:
    ''' Projector onto a state vector, normalised.

    Parameters
    ----------
    amplitudes : array_like
        Complex amplitudes.

    Returns
    -------
    ndarray
    '''

    vector = np.asarray(amplitudes, dtype=complex).ravel()
    length = np.linalg.norm(vector)
    if not length > 0:
        raise ConfigurationError("State vector must be nonzero")
    vector = vector / length
    return np.outer(vector, vector.conj())


def fock_state(n: int, n_max: int) -> np.ndarray:
    return basis_state(n_max + 1, n)


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def coherent_truncation_weight(alpha: complex, n_max: int) -> float:
    '''Probability weight of a coherent state above `n_max` photons.'''
    return float(poisson.sf(n_max, abs(alpha) ** 2))


def coherent_state(alpha: complex, n_max: int) -> np.ndarray:
    ''' Coherent state truncated at `n_max` photons and renormalised.

    A warning is logged if |alpha|^2 > n_max / 4.

    Parameters
    ----------
    alpha : complex
        Amplitude.
    n_max : int
        Truncation.

    Returns
    -------
    ndarray
    '''

    alpha = complex(alpha)
    if abs(alpha) ** 2 > n_max / 4:
        logger.warning("Coherent state |alpha|^2 = %g exceeds n_max / 4 = %g; truncation weight %.3g",
                       abs(alpha) ** 2, n_max / 4, coherent_truncation_weight(alpha, n_max))

    n = np.arange(n_max + 1)
    if alpha == 0:
        return fock_state(0, n_max)
    amplitudes = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - gammaln(n + 1) / 2) \
        * np.exp(1j * n * np.angle(alpha))
    return pure_state(amplitudes)


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.strip().replace(" ", ""))
    except ValueError:
        raise ConfigurationError("Cannot read {0!r} as a number".format(text)) from None


def parse_state(description, dim: int) -> np.ndarray:
    ''' Build a state of Q from a short description.

    Accepted descriptions:

    * ``mixed``: maximally mixed state
    * ``basis:k`` or ``fock:n``: basis state
    * ``L`` and ``R``: the sites of a two-site system
    * ``amplitudes:a0,a1,...``: normalised pure state
    * ``coherent:alpha``: truncated coherent state
    * an array: a state vector or density operator

    Parameters
    ----------
    description : str or array_like
    dim : int
        Dimension of Q.

    Returns
    -------
    ndarray

    Raises
    ------
    ConfigurationError
    '''

    if not isinstance(description, str):
        array = np.asarray(description, dtype=complex)
        state = pure_state(array) if array.ndim == 1 else as_operator(array)
        if state.shape != (dim, dim):
            raise ConfigurationError("State has dimension {0}, expected {1}".format(state.shape[0], dim))
        if abs(np.trace(state) - 1) > 1e-9 or not is_psd(state):
            raise ConfigurationError("State must have unit trace and be positive semidefinite")
        return state

    kind, _, value = description.strip().partition(":")
    kind = kind.strip().lower()

    if kind == "mixed":
        return maximally_mixed(dim)
    if kind in ("l", "r"):
        if dim != 2:
            raise ConfigurationError("Site states need a two-site system, got dimension {0}".format(dim))
        return basis_state(2, 0 if kind == "l" else 1)
    if kind in ("basis", "fock"):
        try:
            return basis_state(dim, int(value))
        except ValueError:
            raise ConfigurationError("Cannot read {0!r} as a basis index".format(value)) from None
    if kind == "amplitudes":
        amplitudes = [_parse_complex(item) for item in value.replace(";", ",").split(",") if item.strip()]
        if len(amplitudes) != dim:
            raise ConfigurationError("{0} amplitudes given for dimension {1}".format(len(amplitudes), dim))
        return pure_state(amplitudes)
    if kind == "coherent":
        return coherent_state(_parse_complex(value), dim - 1)

    raise ConfigurationError("Unknown state description {0!r}".format(description))


def truncation_weight(description, n_max: int) -> float:
    ''' Probability weight of a described field state above `n_max` photons.

    Only coherent states extend beyond any truncation; every other
    description lives inside the truncated space and has weight 0.
    '''

    if isinstance(description, str):
        kind, _, value = description.strip().partition(":")
        if kind.strip().lower() == "coherent":
            return coherent_truncation_weight(_parse_complex(value), n_max)
    return 0.0



# VON NEUMANN MEASUREMENT



@dataclass(frozen=True, eq=False)
class VonNeumannParams:
    ''' Ideal measurement with one pointer level per outcome.

    Parameters
    ----------
    num_outcomes : int
        M, the number of outcomes; also the dimension of Q.
    coupling : float
        Coupling g, uniform for all pointer levels.
    dephasing_rate : float
        Uniform dephasing rate gamma.
    probe_basis : ndarray, optional
        Unitary whose columns are the measured states |s_mu>. The
        computational basis by default.
    '''

    num_outcomes: int = 2
    coupling: float = 1.0
    dephasing_rate: float = 100.0
    probe_basis: Optional[np.ndarray] = None

    def __post_init__(self):
        if not int(self.num_outcomes) >= 1:
            raise ConfigurationError("num_outcomes must be at least 1, got {0!r}".format(self.num_outcomes))
        if not self.dephasing_rate >= 0:
            raise ConfigurationError("dephasing_rate must be nonnegative, got {0!r}".format(self.dephasing_rate))

        basis = np.eye(self.num_outcomes, dtype=complex) if self.probe_basis is None \
            else np.asarray(self.probe_basis, dtype=complex)
        if basis.shape != (self.num_outcomes, self.num_outcomes):
            raise ConfigurationError("probe_basis must have shape ({0}, {0}), got {1}".format(
                self.num_outcomes, basis.shape))
        if np.max(np.abs(dagger(basis) @ basis - np.eye(self.num_outcomes))) > 1e-10:
            raise ConfigurationError("probe_basis is not orthonormal")
        object.__setattr__(self, "probe_basis", basis)

    @property
    def chi(self) -> float:
        return self.coupling ** 2 / self.dephasing_rate

    def projector(self, mu: int) -> np.ndarray:
        '''|s_mu><s_mu| for the pointer level mu = 1..M.'''
        vector = self.probe_basis[:, mu - 1]
        return np.outer(vector, vector.conj())


def build_von_neumann(params: VonNeumannParams) -> ModelSpec:
    ''' Ideal von Neumann measurement.

    The device has M+1 degenerate levels with uniform dephasing, Q has
    no free dynamics, and the ready level is coupled to pointer level mu
    by V_{mu 0} = g |s_mu><s_mu|.

    Parameters
    ----------
    params : VonNeumannParams

    Returns
    -------
    ModelSpec
    '''

    m = params.num_outcomes
    device = DeviceSpec(np.zeros(m + 1), np.full(m + 1, float(params.dephasing_rate)))
    system = SystemSpec(np.zeros((m, m)))
    coupling = CouplingSpec({(mu, 0): params.coupling * params.projector(mu) for mu in range(1, m + 1)})
    metadata = {"num_outcomes": m, "coupling": params.coupling, "dephasing_rate": params.dephasing_rate}
    if params.dephasing_rate > 0:
        metadata["chi"] = params.chi
    return ModelSpec(device, system, coupling, name="von-neumann", metadata=metadata)


def analytic_survival_von_neumann(chi: float, t) -> np.ndarray:
    '''Pr(T >= t) = exp(-2 chi t) of the ready level.'''
    return np.exp(-2 * chi * np.asarray(t, dtype=float))


def von_neumann_populations(chi: float, weights: Sequence[float], t) -> np.ndarray:
    ''' Device populations of the reduced von Neumann dynamics.

    Every pointer level mu decays back to the ready level with rate 2 chi, so

        p_0(t)  = (1 + exp(-4 chi t)) / 2
        p_mu(t) = |c_mu|^2 (1 - exp(-4 chi t)) / 2

    Parameters
    ----------
    chi : float
    weights : sequence of float
        Born weights |c_mu|^2 of the initial state.
    t : array_like

    Returns
    -------
    ndarray
        Shape (len(t), M+1).
    '''

    t = np.atleast_1d(np.asarray(t, dtype=float))
    decay = np.exp(-4 * chi * t)
    weights = np.asarray(weights, dtype=float)
    populations = np.empty((len(t), len(weights) + 1))
    populations[:, 0] = (1 + decay) / 2
    populations[:, 1:] = weights[None, :] * ((1 - decay) / 2)[:, None]
    return populations



# PHOTON DETECTOR



@dataclass(frozen=True, eq=False)
class PhotonDetectorParams:
    ''' Single-photon detector coupled to one resonant field mode.

    Parameters
    ----------
    coupling : float
        Mode coupling g; the positive-frequency field is E+ = g a.
    dephasing_rate : float
        Dephasing rate gamma of both detector levels.
    transition_energy : float
        Detector transition energy, equal to the mode frequency.
    n_max : int
        Fock truncation.
    field_state : ndarray, optional
        Density operator of the mode; vacuum by default.
    truncation_weight : float
        Probability weight of the untruncated field state above `n_max`
        photons, lost by the truncation. A warning is logged by
        `build_photon_detector` if it exceeds `TRUNCATION_TOLERANCE`.
    '''

    coupling: float = 0.1
    dephasing_rate: float = 10.0
    transition_energy: float = 1.0
    n_max: int = 20
    field_state: Optional[np.ndarray] = None
    truncation_weight: float = 0.0

    def __post_init__(self):
        if not int(self.n_max) >= 1:
            raise ConfigurationError("n_max must be at least 1, got {0!r}".format(self.n_max))
        if not self.dephasing_rate > 0:
            raise ConfigurationError("dephasing_rate must be positive, got {0!r}".format(self.dephasing_rate))
        if not 0 <= self.truncation_weight < 1:
            raise ConfigurationError("truncation_weight must lie in [0, 1), got {0!r}".format(self.truncation_weight))

        state = fock_state(0, self.n_max) if self.field_state is None else as_operator(self.field_state)
        if state.shape != (self.n_max + 1, self.n_max + 1):
            raise ConfigurationError("field_state has dimension {0}, expected {1}".format(
                state.shape[0], self.n_max + 1))
        if abs(np.trace(state) - 1) > 1e-9 or not is_psd(state):
            raise ConfigurationError("field_state must have unit trace and be positive semidefinite")
        object.__setattr__(self, "field_state", state)

    @property
    def chi(self) -> float:
        return self.coupling ** 2 / self.dephasing_rate

    @property
    def top_level_population(self) -> float:
        '''Population of the highest Fock level kept.'''
        return float(self.field_state[-1, -1].real)


def build_photon_detector(params: PhotonDetectorParams) -> ModelSpec:
    ''' Two-level detector resonant with a truncated field mode.

    H_Q = Omega a^dagger a and V_{10} = g a. The mode frequency equals the
    detector transition energy, so the exact and resonant K coincide,
    K_{10} = g a / gamma.

    Parameters
    ----------
    params : PhotonDetectorParams

    Returns
    -------
    ModelSpec
    '''

    n_max = params.n_max
    if params.truncation_weight > TRUNCATION_TOLERANCE:
        logger.warning("Field state has weight %.3g above n_max = %d photons; raise n_max", params.truncation_weight,
                       n_max)

    device = DeviceSpec([0.0, params.transition_energy], [params.dephasing_rate, params.dephasing_rate])
    system = SystemSpec(params.transition_energy * np.diag(np.arange(n_max + 1, dtype=float)))
    coupling = CouplingSpec({(1, 0): params.coupling * annihilation(n_max)})
    metadata = {"coupling": params.coupling, "dephasing_rate": params.dephasing_rate,
                "transition_energy": params.transition_energy, "n_max": n_max, "chi": params.chi,
                "truncation_weight": params.truncation_weight, "top_level_population": params.top_level_population}
    return ModelSpec(device, system, coupling, name="photon-detector", metadata=metadata)


def photon_click_rate(params: PhotonDetectorParams, field_state: np.ndarray = None) -> float:
    ''' Click rate (2 / gamma) tr(rho E- E+) = (2 g^2 / gamma) <a^dagger a>.

    Parameters
    ----------
    params : PhotonDetectorParams
    field_state : ndarray, optional
        State of the mode; `params.field_state` by default.

    Returns
    -------
    float
    '''

    state = params.field_state if field_state is None else as_operator(field_state)
    number = np.arange(params.n_max + 1)
    return float(2 * params.chi * np.sum(number * np.diag(state).real))


def analytic_survival_photon(chi: float, field_state: np.ndarray, t) -> np.ndarray:
    ''' Survival of the ready level, sum_n p_n exp(-2 chi n t).

    Gamma_0 = chi a^dagger a commutes with the mode Hamiltonian, so only
    the Fock populations of the field matter.
    '''

    t = np.asarray(t, dtype=float)
    populations = np.diag(as_operator(field_state)).real
    number = np.arange(len(populations))
    return np.sum(populations[:, None] * np.exp(-2 * chi * np.outer(number, np.ravel(t))), axis=0).reshape(t.shape)



# TWO-SITE ARRIVAL



@dataclass(frozen=True, eq=False)
class TwoSiteParams:
    ''' Particle hopping between sites L and R, detector on R.

    Parameters
    ----------
    hopping : float
        Hopping energy Delta; H_Q = -Delta sigma_x.
    coupling : float
        Detector coupling g.
    dephasing_rate : float
        Dephasing rate gamma of both detector levels.
    '''

    hopping: float = 1.0
    coupling: float = 10.0
    dephasing_rate: float = 100.0

    def __post_init__(self):
        if not self.hopping > 0:
            raise ConfigurationError("hopping must be positive, got {0!r}".format(self.hopping))
        if not self.dephasing_rate > 0:
            raise ConfigurationError("dephasing_rate must be positive, got {0!r}".format(self.dephasing_rate))

    @classmethod
    def from_chi(cls, hopping: float, chi: float, dephasing_rate: float = 100.0) -> "TwoSiteParams":
        '''Parameters with coupling sqrt(chi * gamma).'''
        if not chi >= 0:
            raise ConfigurationError("chi must be nonnegative, got {0!r}".format(chi))
        return cls(hopping, float(np.sqrt(chi * dephasing_rate)), dephasing_rate)

    @property
    def chi(self) -> float:
        return self.coupling ** 2 / self.dephasing_rate


def build_two_site(params: TwoSiteParams) -> ModelSpec:
    ''' Two-site arrival detector.

    Q has the basis {|L>, |R>} and H_Q = -Delta sigma_x. The detector
    levels are degenerate and V_{10} = g |R><R|.

    Parameters
    ----------
    params : TwoSiteParams

    Returns
    -------
    ModelSpec
    '''

    device = DeviceSpec([0.0, 0.0], [params.dephasing_rate, params.dephasing_rate])
    system = SystemSpec(-params.hopping * np.array([[0, 1], [1, 0]], dtype=complex))
    coupling = CouplingSpec({(1, 0): params.coupling * basis_state(2, 1)})
    metadata = {"hopping": params.hopping, "coupling": params.coupling,
                "dephasing_rate": params.dephasing_rate, "chi": params.chi}
    return ModelSpec(device, system, coupling, name="two-site", metadata=metadata)


def _two_site_terms(hopping: float, chi: float, t: np.ndarray):
    # exp(-chi t) times c = (1 - cos(w t)) / w^2 and d = sin(w t) / w, w^2 = 4 Delta^2 - chi^2,
    # continued to imaginary w in the overdamped regime
    s = 4 * hopping ** 2 - chi ** 2
    damping = np.exp(-chi * t)
    c = np.empty_like(t)
    d = np.empty_like(t)

    series = np.abs(s) * t ** 2 < SERIES_THRESHOLD
    under = ~series & (s > 0)
    over = ~series & (s < 0)

    ts = t[series]
    c[series] = damping[series] * (ts ** 2 / 2 - s * ts ** 4 / 24 + s ** 2 * ts ** 6 / 720)
    d[series] = damping[series] * (ts - s * ts ** 3 / 6 + s ** 2 * ts ** 5 / 120)

    if np.any(under):
        omega = np.sqrt(s)
        tu = t[under]
        c[under] = damping[under] * (1 - np.cos(omega * tu)) / s
        d[under] = damping[under] * np.sin(omega * tu) / omega

    if np.any(over):
        kappa = np.sqrt(-s)
        to = t[over]
        grow = np.exp((kappa - chi) * to)
        shrink = np.exp((-kappa - chi) * to)
        c[over] = ((grow + shrink) / 2 - damping[over]) / kappa ** 2
        d[over] = (grow - shrink) / (2 * kappa)

    return damping, c, d


def _check_two_site(hopping, chi, t):
    if not hopping > 0:
        raise ConfigurationError("hopping must be positive, got {0!r}".format(hopping))
    if not chi >= 0:
        raise ConfigurationError("chi must be nonnegative, got {0!r}".format(chi))
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ConfigurationError("Times must be nonnegative")
    return t


def analytic_survival_two_site(hopping: float, chi: float, t) -> np.ndarray:
    ''' Arrival-time tail Pr(T >= t) of a particle starting on site L.

    Evaluates exp(-chi t) (4 Delta^2 - chi^2 cos(w t) + chi w sin(w t)) / w^2,
    w = sqrt(4 Delta^2 - chi^2), in the equivalent form

        exp(-chi t) (1 + chi^2 (1 - cos(w t)) / w^2 + chi sin(w t) / w),

    which stays finite at critical damping chi = 2 Delta and is continued
    with hyperbolic functions for chi > 2 Delta.

    Parameters
    ----------
    hopping : float
        Delta > 0.
    chi : float
        chi >= 0.
    t : float or array_like
        Nonnegative times.

    Returns
    -------
    float or ndarray
    '''

    t = _check_two_site(hopping, chi, t)
    flat = np.atleast_1d(t).ravel()
    damping, c, d = _two_site_terms(hopping, chi, flat)
    values = (damping + chi ** 2 * c + chi * d).reshape(t.shape)
    return float(values) if values.ndim == 0 else values


def analytic_arrival_density_two_site(hopping: float, chi: float, t) -> np.ndarray:
    ''' Arrival-time density -d/dt Pr(T >= t) = 4 Delta^2 chi exp(-chi t) (1 - cos(w t)) / w^2.

    Same parameters as `analytic_survival_two_site`.
    '''

    t = _check_two_site(hopping, chi, t)
    flat = np.atleast_1d(t).ravel()
    _, c, _ = _two_site_terms(hopping, chi, flat)
    values = (4 * hopping ** 2 * chi * c).reshape(t.shape)
    return float(values) if values.ndim == 0 else values



# DISPATCH



def analytic_survival(spec: ModelSpec, rho0: np.ndarray, t) -> Optional[np.ndarray]:
    ''' Closed-form survival of the ready level, if known.

    Parameters
    ----------
    spec : ModelSpec
        A model built by one of the builders of this module.
    rho0 : ndarray
        Initial state of Q.
    t : array_like

    Returns
    -------
    ndarray or None
        None if no closed form applies to the model and state.
    '''

    chi = spec.metadata.get("chi")
    if chi is None:
        return None

    if spec.name == "von-neumann":
        return analytic_survival_von_neumann(chi, t)
    if spec.name == "photon-detector":
        return analytic_survival_photon(chi, rho0, t)
    if spec.name == "two-site":
        if np.max(np.abs(as_operator(rho0) - basis_state(2, 0))) > 1e-12:
            return None
        return analytic_survival_two_site(spec.metadata["hopping"], chi, t)
    return None



# DEVICES



class VonNeumann(Device):
    ''' Ideal von Neumann measurement device.

    Parameters
    ----------
    num_outcomes : int
        Number of outcomes M.
    coupling : float
        Coupling g.
    dephasing_rate : float
        Uniform dephasing rate gamma.
    probe_basis : ndarray, optional
        Columns are the measured states.
    state : str or ndarray
        Initial state of Q, see `parse_state`.
    '''

    __model_name__ = "von-neumann"

    def __init__(self, num_outcomes=2, coupling=1.0, dephasing_rate=100.0, probe_basis=None, state="mixed", **kwargs):
        super().__init__(num_outcomes=num_outcomes, coupling=coupling, dephasing_rate=dephasing_rate,
                         probe_basis=probe_basis, state=state, **kwargs)

    def get(self, num_outcomes, coupling, dephasing_rate, probe_basis=None, **kwargs):
        return build_von_neumann(VonNeumannParams(int(num_outcomes), coupling, dephasing_rate, probe_basis))

    def get_state(self, state, num_outcomes, **kwargs):
        return parse_state(state, int(num_outcomes))


class PhotonDetector(Device):
    ''' Narrow-band single-photon detector.

    Parameters
    ----------
    coupling : float
    dephasing_rate : float
    transition_energy : float
    n_max : int
        Fock truncation.
    state : str or ndarray
        Field state, e.g. ``fock:2`` or ``coherent:1.0``.
    '''

    __model_name__ = "photon-detector"

    def __init__(self, coupling=0.1, dephasing_rate=10.0, transition_energy=1.0, n_max=20, state="fock:1",
                 **kwargs):
        super().__init__(coupling=coupling, dephasing_rate=dephasing_rate, transition_energy=transition_energy,
                         n_max=n_max, state=state, **kwargs)

    def get(self, coupling, dephasing_rate, transition_energy, n_max, state, **kwargs):
        n_max = int(n_max)
        field_state = parse_state(state, n_max + 1)
        return build_photon_detector(PhotonDetectorParams(coupling, dephasing_rate, transition_energy, n_max,
                                                          field_state, truncation_weight(state, n_max)))

    def get_state(self, state, n_max, **kwargs):
        return parse_state(state, int(n_max) + 1)


class TwoSite(Device):
    ''' Arrival-time detector on site R of a two-site system.

    Parameters
    ----------
    hopping : float
        Delta.
    coupling : float
        g; ignored if `chi` is given.
    dephasing_rate : float
        gamma.
    chi : float, optional
        g^2 / gamma; sets the coupling to sqrt(chi * gamma).
    state : str or ndarray
        Initial state, site L by default.
    '''

    __model_name__ = "two-site"

    def __init__(self, hopping=1.0, coupling=10.0, dephasing_rate=100.0, chi=None, state="L", **kwargs):
        super().__init__(hopping=hopping, coupling=coupling, dephasing_rate=dephasing_rate, chi=chi, state=state,
                         **kwargs)

    def _process_properties(self, propertydict):
        chi = propertydict.get("chi")
        if chi is not None:
            if not chi >= 0:
                raise ConfigurationError("chi must be nonnegative, got {0!r}".format(chi))
            propertydict["coupling"] = float(np.sqrt(chi * propertydict["dephasing_rate"]))
        return propertydict

    def get(self, hopping, coupling, dephasing_rate, **kwargs):
        return build_two_site(TwoSiteParams(hopping, coupling, dephasing_rate))

    def get_state(self, state, **kwargs):
        return parse_state(state, 2)


class RandomModel(Device):
    ''' Random model for invariant testing.

    All pairs of levels are coupled by random blocks, H_Q is a random
    hermitian matrix and the initial state a random density operator. The
    draw depends only on `seed`.

    Parameters
    ----------
    seed : int
    num_outcomes : int
    dim : int
        Dimension of Q.
    coupling : float
        Scale of the coupling blocks.
    dephasing_rate : float or tuple of float
        A uniform rate, or the range of uniformly drawn rates.
    hamiltonian_scale : float
        Scale of H_Q.
    energy_scale : float
        Range of the device level energies.
    state : str or ndarray
        ``random`` or any description accepted by `parse_state`.
    '''

    __model_name__ = "random"

    def __init__(self, seed=0, num_outcomes=2, dim=2, coupling=0.5, dephasing_rate=(10.0, 50.0),
                 hamiltonian_scale=1.0, energy_scale=1.0, state="random", **kwargs):
        super().__init__(seed=seed, num_outcomes=num_outcomes, dim=dim, coupling=coupling,
                         dephasing_rate=dephasing_rate, hamiltonian_scale=hamiltonian_scale,
                         energy_scale=energy_scale, state=state, **kwargs)

    def get(self, seed, num_outcomes, dim, coupling, dephasing_rate, hamiltonian_scale, energy_scale, **kwargs):
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(0,)))
        levels, dim = int(num_outcomes) + 1, int(dim)

        energies = rng.uniform(-energy_scale, energy_scale, levels)
        energies[0] = 0.0
        rates = np.ravel(dephasing_rate)
        rates = rng.uniform(rates[0], rates[-1], levels) if len(rates) > 1 else np.full(levels, float(rates[0]))

        matrix = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        hamiltonian = hamiltonian_scale * (matrix + dagger(matrix)) / (2 * np.sqrt(dim))

        blocks = {}
        for mu in range(levels):
            for nu in range(mu):
                block = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
                blocks[(mu, nu)] = coupling * block / np.sqrt(2 * dim)

        return ModelSpec(DeviceSpec(energies, rates), SystemSpec(hamiltonian), CouplingSpec(blocks))

    def get_state(self, seed, dim, state, **kwargs):
        dim = int(dim)
        if isinstance(state, str) and state.strip().lower() == "random":
            rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(1,)))
            matrix = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            state = matrix @ dagger(matrix)
            return state / np.trace(state).real
        return parse_state(state, dim)



class CustomModel(Device):
    ''' Model read from a description written by `ModelSpec.to_dict`.

    Every run of the command line writes such a description of its model
    to model.json, which can be loaded back with this device.

    Parameters
    ----------
    spec : str, Path, dict or ModelSpec
        Path of a JSON file, or the description itself.
    state : str or ndarray
        Any description accepted by `parse_state`.
    '''

    __model_name__ = "custom"

    def __init__(self, spec=None, state="mixed", **kwargs):
        super().__init__(spec=spec, state=state, **kwargs)

    def get(self, spec, **kwargs):
        return load_model(spec)

    def get_state(self, spec, state, **kwargs):
        return parse_state(state, load_model(spec).dim)


def load_model(source) -> ModelSpec:
    ''' Read a model description.

    Parameters
    ----------
    source : str, Path, dict or ModelSpec
        Path of a JSON file written from `ModelSpec.to_dict`, or the
        description itself.

    Returns
    -------
    ModelSpec

    Raises
    ------
    ConfigurationError
        If the file cannot be read or the description is malformed.
    '''

    if isinstance(source, ModelSpec):
        return source
    if source is None:
        raise ConfigurationError("model.spec: the custom model needs the path of a model description")
    if isinstance(source, (str, Path)):
        try:
            with open(source) as handle:
                source = json.load(handle)
        except (OSError, ValueError) as error:
            raise ConfigurationError("model.spec: cannot read {0}: {1}".format(source, error)) from error
    if not isinstance(source, Mapping):
        raise ConfigurationError("model.spec: expected a JSON object, got {0}".format(type(source).__name__))
    return ModelSpec.from_dict(source)



DEVICES = {
    "von-neumann": VonNeumann,
    "photon-detector": PhotonDetector,
    "two-site": TwoSite,
    "random": RandomModel,
    "custom": CustomModel,
}


def get_device(name: str, **properties) -> Device:
    ''' Device registered under a model name.

    Parameters
    ----------
    name : str
        One of the keys of `DEVICES`.
    **properties
        Passed to the device constructor.

    Returns
    -------
    Device

    Raises
    ------
    ConfigurationError
        If the name is unknown.
    '''

    try:
        device_class = DEVICES[name]
    except KeyError:
        raise ConfigurationError("model.name must be one of {0}, got {1!r}".format(sorted(DEVICES), name)) from None
    return device_class(**properties)
