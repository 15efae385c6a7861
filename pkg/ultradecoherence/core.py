''' Domain types shared by all solvers

Operators are dense complex numpy arrays acting on the measured system Q.
The device D has levels 0..M, level 0 being the ready state, and the joint
state is stored as an (M+1)x(M+1) grid of Q-operators.

Classes
-------
Tolerances
    Numerical tolerances used by the checks of every layer.
DeviceSpec
    Level energies and dephasing rates of the device.
SystemSpec
    Free Hamiltonian of the measured system.
CouplingSpec
    Sparse coupling blocks V_{mu nu}, stored on one triangle.
ModelSpec
    Complete description of a device coupled to a measured system.
BlockDensityMatrix
    Joint state as a grid of blocks rho_{mu nu}.

Functions
---------
as_operator(entries, dim=None)
    Convert to a square complex array.
dagger(operator)
    Adjoint of an operator.
is_hermitian(operator, tol), is_psd(operator, tol)
    Predicates on operators.
validate(spec)
    List every invariant violation of a ModelSpec.
check_state(rho)
    List every invariant violation of a BlockDensityMatrix.
assemble_full(rho), disassemble(full, num_levels)
    Convert between the block grid and the joint matrix.
'''

import logging

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Tuple

import numpy as np

logger = logging.getLogger(__name__)



class UltradecoherenceError(Exception):
    '''Base class of all errors raised by the package.'''


class ConfigurationError(UltradecoherenceError, ValueError):
    '''An input, parameter or configuration value is invalid.'''


class DecoherenceRateError(ConfigurationError):
    '''A reduction needs gamma_{mu nu} > 0 but the device has a zero rate.'''


class ForbiddenTransitionError(UltradecoherenceError, ValueError):
    '''The requested transition has zero rate, so no post-transition state exists.'''


class NumericalError(UltradecoherenceError, ArithmeticError):
    '''A numerical procedure failed or lost a physical invariant.'''


class IntegrationError(NumericalError):
    '''The integrator could not advance, typically because of stiffness.'''


class InvariantViolation(NumericalError):
    '''Trace, hermiticity or positivity was lost beyond tolerance.'''


class PositivityError(InvariantViolation):
    '''Reduced dynamics produced a block with a negative eigenvalue.'''



@dataclass(frozen=True)
class Tolerances:
    ''' Numerical tolerances.

    Parameters
    ----------
    trace : float
        Allowed drift of the total trace.
    hermitian : float
        Allowed entrywise deviation from hermiticity.
    psd : float
        Allowed negative eigenvalue.
    degenerate : float
        Smallest denominator accepted when renormalising a post-transition state.
    '''

    trace: float = 1e-9
    hermitian: float = 1e-10
    psd: float = 1e-8
    degenerate: float = 1e-12

    def __post_init__(self):
        for name in ("trace", "hermitian", "psd", "degenerate"):
            if not getattr(self, name) > 0:
                raise ConfigurationError("tolerances.{0} must be positive".format(name))


DEFAULT_TOLERANCES = Tolerances()



# OPERATORS



def as_operator(entries, dim: int = None) -> np.ndarray:
    ''' Convert the input to a square complex matrix.

    Parameters
    ----------
    entries : array_like
        Matrix entries. Nested lists of ``[re, im]`` pairs are accepted,
        as produced by `ModelSpec.to_dict`.
    dim : int, optional
        Expected dimension.

    Returns
    -------
    ndarray
        Complex array of shape (dim, dim).

    Raises
    ------
    ConfigurationError
        If the entries do not form a square matrix of the expected dimension.
    '''

    array = np.asarray(entries)
    if array.ndim == 3 and array.shape[-1] == 2 and not np.iscomplexobj(array):
        array = array[..., 0] + 1j * array[..., 1]
    array = np.array(array, dtype=complex)

    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise ConfigurationError("Operator must be a square matrix, got shape {0}".format(array.shape))
    if dim is not None and array.shape[0] != dim:
        raise ConfigurationError("Operator has dimension {0}, expected {1}".format(array.shape[0], dim))
    return array


def dagger(operator: np.ndarray) -> np.ndarray:
    '''Adjoint (conjugate transpose) of the last two axes.'''
    return np.conj(np.swapaxes(operator, -1, -2))


def is_hermitian(operator: np.ndarray, tol: float = DEFAULT_TOLERANCES.hermitian) -> bool:
    ''' Check hermiticity entrywise.

    Parameters
    ----------
    operator : ndarray
        Square matrix.
    tol : float
        Largest accepted entry of ``operator - dagger(operator)``.

    Returns
    -------
    bool
    '''

    operator = np.asarray(operator)
    if operator.size == 0:
        return True
    return float(np.max(np.abs(operator - dagger(operator)))) <= tol


def min_eigenvalue(operator: np.ndarray) -> float:
    '''Smallest eigenvalue of the hermitian part of `operator`.'''
    operator = np.asarray(operator)
    hermitian_part = (operator + dagger(operator)) / 2
    return float(np.linalg.eigvalsh(hermitian_part)[0])


def is_psd(operator: np.ndarray, tol: float = DEFAULT_TOLERANCES.psd) -> bool:
    ''' Check positive semidefiniteness.

    The operator is first checked for hermiticity with a tolerance
    of `tol`, then its smallest eigenvalue is compared to ``-tol``.

    Parameters
    ----------
    operator : ndarray
        Square matrix.
    tol : float
        Largest accepted negative eigenvalue.

    Returns
    -------
    bool
    '''

    return is_hermitian(operator, tol) and min_eigenvalue(operator) >= -tol


def _complex_to_pairs(operator: np.ndarray) -> list:
    # complex numbers serialize as [re, im] pairs
    return np.stack([operator.real, operator.imag], axis=-1).tolist()



# MODEL SPECIFICATION



def _frozen_array(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DeviceSpec:
    ''' Levels of the measurement device.

    Parameters
    ----------
    energies : array_like of float
        Level energies Omega_mu, one per level 0..M.
    dephasing_rates : array_like of float
        Dephasing rates gamma_mu in the preferred basis, one per level.

    Attributes
    ----------
    num_outcomes : int
        M, the number of pointer levels.
    num_levels : int
        M + 1.
    '''

    energies: np.ndarray
    dephasing_rates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "energies", _frozen_array(np.ravel(self.energies)))
        object.__setattr__(self, "dephasing_rates", _frozen_array(np.ravel(self.dephasing_rates)))

    @property
    def num_levels(self) -> int:
        return len(self.energies)

    @property
    def num_outcomes(self) -> int:
        return self.num_levels - 1

    def gamma(self, mu: int, nu: int) -> float:
        '''Pairwise rate gamma_{mu nu} = (gamma_mu + gamma_nu) / 2, zero on the diagonal.'''
        if mu == nu:
            return 0.0
        return 0.5 * float(self.dephasing_rates[mu] + self.dephasing_rates[nu])

    def omega(self, mu: int, nu: int) -> float:
        '''Energy difference Omega_{mu nu} = Omega_mu - Omega_nu.'''
        return float(self.energies[mu] - self.energies[nu])

    def gamma_matrix(self) -> np.ndarray:
        rates = self.dephasing_rates
        matrix = 0.5 * (rates[:, None] + rates[None, :])
        np.fill_diagonal(matrix, 0.0)
        return matrix

    def omega_matrix(self) -> np.ndarray:
        return self.energies[:, None] - self.energies[None, :]



@dataclass(frozen=True, eq=False)
class SystemSpec:
    ''' The measured system Q.

    Parameters
    ----------
    hamiltonian : array_like
        Free Hamiltonian H_Q, a square matrix.
    '''

    hamiltonian: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "hamiltonian", _frozen_array(as_operator(self.hamiltonian), complex))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def eigensystem(self) -> Tuple[np.ndarray, np.ndarray]:
        ''' Eigendecomposition of the hermitian part of H_Q.

        Returns
        -------
        energies : ndarray
            Ascending eigenvalues E_a.
        basis : ndarray
            Unitary whose columns are the eigenvectors.
        '''

        hamiltonian = (self.hamiltonian + dagger(self.hamiltonian)) / 2
        return np.linalg.eigh(hamiltonian)

    @property
    def is_free(self) -> bool:
        '''True if H_Q vanishes, so that both pictures coincide.'''
        return not np.any(self.hamiltonian)



@dataclass(frozen=True, eq=False)
class CouplingSpec:
    ''' Coupling blocks V_{mu nu} between device transitions and Q.

    Only one triangle needs to be stored: a missing block (mu, nu) is
    derived as the adjoint of the stored block (nu, mu). Blocks that are
    missing in both directions are zero.

    Parameters
    ----------
    blocks : dict
        Mapping ``(mu, nu) -> operator``.
    '''

    blocks: Mapping[Tuple[int, int], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        blocks = {}
        for (mu, nu), operator in dict(self.blocks).items():
            blocks[(int(mu), int(nu))] = _frozen_array(as_operator(operator), complex)
        object.__setattr__(self, "blocks", blocks)

    def block(self, mu: int, nu: int, dim: int) -> np.ndarray:
        ''' The block V_{mu nu}.

        Parameters
        ----------
        mu, nu : int
            Device levels.
        dim : int
            Dimension of Q, used for absent blocks.

        Returns
        -------
        ndarray
        '''

        if (mu, nu) in self.blocks:
            return np.array(self.blocks[(mu, nu)])
        if (nu, mu) in self.blocks:
            return dagger(self.blocks[(nu, mu)])
        return np.zeros((dim, dim), dtype=complex)

    def pairs(self) -> List[Tuple[int, int]]:
        '''All ordered pairs (mu, nu), mu != nu, with a nonzero block in either direction.'''
        pairs = set()
        for (mu, nu), operator in self.blocks.items():
            if mu != nu and np.any(operator):
                pairs.add((mu, nu))
                pairs.add((nu, mu))
        return sorted(pairs)



@dataclass(frozen=True, eq=False)
class ModelSpec:
    ''' A device coupled to a measured system.

    Parameters
    ----------
    device : DeviceSpec
    system : SystemSpec
    coupling : CouplingSpec
    name : str, optional
        Name of the model, e.g. "von-neumann".
    metadata : dict, optional
        Builder parameters and other descriptive values.
    '''

    device: DeviceSpec
    system: SystemSpec
    coupling: CouplingSpec
    name: str = "custom"
    metadata: Mapping[str, any] = field(default_factory=dict)

    @property
    def num_levels(self) -> int:
        return self.device.num_levels

    @property
    def dim(self) -> int:
        return self.system.dim

    def coupling_block(self, mu: int, nu: int) -> np.ndarray:
        return self.coupling.block(mu, nu, self.dim)

    def coupling_grid(self) -> np.ndarray:
        '''All blocks V_{mu nu} as an array of shape (M+1, M+1, d, d).'''
        n, d = self.num_levels, self.dim
        grid = np.zeros((n, n, d, d), dtype=complex)
        for mu, nu in self.coupling.pairs():
            grid[mu, nu] = self.coupling_block(mu, nu)
        return grid

    def to_dict(self) -> dict:
        ''' Serialize to plain Python containers.

        Complex numbers are written as ``[re, im]`` pairs and coupling
        blocks as a list of ``{"mu", "nu", "operator"}`` records.
        Only scalar metadata entries are kept.
        '''

        return {
            "name": self.name,
            "device": {
                "energies": self.device.energies.tolist(),
                "dephasing_rates": self.device.dephasing_rates.tolist(),
            },
            "system": {"hamiltonian": _complex_to_pairs(self.system.hamiltonian)},
            "coupling": [
                {"mu": mu, "nu": nu, "operator": _complex_to_pairs(operator)}
                for (mu, nu), operator in sorted(self.coupling.blocks.items())
            ],
            "metadata": {key: value for key, value in self.metadata.items()
                         if isinstance(value, (bool, int, float, str))},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ModelSpec":
        '''Inverse of `to_dict`.'''
        try:
            device = DeviceSpec(data["device"]["energies"], data["device"]["dephasing_rates"])
            system = SystemSpec(data["system"]["hamiltonian"])
            coupling = CouplingSpec({
                (entry["mu"], entry["nu"]): entry["operator"] for entry in data.get("coupling", [])
            })
        except (KeyError, TypeError) as error:
            raise ConfigurationError("Malformed model description: {0}".format(error)) from error
        return cls(device, system, coupling, name=data.get("name", "custom"), metadata=dict(data.get("metadata", {})))



def validate(spec: ModelSpec, tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[str]:
    ''' List every invariant violation of a model specification.

    Validation never raises; an empty list means the model is valid.

    Parameters
    ----------
    spec : ModelSpec
        The model to check.
    tolerances : Tolerances, optional
        Hermiticity tolerance used for H_Q and the coupling blocks.

    Returns
    -------
    List[str]
        Human-readable violations, each naming its location.
    '''

    violations = []
    device = spec.device

    if device.num_levels < 2:
        violations.append("device: need at least 2 levels (ready + 1 pointer), got {0}".format(device.num_levels))
    if len(device.dephasing_rates) != len(device.energies):
        violations.append("device: {0} energies but {1} dephasing rates".format(
            len(device.energies), len(device.dephasing_rates)))
    if np.any(~np.isfinite(device.energies)):
        violations.append("device.energies: non-finite value")
    if np.any(~(device.dephasing_rates >= 0)):
        violations.append("device.dephasing_rates: negative or non-finite value")

    hamiltonian = spec.system.hamiltonian
    if not is_hermitian(hamiltonian, tolerances.hermitian):
        violations.append("system.H_Q: not hermitian (max deviation {0:.3g})".format(
            float(np.max(np.abs(hamiltonian - dagger(hamiltonian))))))

    dim = spec.dim
    for (mu, nu), operator in sorted(spec.coupling.blocks.items()):
        location = "coupling block ({0},{1})".format(mu, nu)
        if not (0 <= mu < device.num_levels and 0 <= nu < device.num_levels):
            violations.append("{0}: level index outside 0..{1}".format(location, device.num_outcomes))
            continue
        if operator.shape != (dim, dim):
            violations.append("{0}: shape {1}, expected ({2}, {2})".format(location, operator.shape, dim))
            continue
        if mu == nu and np.any(np.abs(operator) > tolerances.hermitian):
            violations.append("{0}: diagonal block must vanish".format(location))
        if mu < nu and (nu, mu) in spec.coupling.blocks:
            partner = spec.coupling.blocks[(nu, mu)]
            if partner.shape == operator.shape and np.max(np.abs(operator - dagger(partner))) > tolerances.hermitian:
                violations.append("{0}: not the adjoint of block ({1},{2})".format(location, nu, mu))

    return violations



# STATES



@dataclass(frozen=True, eq=False)
class BlockDensityMatrix:
    ''' Joint density operator in block form.

    Parameters
    ----------
    blocks : array_like
        Array of shape (M+1, M+1, d, d); ``blocks[mu, nu]`` is rho_{mu nu}.
    '''

    blocks: np.ndarray

    def __post_init__(self):
        blocks = np.array(self.blocks, dtype=complex)
        if blocks.ndim != 4 or blocks.shape[0] != blocks.shape[1] or blocks.shape[2] != blocks.shape[3]:
            raise ConfigurationError("Blocks must have shape (M+1, M+1, d, d), got {0}".format(blocks.shape))
        blocks.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)

    @property
    def num_levels(self) -> int:
        return self.blocks.shape[0]

    @property
    def dim(self) -> int:
        return self.blocks.shape[2]

    def block(self, mu: int, nu: int) -> np.ndarray:
        return np.array(self.blocks[mu, nu])

    def diagonal(self) -> Dict[int, np.ndarray]:
        '''Diagonal blocks as a mapping mu -> rho_{mu mu}.'''
        return {mu: self.block(mu, mu) for mu in range(self.num_levels)}

    def trace(self) -> complex:
        return complex(np.einsum("mmaa->", self.blocks))

    @classmethod
    def product(cls, system_state, num_levels: int, level: int = 0) -> "BlockDensityMatrix":
        ''' Product state with the device in a definite level.

        Parameters
        ----------
        system_state : array_like
            Density operator of Q.
        num_levels : int
            M + 1.
        level : int
            Device level, the ready state by default.
        '''

        system_state = as_operator(system_state)
        blocks = np.zeros((num_levels, num_levels) + system_state.shape, dtype=complex)
        blocks[level, level] = system_state
        return cls(blocks)

    @classmethod
    def from_diagonal(cls, diagonal: Mapping[int, np.ndarray], num_levels: int) -> "BlockDensityMatrix":
        '''Block-diagonal state from a mapping mu -> rho_{mu mu}.'''
        dim = next(iter(diagonal.values())).shape[0]
        blocks = np.zeros((num_levels, num_levels, dim, dim), dtype=complex)
        for mu, block in diagonal.items():
            blocks[mu, mu] = block
        return cls(blocks)



def assemble_full(rho: BlockDensityMatrix) -> np.ndarray:
    ''' Assemble the joint density matrix.

    Block (mu, nu) occupies rows ``mu*d:(mu+1)*d`` and the same columns.

    Parameters
    ----------
    rho : BlockDensityMatrix

    Returns
    -------
    ndarray
        Matrix of dimension (M+1)*d.
    '''

    n, d = rho.num_levels, rho.dim
    return np.array(rho.blocks.transpose(0, 2, 1, 3).reshape(n * d, n * d))


def disassemble(full: np.ndarray, num_levels: int) -> BlockDensityMatrix:
    ''' Split a joint density matrix into blocks.

    Parameters
    ----------
    full : ndarray
        Matrix of dimension (M+1)*d.
    num_levels : int
        M + 1.

    Returns
    -------
    BlockDensityMatrix

    Raises
    ------
    ConfigurationError
        If the dimension is not a multiple of `num_levels`.
    '''

    full = as_operator(full)
    if full.shape[0] % num_levels:
        raise ConfigurationError("Dimension {0} is not divisible by {1} levels".format(full.shape[0], num_levels))
    d = full.shape[0] // num_levels
    return BlockDensityMatrix(full.reshape(num_levels, d, num_levels, d).transpose(0, 2, 1, 3))


def check_state(rho: BlockDensityMatrix, tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[str]:
    ''' List every invariant violation of a joint state.

    Checks global hermiticity, unit total trace, positivity of the
    assembled matrix and the range of the device populations.

    Parameters
    ----------
    rho : BlockDensityMatrix
    tolerances : Tolerances, optional

    Returns
    -------
    List[str]
    '''

    violations = []
    full = assemble_full(rho)

    deviation = float(np.max(np.abs(full - dagger(full)))) if full.size else 0.0
    if deviation > tolerances.hermitian:
        violations.append("state: not hermitian (max deviation {0:.3g})".format(deviation))

    drift = abs(rho.trace() - 1)
    if drift > tolerances.trace:
        violations.append("state: total trace differs from 1 by {0:.3g}".format(drift))

    smallest = min_eigenvalue(full)
    if smallest < -tolerances.psd:
        violations.append("state: negative eigenvalue {0:.3g}".format(smallest))

    populations = np.einsum("mmaa->m", rho.blocks)
    for mu, population in enumerate(populations):
        if abs(population.imag) > tolerances.trace or not -tolerances.psd <= population.real <= 1 + tolerances.trace:
            violations.append("state: population p_{0} = {1:.6g} outside [0, 1]".format(mu, population))

    return violations
