"""Complex covariance algebra of gauge-invariant Gaussian states and observables.

Densities and differential entropies are taken with respect to the reference
measure mu(d^2s z) = pi^-s d^2s z. The Lebesgue density is the mu-density
divided by pi^s (see :func:`lebesgue_density`). Entropies are in nats.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import conf
from .codec import decode_matrix, decode_vector, encode_matrix, encode_vector
from .errors import InvalidInputError, UnsupportedInputError


def _frozen(array):
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Complex s x s Hermitian matrix (covariances, noises, Hamiltonians)."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise InvalidInputError(f'expected a non-empty square matrix, got shape {entries.shape}')
        if not np.all(np.isfinite(entries)):
            raise InvalidInputError('matrix has non-finite entries')
        scale = max(1.0, float(np.max(np.abs(entries))))
        asymmetry = float(np.max(np.abs(entries - entries.conj().T)))
        if asymmetry > conf.get('HERMITIAN_TOL') * scale:
            raise InvalidInputError(f'matrix is not Hermitian (max |A - A*| = {asymmetry:.3e})')
        object.__setattr__(self, 'entries', _frozen((entries + entries.conj().T) / 2))

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))

    @classmethod
    def zeros(cls, dim):
        return cls(np.zeros((dim, dim)))

    @classmethod
    def diag(cls, values):
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def from_json(cls, data, field='matrix'):
        try:
            return cls(decode_matrix(data, field=field))
        except InvalidInputError as exc:
            if exc.field is None:
                raise InvalidInputError(f'{field}: {exc}', field=field) from exc
            raise

    def to_json(self):
        return encode_matrix(self.entries)

    @property
    def dim(self):
        return self.entries.shape[0]

    def __add__(self, other):
        if isinstance(other, HermitianMatrix):
            other = other.entries
        return HermitianMatrix(self.entries + other)

    def __sub__(self, other):
        if isinstance(other, HermitianMatrix):
            other = other.entries
        return HermitianMatrix(self.entries - other)

    def __mul__(self, scalar):
        return HermitianMatrix(self.entries * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return f'HermitianMatrix(dim={self.dim}, entries={self.entries.tolist()!r})'

    def eigh(self):
        return scipy.linalg.eigh(self.entries)

    def eigvalsh(self):
        return scipy.linalg.eigvalsh(self.entries)

    def apply(self, func):
        """Spectral functional calculus: V f(w) V*."""
        w, v = self.eigh()
        return HermitianMatrix((v * func(w)) @ v.conj().T)

    def require_psd(self, name='matrix'):
        """Return self with eigenvalues in [-PSD_TOL, 0) clipped to 0; reject below."""
        w, v = self.eigh()
        if w[0] < -conf.get('PSD_TOL'):
            raise InvalidInputError(f'{name} is not positive semidefinite (min eigenvalue {w[0]:.3e})', field=name)
        if w[0] < 0:
            return HermitianMatrix((v * np.clip(w, 0.0, None)) @ v.conj().T)
        return self

    def require_nondegenerate(self, name='matrix', min_eig=None):
        min_eig = conf.get('MIN_EIG') if min_eig is None else min_eig
        smallest = self.eigvalsh()[0]
        if smallest < min_eig:
            raise UnsupportedInputError(
                f'{name} is degenerate (min eigenvalue {smallest:.3e} < {min_eig:.1e}); '
                'only nondegenerate covariances are supported here', field=name)
        return self

    def require_positive_definite(self, name='matrix'):
        smallest = self.eigvalsh()[0]
        if smallest <= 0:
            raise InvalidInputError(f'{name} is not positive definite (min eigenvalue {smallest:.3e})', field=name)
        return self

    def logdet(self):
        w = self.eigvalsh()
        if w[0] <= 0:
            raise InvalidInputError(f'log det of a matrix that is not positive definite (min eigenvalue {w[0]:.3e})')
        return float(np.sum(np.log(w)))

    def inv(self):
        return self.apply(lambda w: 1.0 / w)

    def sqrt(self):
        return self.apply(lambda w: np.sqrt(np.clip(w, 0.0, None)))

    def inv_sqrt(self):
        return self.apply(lambda w: 1.0 / np.sqrt(w))

    def trace(self):
        return float(np.trace(self.entries).real)

    def commutes_with(self, other, tol=None):
        tol = conf.get('COMMUTE_TOL') if tol is None else tol
        a, b = self.entries, other.entries
        return bool(np.linalg.norm(a @ b - b @ a) <= tol * max(1.0, np.linalg.norm(a) * np.linalg.norm(b)))


def hermitian(matrix):
    """Wrap (and symmetrise) a numerically Hermitian product."""
    matrix = np.asarray(matrix, dtype=complex)
    return HermitianMatrix((matrix + matrix.conj().T) / 2)


def _as_vector(value, dim, name):
    vector = np.asarray(value, dtype=complex).reshape(-1)
    if vector.shape[0] != dim:
        raise InvalidInputError(f'{name} has length {vector.shape[0]}, expected {dim}', field=name)
    return vector


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Gauge-invariant Gaussian state rho_{Lambda, z} (covariance and displacement)."""

    cov: HermitianMatrix
    mean: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, 'cov', self.cov.require_psd('cov'))
        mean = np.zeros(self.cov.dim) if self.mean is None else self.mean
        object.__setattr__(self, 'mean', _frozen(_as_vector(mean, self.cov.dim, 'mean')))

    @property
    def dim(self):
        return self.cov.dim

    def to_json(self):
        return {'cov': self.cov.to_json(), 'mean': encode_vector(self.mean)}

    @classmethod
    def from_json(cls, data):
        mean = data.get('mean')
        return cls(HermitianMatrix.from_json(data['cov'], field='cov'),
                   None if mean is None else decode_vector(mean, field='mean'))


@dataclass(frozen=True, eq=False)
class GaussianObservable:
    """Gauge-covariant Gaussian POVM D(Kz) rho_N D(Kz)* |det K|^2 d^2s z / pi^s."""

    rescale: np.ndarray
    noise: HermitianMatrix

    def __post_init__(self):
        rescale = np.asarray(self.rescale, dtype=complex)
        if rescale.shape != (self.noise.dim, self.noise.dim):
            raise InvalidInputError(
                f'rescale has shape {rescale.shape}, expected {(self.noise.dim, self.noise.dim)}', field='rescale')
        if abs(np.linalg.det(rescale)) <= conf.get('MIN_DET'):
            raise InvalidInputError('rescale matrix K is singular', field='rescale')
        object.__setattr__(self, 'rescale', _frozen(rescale))
        object.__setattr__(self, 'noise', self.noise.require_psd('noise'))

    @classmethod
    def heterodyne(cls, dim, noise=None, rescale=None):
        noise = HermitianMatrix.zeros(dim) if noise is None else noise
        return cls(np.eye(dim) if rescale is None else rescale, noise)

    @property
    def dim(self):
        return self.noise.dim

    @property
    def log_abs_det(self):
        return float(np.linalg.slogdet(self.rescale)[1])

    @property
    def is_unscaled(self):
        return bool(np.array_equal(self.rescale, np.eye(self.dim)))

    def to_json(self):
        return {'rescale': encode_matrix(self.rescale), 'noise': self.noise.to_json()}


@dataclass(frozen=True, eq=False)
class GaussianEnsemble:
    """Gaussian prior N(0, Sigma) over displaced states rho_{N, z}."""

    prior_cov: HermitianMatrix
    state_noise: HermitianMatrix

    def __post_init__(self):
        if self.prior_cov.dim != self.state_noise.dim:
            raise InvalidInputError('prior_cov and state_noise dimensions differ')
        object.__setattr__(self, 'prior_cov', self.prior_cov.require_psd('prior_cov'))
        object.__setattr__(self, 'state_noise', self.state_noise.require_psd('state_noise'))

    @property
    def dim(self):
        return self.prior_cov.dim

    def require_nondegenerate(self):
        self.prior_cov.require_nondegenerate('prior_cov')
        self.state_noise.require_nondegenerate('state_noise')
        return self

    def to_json(self):
        return {'prior_cov': self.prior_cov.to_json(), 'state_noise': self.state_noise.to_json()}


def char_fn(state, w):
    """Quantum characteristic function Tr rho_{Lambda,z} D(w)."""
    w = _as_vector(w, state.dim, 'w')
    symplectic = np.vdot(state.mean, w).imag
    quadratic = np.vdot(w, (state.cov.entries + np.eye(state.dim) / 2) @ w).real
    return complex(np.exp(2j * symplectic - quadratic))


def output_covariance(state, obs):
    """Mean and covariance of the outcome law of ``obs`` on ``state``.

    For K = I this is (z0, Sigma + N + I); for general K the outcome is
    K^-1 u with u ~ CN(z0, Sigma + N + I).
    """
    _check_dims(state, obs)
    base = state.cov.entries + obs.noise.entries + np.eye(state.dim)
    if obs.is_unscaled:
        return state.mean.copy(), HermitianMatrix(base)
    k_inv = np.linalg.inv(obs.rescale)
    return k_inv @ state.mean, hermitian(k_inv @ base @ k_inv.conj().T)


def _check_dims(state, obs):
    if state.dim != obs.dim:
        raise InvalidInputError(f'state has {state.dim} modes but the observable has {obs.dim}')


def log_output_density(state, obs, outcome):
    """Natural log of :func:`output_density`; vectorised over rows of ``outcome``."""
    _check_dims(state, obs)
    outcome = np.asarray(outcome, dtype=complex)
    single = outcome.ndim == 1
    points = np.atleast_2d(outcome)
    if points.shape[1] != state.dim:
        raise InvalidInputError(f'outcome has {points.shape[1]} components, expected {state.dim}', field='outcome')
    cov = state.cov + obs.noise + np.eye(state.dim)
    w, v = cov.eigh()
    shifted = points @ obs.rescale.T - state.mean
    projected = shifted @ v.conj()
    quadratic = np.sum(np.abs(projected) ** 2 / w, axis=1)
    values = -quadratic - np.sum(np.log(w)) + 2 * obs.log_abs_det
    return float(values[0]) if single else values


def output_density(state, obs, outcome):
    """Outcome mu-density det(A)^-1 exp[-(Kz - z0)* A^-1 (Kz - z0)] |det K|^2, A = Sigma + N + I."""
    return np.exp(log_output_density(state, obs, outcome))


def lebesgue_density(state, obs, outcome):
    """Outcome density with respect to d^2s z (the mu-density over pi^s)."""
    return output_density(state, obs, outcome) / np.pi ** state.dim


def diff_entropy_gaussian(cov):
    """Differential entropy s + log det A of the complex Gaussian mu-density with covariance A."""
    if not isinstance(cov, HermitianMatrix):
        cov = HermitianMatrix(cov)
    cov.require_positive_definite('A')
    return cov.dim + cov.logdet()


def entropy_rescale(cov, c):
    """Entropy of the law scaled by c > 0, i.e. with covariance c^2 A."""
    if c <= 0:
        raise InvalidInputError('scale factor must be positive')
    return diff_entropy_gaussian(cov) + 2 * cov.dim * np.log(c)


def output_entropy(state, obs):
    """h of the outcome law: s + log det(Sigma + N + I) - 2 log |det K|."""
    _check_dims(state, obs)
    return diff_entropy_gaussian(state.cov + obs.noise + np.eye(state.dim)) - 2 * obs.log_abs_det


def ensemble_average(ens):
    """Average state of the ensemble: rho_{Sigma + N}."""
    return GaussianState(ens.prior_cov + ens.state_noise)
