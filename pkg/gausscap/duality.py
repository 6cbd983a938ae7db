"""Ensemble-observable duality.

Two constructions live here:

* the Gaussian dual: for a nondegenerate ensemble (Sigma, N) the dual
  observable is the Gaussian POVM (K, N~) with Sigma~ = Sigma + N,
  N~^-1 = R (N^-1 - Sigma~^-1) R, R = (I + Sigma~^-1)^-1/2 and
  K = sqrt(Sigma~ (Sigma~ + I)) Sigma^-1;
* the finite dual pair of an ensemble {p_i, rho_i} and a POVM {m_j, mu_j},
  which swaps the roles of inputs and outcomes while keeping the joint
  distribution (transposed) and the average state.

On ker(rho_bar) the dual POVM is extended proportionally: every M'_i receives
p_i times the completeness deficiency. The kernel carries no rho_bar weight,
so the joint distribution is unchanged.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.special

from . import conf
from .capacity import gain_spectrum
from .codec import decode_matrix, encode_matrix
from .errors import InvalidInputError
from .gauss_core import GaussianObservable, HermitianMatrix, hermitian

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DualGaussianResult:
    rescale: np.ndarray
    dual_noise: HermitianMatrix
    sigma_tilde: HermitianMatrix

    @property
    def observable(self):
        return GaussianObservable(self.rescale, self.dual_noise)

    def to_json(self):
        return {
            'rescale': encode_matrix(self.rescale),
            'dual_noise': self.dual_noise.to_json(),
            'sigma_tilde': self.sigma_tilde.to_json(),
        }


@dataclass(frozen=True)
class CapacityIdentityCheck:
    lhs: float
    rhs: float
    residual: float
    similarity_residual: float

    def to_json(self):
        return {
            'lhs': self.lhs,
            'rhs': self.rhs,
            'residual': self.residual,
            'similarity_residual': self.similarity_residual,
        }


def dual_gaussian_observable(ens):
    ens.require_nondegenerate()
    sigma, noise = ens.prior_cov, ens.state_noise
    dim = ens.dim
    sigma_tilde = sigma + noise
    # every factor below is a function of Sigma~, so R commutes with Sigma~
    r = sigma_tilde.apply(lambda w: 1.0 / np.sqrt(1.0 + 1.0 / w)).entries
    middle = noise.inv() - sigma_tilde.inv()
    dual_noise = hermitian(r @ middle.entries @ r).inv()
    t = sigma_tilde.apply(lambda w: np.sqrt(w * (w + 1.0))).entries
    rescale = t @ sigma.inv().entries
    dual_noise = dual_noise.require_psd('dual_noise')
    logger.debug('dual observable for s=%d: min eigenvalue of dual noise %.3e', dim, dual_noise.eigvalsh()[0])
    return DualGaussianResult(rescale, dual_noise, sigma_tilde)


def _sorted_spectrum(matrix):
    values = np.linalg.eigvals(matrix)
    return values[np.lexsort((values.imag, values.real))]


def verify_capacity_identity(ens):
    """det(I + (N~ + I)^-1 Sigma~) against det(I + (N + I)^-1 Sigma), and the similarity behind it."""
    dual = dual_gaussian_observable(ens)
    sigma, noise = ens.prior_cov, ens.state_noise
    dim = ens.dim
    lhs = float(np.prod(gain_spectrum(dual.dual_noise, dual.sigma_tilde)))
    rhs = float(np.prod(gain_spectrum(noise, sigma)))

    # (N~ + I)^-1 Sigma~ is similar to T^-1 Sigma (N + I)^-1 T, T = sqrt(Sigma~ (Sigma~ + I))
    t = dual.sigma_tilde.apply(lambda w: np.sqrt(w * (w + 1.0))).entries
    left = np.linalg.solve(dual.dual_noise.entries + np.eye(dim), dual.sigma_tilde.entries)
    right = np.linalg.solve(t, sigma.entries @ np.linalg.solve(noise.entries + np.eye(dim), t))
    left_spec, right_spec = _sorted_spectrum(left), _sorted_spectrum(right)
    scale = max(1.0, float(np.max(np.abs(left_spec))))
    similarity = float(np.max(np.abs(left_spec - right_spec))) / scale
    return CapacityIdentityCheck(lhs, rhs, abs(lhs - rhs) / abs(rhs), similarity)


def _as_stack(matrices, name):
    stack = np.asarray(matrices, dtype=complex)
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2] or stack.shape[0] < 1:
        raise InvalidInputError(f'{name} must be a non-empty list of square matrices', field=name)
    return stack


def _check_hermitian_psd(stack, name):
    tol = conf.get('DENSITY_TOL')
    for index, matrix in enumerate(stack):
        if np.max(np.abs(matrix - matrix.conj().T)) > tol:
            raise InvalidInputError(f'{name}[{index}] is not Hermitian', field=name)
        smallest = scipy.linalg.eigvalsh((matrix + matrix.conj().T) / 2)[0]
        if smallest < -tol:
            raise InvalidInputError(f'{name}[{index}] is not positive semidefinite (min eigenvalue {smallest:.3e})',
                                    field=name)


@dataclass(frozen=True, eq=False)
class DiscreteEnsemble:
    probs: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        states = _as_stack(self.states, 'states')
        if probs.shape[0] != states.shape[0]:
            raise InvalidInputError(f'{probs.shape[0]} probabilities for {states.shape[0]} states', field='probs')
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > conf.get('PROB_TOL'):
            raise InvalidInputError('probabilities must be nonnegative and sum to 1', field='probs')
        _check_hermitian_psd(states, 'states')
        traces = np.real(np.trace(states, axis1=1, axis2=2))
        if np.max(np.abs(traces - 1.0)) > conf.get('DENSITY_TOL'):
            raise InvalidInputError('every state must have unit trace', field='states')
        object.__setattr__(self, 'probs', probs)
        object.__setattr__(self, 'states', (states + states.conj().transpose(0, 2, 1)) / 2)

    @property
    def dim(self):
        return self.states.shape[1]

    def __len__(self):
        return self.probs.shape[0]

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict) or 'probs' not in data or 'states' not in data:
            raise InvalidInputError('ensemble must be an object with "probs" and "states"', field='ensemble')
        states = [decode_matrix(state, field=f'states[{i}]') for i, state in enumerate(data['states'])]
        return cls(data['probs'], states)

    def to_json(self):
        return {'probs': self.probs.tolist(), 'states': [encode_matrix(state) for state in self.states]}


@dataclass(frozen=True, eq=False)
class DiscretePOVM:
    elements: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        elements = _as_stack(self.elements, 'elements')
        weights = np.ones(elements.shape[0]) if self.weights is None else np.asarray(self.weights, dtype=float)
        if weights.shape != (elements.shape[0],):
            raise InvalidInputError(f'{weights.size} weights for {elements.shape[0]} elements', field='weights')
        if np.any(weights <= 0):
            raise InvalidInputError('weights must be positive', field='weights')
        _check_hermitian_psd(elements, 'elements')
        object.__setattr__(self, 'elements', (elements + elements.conj().transpose(0, 2, 1)) / 2)
        object.__setattr__(self, 'weights', weights)

    @property
    def dim(self):
        return self.elements.shape[1]

    def __len__(self):
        return self.weights.shape[0]

    def total(self):
        return np.einsum('j,jab->ab', self.weights, self.elements)

    def completeness_defect(self):
        """Frobenius norm of sum_j m_j mu_j - I."""
        return float(np.linalg.norm(self.total() - np.eye(self.dim)))

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict) or 'elements' not in data:
            raise InvalidInputError('povm must be an object with "elements" (and optionally "weights")', field='povm')
        elements = [decode_matrix(element, field=f'elements[{i}]') for i, element in enumerate(data['elements'])]
        return cls(elements, data.get('weights'))

    def to_json(self):
        return {'elements': [encode_matrix(m) for m in self.elements], 'weights': self.weights.tolist()}


@dataclass(frozen=True, eq=False)
class JointDistribution:
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2:
            raise InvalidInputError('joint distribution must be a matrix')
        if np.min(matrix) < -conf.get('JOINT_CLIP'):
            raise InvalidInputError(f'joint distribution has a negative entry ({np.min(matrix):.3e})')
        if abs(matrix.sum() - 1.0) > conf.get('DENSITY_TOL'):
            raise InvalidInputError(f'joint distribution sums to {matrix.sum():.12g}, expected 1')
        object.__setattr__(self, 'matrix', np.clip(matrix, 0.0, None))

    @property
    def row_marginal(self):
        return self.matrix.sum(axis=1)

    @property
    def column_marginal(self):
        return self.matrix.sum(axis=0)

    def to_json(self):
        return {'matrix': self.matrix.tolist()}


@dataclass
class DualPairDiagnostics:
    dropped_outcomes: list = field(default_factory=list)
    pinv_rank: int = 0
    completeness_defect: float = 0.0
    dual_completeness_defect: float = 0.0
    mass_defect: float = 0.0

    def to_json(self):
        return {
            'dropped_outcomes': self.dropped_outcomes,
            'pinv_rank': self.pinv_rank,
            'completeness_defect': self.completeness_defect,
            'dual_completeness_defect': self.dual_completeness_defect,
            'mass_defect': self.mass_defect,
        }


@dataclass(frozen=True, eq=False)
class DualPair:
    ensemble: DiscreteEnsemble
    povm: DiscretePOVM
    diagnostics: DualPairDiagnostics
    # indices into the original POVM of the outcomes that became dual states
    kept_outcomes: np.ndarray = None

    def to_json(self):
        return {
            'dual_ensemble': self.ensemble.to_json(),
            'dual_povm': self.povm.to_json(),
            'kept_outcomes': [int(j) for j in self.kept_outcomes],
            'diagnostics': self.diagnostics.to_json(),
        }


def ensemble_average_state(ens):
    """rho_bar = sum_i p_i rho_i."""
    return np.einsum('i,iab->ab', ens.probs, ens.states)


def _check_dims(ens, povm):
    if ens.dim != povm.dim:
        raise InvalidInputError(f'ensemble acts on dimension {ens.dim} but the POVM on {povm.dim}')


def _matrix_powers(rho_bar):
    """rho_bar^1/2 and its pseudo-inverse, inverting eigenvalues above PINV_RTOL * lambda_max."""
    w, v = scipy.linalg.eigh(rho_bar)
    w = np.clip(w, 0.0, None)
    keep = w > conf.get('PINV_RTOL') * w[-1]
    root = np.sqrt(w)
    inv_root = np.where(keep, 1.0 / np.where(keep, root, 1.0), 0.0)
    return (v * root) @ v.conj().T, (v * inv_root) @ v.conj().T, int(np.count_nonzero(keep))


def dual_pair_finite(ens, povm, completeness_tol=None):
    """Dual ensemble {pi'_j, rho'_j} and dual POVM {M'_i} of a finite pair."""
    _check_dims(ens, povm)
    completeness_tol = conf.get('COMPLETENESS_TOL') if completeness_tol is None else completeness_tol
    diagnostics = DualPairDiagnostics(completeness_defect=povm.completeness_defect())
    if diagnostics.completeness_defect > completeness_tol:
        raise InvalidInputError(
            f'POVM is not complete: |sum m_j mu_j - I| = {diagnostics.completeness_defect:.3e} '
            f'> {completeness_tol:.1e}', field='povm')

    rho_bar = ensemble_average_state(ens)
    root, inv_root, diagnostics.pinv_rank = _matrix_powers(rho_bar)

    overlaps = np.real(np.einsum('ab,jba->j', rho_bar, povm.elements))
    dual_probs = overlaps * povm.weights
    kept = np.flatnonzero(dual_probs > conf.get('JOINT_CLIP'))
    dropped = np.setdiff1d(np.arange(len(povm)), kept)
    if dropped.size:
        diagnostics.dropped_outcomes = [int(j) for j in dropped]
        logger.warning('dropping %d POVM outcome(s) with zero weight on the average state: %s',
                       dropped.size, diagnostics.dropped_outcomes)
    total = dual_probs[kept].sum()
    diagnostics.mass_defect = float(abs(total - 1.0))
    dual_states = np.einsum('ab,jbc,cd->jad', root, povm.elements[kept], root) / overlaps[kept, None, None]

    cores = ens.probs[:, None, None] * np.einsum('ab,ibc,cd->iad', inv_root, ens.states, inv_root)
    deficiency = np.eye(ens.dim) - cores.sum(axis=0)
    dual_elements = cores + ens.probs[:, None, None] * deficiency
    dual_povm = DiscretePOVM(dual_elements, np.ones(len(ens)))
    diagnostics.dual_completeness_defect = dual_povm.completeness_defect()

    dual_ens = DiscreteEnsemble(dual_probs[kept] / total, dual_states)
    return DualPair(dual_ens, dual_povm, diagnostics, kept)


def joint_distribution(ens, povm):
    """P[i][j] = p_i Tr(rho_i m_j) mu_j."""
    _check_dims(ens, povm)
    overlaps = np.real(np.einsum('iab,jba->ij', ens.states, povm.elements))
    return JointDistribution(ens.probs[:, None] * overlaps * povm.weights[None, :])


def mutual_information_discrete(joint):
    matrix = joint.matrix
    product = np.outer(joint.row_marginal, joint.column_marginal)
    return float(np.sum(scipy.special.rel_entr(matrix, product)))


def coarse_grain(povm, partition):
    """Merge POVM outcomes block-wise: M(B_k) = sum_{j in B_k} m_j mu_j, unit weights."""
    seen = sorted(j for block in partition for j in block)
    if seen != list(range(len(povm))) or any(len(block) == 0 for block in partition):
        raise InvalidInputError('partition must split the outcome indices into non-empty disjoint blocks',
                                field='partition')
    merged = [np.einsum('j,jab->ab', povm.weights[list(block)], povm.elements[list(block)]) for block in partition]
    return DiscretePOVM(merged, np.ones(len(partition)))


def verify_dual_pair(ens, povm, pair=None):
    """Residuals of the duality relations for ``pair`` (computed when omitted)."""
    pair = dual_pair_finite(ens, povm) if pair is None else pair
    joint = joint_distribution(ens, povm)
    dual_joint = joint_distribution(pair.ensemble, pair.povm)
    original = joint.matrix[:, pair.kept_outcomes]
    original = original / original.sum()

    rho_bar = ensemble_average_state(ens)
    root, _, _ = _matrix_powers(rho_bar)
    sandwiched = np.einsum('ab,ibc,cd->iad', root, pair.povm.elements, root)
    ide = np.linalg.norm(sandwiched - ens.probs[:, None, None] * ens.states, axis=(1, 2))
    return {
        'joint': float(np.max(np.abs(dual_joint.matrix.T - original))),
        'average_state': float(np.linalg.norm(ensemble_average_state(pair.ensemble) - rho_bar)),
        'mutual_information': abs(mutual_information_discrete(joint) - mutual_information_discrete(dual_joint)),
        'ide': float(np.max(ide)),
        'completeness': pair.diagnostics.dual_completeness_defect,
    }
