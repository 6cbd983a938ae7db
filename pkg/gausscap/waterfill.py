"""Energy-constrained capacity sup { C_chi(M; Sigma) : Sp(eps Sigma) <= E }.

Units: hbar = 1, so a mode of frequency omega carries energy omega per photon.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from . import conf
from .capacity import log_det_gain
from .errors import InvalidInputError, NumericalFailureError
from .gauss_core import HermitianMatrix, hermitian

logger = logging.getLogger(__name__)

ARMIJO = 1e-4
# relative objective gain below which the ascent has converged
FTOL = 1e-14


@dataclass(frozen=True, eq=False)
class EnergyConstraint:
    hamiltonian: HermitianMatrix
    budget: float

    def __post_init__(self):
        if not self.budget > 0:
            raise InvalidInputError('energy budget must be positive', field='budget')
        if self.hamiltonian.eigvalsh()[0] <= 0:
            raise InvalidInputError('hamiltonian matrix must be positive definite', field='hamiltonian')

    @property
    def dim(self):
        return self.hamiltonian.dim


@dataclass(frozen=True, eq=False)
class WaterfillResult:
    water_level: float
    allocations: np.ndarray
    capacity: float
    freqs: np.ndarray
    noise_diag: np.ndarray
    budget: float

    @property
    def active(self):
        return [int(j) for j in np.flatnonzero(self.allocations > 0)]

    @property
    def budget_residual(self):
        return float(abs(np.dot(self.freqs, self.allocations) - self.budget))

    @property
    def kkt_residual(self):
        """max_j | nu/omega_j - n_j - 1 - s_j | over active modes."""
        active = self.allocations > 0
        if not np.any(active):
            return 0.0
        gap = self.water_level / self.freqs - self.noise_diag - 1 - self.allocations
        return float(np.max(np.abs(gap[active])))

    def to_json(self):
        return {
            'water_level': self.water_level,
            'allocations': self.allocations.tolist(),
            'capacity_nats': self.capacity,
            'active': self.active,
            'budget_residual': self.budget_residual,
            'kkt_residual': self.kkt_residual,
        }


@dataclass(frozen=True, eq=False)
class ConstrainedCapacityResult:
    optimal_cov: HermitianMatrix
    capacity: float
    method: str
    iterations: int = 0
    objective_trace: list = field(default_factory=list)
    waterfill: WaterfillResult = None

    def energy(self, constraint):
        return float(np.trace(constraint.hamiltonian.entries @ self.optimal_cov.entries).real)

    def to_json(self):
        document = {
            'optimal_cov': self.optimal_cov.to_json(),
            'capacity_nats': self.capacity,
            'method': self.method,
            'iterations': self.iterations,
        }
        if self.waterfill is not None:
            document['waterfill'] = self.waterfill.to_json()
        return document


def _water_level(thresholds, budget):
    """Smallest nu with sum_j (nu - t_j)_+ = budget."""
    thresholds = np.asarray(thresholds, dtype=float)
    lower = float(np.min(thresholds))

    def residual(nu):
        return float(np.sum(np.clip(nu - thresholds, 0.0, None)) - budget)

    # at least one mode receives 2E above the top threshold, so the bracket holds
    pad = 2.0 * budget
    upper = float(np.max(thresholds)) + pad
    while residual(upper) <= 0:
        pad *= 2
        upper = float(np.max(thresholds)) + pad
    nu = scipy.optimize.brentq(residual, lower, upper, xtol=conf.get('BISECTION_TOL') * max(1.0, abs(upper)),
                               rtol=4 * np.finfo(float).eps, maxiter=500)
    # the allocation sum is linear on the identified active set: solve it exactly there
    for _ in range(thresholds.size):
        active = thresholds < nu
        exact = (budget + np.sum(thresholds[active])) / np.count_nonzero(active)
        if np.array_equal(thresholds < exact, active):
            return float(exact)
        nu = exact
    return float(nu)


def waterfill_diagonal(freqs, noise_diag, budget):
    """Water-filling s_j = (nu/omega_j - n_j - 1)_+ with sum_j omega_j s_j = E."""
    freqs = np.asarray(freqs, dtype=float).reshape(-1)
    noise_diag = np.asarray(noise_diag, dtype=float).reshape(-1)
    if freqs.size == 0 or freqs.shape != noise_diag.shape:
        raise InvalidInputError('freqs and noise_diag must be non-empty and of equal length')
    if np.any(freqs <= 0):
        raise InvalidInputError('all frequencies must be positive', field='freqs')
    if np.any(noise_diag < 0):
        raise InvalidInputError('noise photon numbers must be nonnegative', field='noise_diag')
    if not budget > 0:
        raise InvalidInputError('energy budget must be positive', field='budget')

    thresholds = freqs * (noise_diag + 1)
    nu = _water_level(thresholds, budget)
    allocations = np.clip(nu / freqs - noise_diag - 1, 0.0, None)
    capacity = float(np.sum(np.log1p(allocations / (noise_diag + 1))))
    return WaterfillResult(nu, allocations, capacity, freqs, noise_diag, float(budget))


def grid_search_diagonal(freqs, noise_diag, budget, step=1e-4):
    """Brute-force maximum of sum_j log(1 + s_j/(n_j+1)) over a grid of energy splits."""
    freqs = np.asarray(freqs, dtype=float)
    noise_diag = np.asarray(noise_diag, dtype=float)
    levels = np.arange(0.0, budget + step / 2, step)
    if freqs.size == 1:
        splits = np.array([[budget]])
    else:
        mesh = np.meshgrid(*([levels] * (freqs.size - 1)), indexing='ij')
        partial = np.stack([m.reshape(-1) for m in mesh], axis=1)
        rest = budget - partial.sum(axis=1)
        keep = rest >= -1e-12
        splits = np.column_stack([partial[keep], np.clip(rest[keep], 0.0, None)])
    allocations = splits / freqs
    values = np.sum(np.log1p(allocations / (noise_diag + 1)), axis=1)
    best = int(np.argmax(values))
    return float(values[best]), allocations[best]


def _common_eigenbasis(a, b):
    """Eigenbasis of ``a`` refined inside each of its eigenspaces to diagonalise ``b``."""
    w, v = scipy.linalg.eigh(a.entries)
    tol = conf.get('COMMUTE_TOL') * max(1.0, float(np.max(np.abs(w))))
    basis = v.copy()
    # eigenvalues closer than tol share an eigenspace
    edges = np.concatenate([[0], np.flatnonzero(np.diff(w) > tol) + 1, [w.size]])
    for start, stop in zip(edges[:-1], edges[1:]):
        if stop - start > 1:
            block = v[:, start:stop]
            _, inner = scipy.linalg.eigh(block.conj().T @ b.entries @ block)
            basis[:, start:stop] = block @ inner
    return basis


def _project_trace_simplex(matrix, budget):
    """Euclidean projection onto {X >= 0, Tr X = budget}."""
    w, v = scipy.linalg.eigh((matrix + matrix.conj().T) / 2)
    # projecting the spectrum onto the scaled simplex is a water level on -w
    tau = -_water_level(-w, budget)
    return (v * np.clip(w - tau, 0.0, None)) @ v.conj().T


def _ascent(constraint, noise):
    """Projected gradient ascent in X = eps^1/2 Sigma eps^1/2 over {X >= 0, Tr X = E}."""
    dim, budget = constraint.dim, constraint.budget
    max_iter = conf.get('MAX_ITER')
    eps_mhalf = constraint.hamiltonian.inv_sqrt().entries
    shift = noise.entries + np.eye(dim)
    gtol = 1e-9 * max(1.0, budget)

    def sigma_of(x):
        return hermitian(eps_mhalf @ x @ eps_mhalf)

    def objective(x):
        return log_det_gain(noise, sigma_of(x))

    def gradient(x):
        return eps_mhalf @ np.linalg.inv(sigma_of(x).entries + shift) @ eps_mhalf

    x = np.eye(dim) * (budget / dim)
    value = objective(x)
    trace = [value]
    step = 1.0
    for iteration in range(1, max_iter + 1):
        grad = gradient(x)
        mapping = _project_trace_simplex(x + grad, budget) - x
        if np.linalg.norm(mapping) <= gtol:
            return sigma_of(x), value, iteration, trace
        while True:
            candidate = _project_trace_simplex(x + step * grad, budget)
            increase = float(np.real(np.vdot(grad, candidate - x)))
            candidate_value = objective(candidate)
            if candidate_value >= value + ARMIJO * increase:
                break
            step /= 2
            if step < 1e-20:
                return sigma_of(x), value, iteration, trace
        stalled = candidate_value - value <= FTOL * max(1.0, abs(candidate_value))
        x, value = candidate, candidate_value
        trace.append(value)
        if stalled:
            return sigma_of(x), value, iteration, trace
        step *= 2
    raise NumericalFailureError(
        f'projected ascent did not converge in {max_iter} iterations',
        best=sigma_of(x), value=value, iterations=max_iter)


def constrained_capacity(constraint, noise):
    """Energy-constrained capacity and its maximising input covariance."""
    noise = noise.require_psd('noise')
    if noise.dim != constraint.dim:
        raise InvalidInputError('noise and hamiltonian dimensions differ')

    if constraint.hamiltonian.commutes_with(noise):
        basis = _common_eigenbasis(constraint.hamiltonian, noise)
        freqs = np.real(np.einsum('ij,ik,kj->j', basis.conj(), constraint.hamiltonian.entries, basis))
        noise_diag = np.clip(np.real(np.einsum('ij,ik,kj->j', basis.conj(), noise.entries, basis)), 0.0, None)
        result = waterfill_diagonal(freqs, noise_diag, constraint.budget)
        optimal = hermitian((basis * result.allocations) @ basis.conj().T)
        return ConstrainedCapacityResult(optimal, result.capacity, 'waterfill', waterfill=result)

    optimal, value, iterations, trace = _ascent(constraint, noise)
    logger.debug('projected ascent converged after %d iterations (capacity %.12g)', iterations, value)
    return ConstrainedCapacityResult(optimal, value, 'projected-ascent', iterations, trace)


def brute_force_constrained(constraint, noise, step=0.05, polish=True):
    """Grid search over 2x2 inputs with Sp(eps Sigma) = E, optionally polished by Nelder-Mead.

    X = eps^1/2 Sigma eps^1/2 = (E/2)(I + x sx + y sy + z sz) with x^2 + y^2 + z^2 <= 1.
    """
    if constraint.dim != 2:
        raise InvalidInputError('brute-force search is only available for two modes')
    budget = constraint.budget
    eps_mhalf = constraint.hamiltonian.inv_sqrt().entries
    base_logdet = (noise + np.eye(2)).logdet()
    pauli = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)

    def values(params):
        x = (budget / 2) * (np.eye(2) + np.einsum('na,aij->nij', params, pauli))
        total = eps_mhalf @ x @ eps_mhalf + noise.entries + np.eye(2)
        det = (total[:, 0, 0] * total[:, 1, 1] - np.abs(total[:, 0, 1]) ** 2).real
        return np.log(det) - base_logdet

    axis = np.arange(-1.0, 1.0 + step / 2, step)
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing='ij'), axis=-1).reshape(-1, 3)
    grid = grid[np.sum(grid ** 2, axis=1) <= 1.0]
    scores = values(grid)
    best = grid[int(np.argmax(scores))]

    def clipped(params):
        radius = np.linalg.norm(params)
        return params / radius if radius > 1 else params

    if polish:
        found = scipy.optimize.minimize(lambda p: -values(clipped(p)[None, :])[0], best, method='Nelder-Mead',
                                        options={'xatol': 1e-10, 'fatol': 1e-14, 'maxiter': 4000})
        if -found.fun >= values(best[None, :])[0]:
            best = clipped(found.x)
    x = (budget / 2) * (np.eye(2) + np.einsum('a,aij->ij', best, pauli))
    return float(values(best[None, :])[0]), hermitian(eps_mhalf @ x @ eps_mhalf)
