"""Brute-force checks in truncated Fock space.

Each mode keeps the levels 0..d-1; an s-mode operator is a d^s x d^s matrix
in the tensor basis with mode 1 as the most significant index (the np.kron
order). Truncation is the only systematic error of this layer, so every
construction reports its leakage and logs a warning above TRUNC_TOL.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special

from . import conf
from .duality import DiscreteEnsemble, DiscretePOVM, dual_gaussian_observable, dual_pair_finite
from .errors import InvalidInputError
from .gauss_core import GaussianObservable, GaussianState, HermitianMatrix, hermitian, output_entropy

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FockOperator:
    modes: int
    cutoff: int
    matrix: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        size = self.cutoff ** self.modes
        if self.matrix.shape != (size, size):
            raise InvalidInputError(f'expected a {size}x{size} matrix for s={self.modes}, d={self.cutoff}')

    @property
    def size(self):
        return self.matrix.shape[0]

    def trace(self):
        return complex(np.trace(self.matrix))

    def check_density(self, tol=None):
        """Raise unless Hermitian and PSD within tol with trace within TRUNC_TOL + leakage of 1."""
        tol = conf.get('DENSITY_TOL') if tol is None else tol
        matrix = self.matrix
        if np.max(np.abs(matrix - matrix.conj().T)) > tol:
            raise InvalidInputError('density matrix is not Hermitian')
        if scipy.linalg.eigvalsh((matrix + matrix.conj().T) / 2)[0] < -tol:
            raise InvalidInputError('density matrix is not positive semidefinite')
        if abs(self.trace().real - 1.0) > conf.get('TRUNC_TOL') + self.leakage:
            raise InvalidInputError(f'density matrix has trace {self.trace().real:.12g}')
        return self


@dataclass(frozen=True)
class OutcomeGrid:
    """Square grid over the real and imaginary part of every outcome component."""

    modes: int
    extent: float
    spacing: float

    def __post_init__(self):
        if self.modes < 1 or not self.extent > 0 or not self.spacing > 0:
            raise InvalidInputError('grid needs s >= 1 and positive extent and spacing')

    @property
    def axis(self):
        steps = int(round(self.extent / self.spacing))
        return self.spacing * np.arange(-steps, steps + 1)

    @property
    def cell_weight(self):
        """mu-measure of one cell: h^2s / pi^s."""
        return (self.spacing ** 2 / np.pi) ** self.modes

    def points(self):
        axes = np.meshgrid(*([self.axis] * (2 * self.modes)), indexing='ij')
        flat = np.stack([a.reshape(-1) for a in axes], axis=1)
        return flat[:, 0::2] + 1j * flat[:, 1::2]

    def __len__(self):
        return self.axis.size ** (2 * self.modes)

    def covers(self, cov, sigmas=5.0):
        """Whether the grid reaches ``sigmas`` standard deviations of every real axis of CN(0, cov)."""
        spread = np.sqrt(np.max(np.real(np.diag(np.asarray(cov.entries)))) / 2)
        return bool(self.axis[-1] >= sigmas * spread)


def _lowering(d):
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)


def _kron_all(factors):
    result = factors[0]
    for factor in factors[1:]:
        result = np.kron(result, factor)
    return result


def _occupations(modes, d):
    """Occupation numbers (n_1, ..., n_s) of every basis index."""
    return np.indices((d,) * modes).reshape(modes, -1).T


def _as_modes(z):
    return np.atleast_1d(np.asarray(z, dtype=complex)).reshape(-1)


def ladder_operators(s, d):
    if s < 1 or d < 2:
        raise InvalidInputError('ladder operators need s >= 1 and d >= 2')
    single, eye = _lowering(d), np.eye(d)
    return [FockOperator(s, d, _kron_all([single if k == j else eye for k in range(s)])) for j in range(s)]


def poisson_tail(z, d):
    """Probability mass of the coherent state |z> above the cutoff."""
    kept = np.prod(1.0 - scipy.special.gammainc(d, np.abs(_as_modes(z)) ** 2))
    return float(1.0 - kept)


def _warn_leakage(what, leakage):
    if leakage > conf.get('TRUNC_TOL'):
        logger.warning('%s: truncation leakage %.3e exceeds %.1e; raise the cutoff', what, leakage,
                       conf.get('TRUNC_TOL'))


def _displacement_expm(alpha, d):
    a = _lowering(d)
    # i(a* alpha - conj(alpha) a) is Hermitian; D = exp(-i G)
    generator = 1j * (alpha * a.conj().T - np.conj(alpha) * a)
    w, v = scipy.linalg.eigh(generator)
    return (v * np.exp(-1j * w)) @ v.conj().T


def _displacement_exact(alpha, d):
    """Compression <m|D(alpha)|n>, m, n < d, of the untruncated displacement."""
    if alpha == 0:
        return np.eye(d, dtype=complex)
    m, n = np.indices((d, d))
    low, gap = np.minimum(m, n), np.abs(m - n)
    x, theta = abs(alpha) ** 2, np.angle(alpha)
    log_mag = 0.5 * (scipy.special.gammaln(low + 1) - scipy.special.gammaln(low + gap + 1)) \
        + gap * np.log(abs(alpha)) - x / 2
    phase = np.where(m >= n, np.exp(1j * gap * theta), (-1.0) ** gap * np.exp(-1j * gap * theta))
    return np.exp(log_mag) * scipy.special.eval_genlaguerre(low, gap, x) * phase


DISPLACEMENT_METHODS = {'expm': _displacement_expm, 'exact': _displacement_exact}


def displacement_matrix(z, d, method='expm'):
    """D(z) = exp(a* z - z* a) on the truncated space.

    ``expm`` exponentiates the truncated generator (unitary, faithful for
    |z|^2 well below d); ``exact`` returns the matrix elements of the
    untruncated operator.
    """
    try:
        build = DISPLACEMENT_METHODS[method]
    except KeyError:
        raise InvalidInputError(f'unknown displacement method {method!r}; use one of {sorted(DISPLACEMENT_METHODS)}')
    z = _as_modes(z)
    leakage = poisson_tail(z, d)
    _warn_leakage('displacement', leakage)
    return FockOperator(z.size, d, _kron_all([build(alpha, d) for alpha in z]), leakage)


def weyl_residual(z, w, d, method='exact'):
    """Spectral norm of D(z)D(w) - exp(-i Im z*w) D(z + w) on columns with every n_k < d/4.

    With the exact compression the residual is the part of D(w)|n> above the
    cutoff carried back by D(z), so it vanishes as d grows. The truncated
    ``expm`` generator is only faithful for |z + w|^2 well below d.
    """
    z, w = _as_modes(z), _as_modes(w)
    product = displacement_matrix(z, d, method).matrix @ displacement_matrix(w, d, method).matrix
    combined = np.exp(-1j * np.vdot(z, w).imag) * displacement_matrix(z + w, d, method).matrix
    low = np.all(_occupations(z.size, d) < max(1, d // 4), axis=1)
    return float(np.linalg.norm((product - combined)[:, low], ord=2))


def _fock_amplitudes(z, d):
    """Rows z^n / sqrt(n!) (tensor over modes) for every column of ``z`` (shape s x points)."""
    z = np.atleast_2d(z)
    result = None
    for row in z:
        amp = np.ones((row.size, d), dtype=complex)
        for level in range(1, d):
            amp[:, level] = amp[:, level - 1] * row / np.sqrt(level)
        result = amp if result is None else (result[:, :, None] * amp[:, None, :]).reshape(row.size, -1)
    return result


def coherent_state(z, d):
    """Truncated tensor product of coherent states; leakage above TRUNC_TOL is logged."""
    z = _as_modes(z)
    vector = np.exp(-np.vdot(z, z).real / 2) * _fock_amplitudes(z[:, None], d)[0]
    _warn_leakage('coherent state', 1.0 - np.vdot(vector, vector).real)
    return vector


def _thermal_diag(values, d):
    levels = np.arange(d)
    factors = [(lam / (lam + 1)) ** levels / (lam + 1) for lam in values]
    return _kron_all(factors) if len(factors) > 1 else factors[0]


def _is_diagonal(matrix):
    off = matrix.entries - np.diag(np.diag(matrix.entries))
    return bool(np.max(np.abs(off)) <= conf.get('HERMITIAN_TOL'))


def gaussian_state_fock(cov, d=None, method='eigenproduct', order=None):
    """Truncated rho_Lambda, at the configured default cutoff when ``d`` is None.

    ``eigenproduct`` is the thermal product for diagonal Lambda. ``p_quadrature``
    integrates the P-representation with tensor Gauss-Hermite nodes after the
    substitution z = (Lambda^-1 + I)^-1/2 u; it is exact once the order reaches
    s(d - 1) + 1.
    """
    cov = cov.require_psd('cov')
    s = cov.dim
    d = d or conf.default_cutoff(s)
    if method == 'eigenproduct':
        if not _is_diagonal(cov):
            raise InvalidInputError('eigenproduct needs a covariance diagonal in the mode basis; use p_quadrature',
                                    field='method')
        matrix = np.diag(_thermal_diag(np.real(np.diag(cov.entries)), d)).astype(complex)
    elif method == 'p_quadrature':
        matrix = _p_quadrature(cov.require_nondegenerate('cov'), d, order or conf.get('QUADRATURE_ORDER'))
    else:
        raise InvalidInputError(f'unknown method {method!r}; use eigenproduct or p_quadrature', field='method')
    leakage = float(1.0 - np.trace(matrix).real)
    _warn_leakage('gaussian state', leakage)
    return FockOperator(s, d, matrix, leakage)


def _p_quadrature(cov, d, order, chunk=20000):
    s = cov.dim
    if order < s * (d - 1) + 1:
        logger.warning('quadrature order %d is below s(d-1)+1 = %d; the result is not exact', order, s * (d - 1) + 1)
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    b = cov.apply(lambda w: 1.0 / np.sqrt(1.0 / w + 1.0)).entries
    shape = (order,) * (2 * s)
    total = order ** (2 * s)
    rho = np.zeros((d ** s, d ** s), dtype=complex)
    for start in range(0, total, chunk):
        index = np.unravel_index(np.arange(start, min(total, start + chunk)), shape)
        u = np.stack([nodes[index[2 * k]] + 1j * nodes[index[2 * k + 1]] for k in range(s)])
        weight = np.prod(np.stack([weights[axis] for axis in index]), axis=0)
        psi = _fock_amplitudes(b @ u, d)
        rho += (psi.T * weight) @ psi.conj()
    return rho / (np.pi ** s * np.linalg.det(cov.entries + np.eye(s)).real)


def displaced_thermal_fock(cov, z, d):
    """rho_{Lambda, z} = D(z) rho_Lambda D(z)* with the exact displacement compression."""
    matrix = _displace(_noise_state(cov, d).matrix, _as_modes(z), d)
    leakage = float(1.0 - np.trace(matrix).real)
    _warn_leakage('displaced gaussian state', leakage)
    return FockOperator(cov.dim, d, matrix, leakage)


def _displace(matrix, point, d):
    shift = _kron_all([_displacement_exact(alpha, d) for alpha in point])
    return shift @ matrix @ shift.conj().T


def _pinv_sqrt(matrix, rtol):
    w, v = scipy.linalg.eigh(matrix)
    w = np.clip(w, 0.0, None)
    keep = w > rtol * w[-1]
    inv_root = np.where(keep, 1.0 / np.sqrt(np.where(keep, w, 1.0)), 0.0)
    return (v * inv_root) @ v.conj().T


def inv_sqrt_coherent(cov, z, d, pinv_rtol=0.0):
    """rho_Lambda^-1/2 |z> computed numerically and from the closed form.

    The closed form is sqrt(det(Lambda + I)) exp(z* Lambda^-1 z / 2) |sqrt(I + Lambda^-1) z>.
    A non-diagonal Lambda is handled in its eigenbasis, where z becomes U* z.
    Returns (numeric, analytic, deviation).
    """
    cov = cov.require_nondegenerate('cov')
    z = _as_modes(z)
    if _is_diagonal(cov):
        lam, zeta = np.real(np.diag(cov.entries)), z
    else:
        lam, vectors = cov.eigh()
        zeta = vectors.conj().T @ z
    state = np.diag(_thermal_diag(lam, d)).astype(complex)
    numeric = _pinv_sqrt(state, pinv_rtol) @ coherent_state(zeta, d)
    prefactor = np.sqrt(np.prod(lam + 1.0)) * np.exp(np.sum(np.abs(zeta) ** 2 / lam) / 2)
    analytic = prefactor * coherent_state(np.sqrt(1.0 + 1.0 / lam) * zeta, d)
    deviation = float(np.linalg.norm(numeric - analytic) / np.linalg.norm(analytic))
    return numeric, analytic, deviation


def _noise_state(noise, d):
    if _is_diagonal(noise):
        return gaussian_state_fock(noise, d, 'eigenproduct')
    return gaussian_state_fock(noise, d, 'p_quadrature')


def discretize_povm(obs, grid, d):
    """Elements D(K z_i) rho_N D(K z_i)* |det K|^2 with weights h^2s / pi^s."""
    if grid.modes != obs.dim:
        raise InvalidInputError(f'grid has {grid.modes} modes, observable {obs.dim}')
    noise = _noise_state(obs.noise, d).matrix
    scale = np.exp(2 * obs.log_abs_det)
    shifted = grid.points() @ obs.rescale.T
    elements = np.empty((shifted.shape[0], d ** obs.dim, d ** obs.dim), dtype=complex)
    for index, point in enumerate(shifted):
        shift = _kron_all([_displacement_exact(alpha, d) for alpha in point])
        elements[index] = scale * shift @ noise @ shift.conj().T
    povm = DiscretePOVM(elements, np.full(shifted.shape[0], grid.cell_weight))
    logger.debug('discretised POVM: %d cells, completeness defect %.3e', len(povm), povm.completeness_defect())
    return povm


def completeness_defect(povm, modes, d, max_level):
    """Frobenius norm of sum m_i mu_i - I on the span of levels with every n_k <= max_level."""
    low = np.all(_occupations(modes, d) <= max_level, axis=1)
    block = (povm.total() - np.eye(povm.dim))[np.ix_(low, low)]
    return float(np.linalg.norm(block))


@dataclass(frozen=True, eq=False)
class FockOutput:
    probs: np.ndarray
    weights: np.ndarray

    @property
    def total_mass(self):
        return float(self.probs.sum())

    @property
    def densities(self):
        """Per-cell mu-density estimates q_i / mu_i."""
        return self.probs / self.weights


def fock_output_distribution(rho, povm):
    """q_i = Tr(rho m_i) mu_i, clipped at 0."""
    matrix = rho.matrix if isinstance(rho, FockOperator) else np.asarray(rho)
    if matrix.shape[0] != povm.dim:
        raise InvalidInputError(f'state dimension {matrix.shape[0]} differs from POVM dimension {povm.dim}')
    probs = np.real(np.einsum('ab,jba->j', matrix, povm.elements)) * povm.weights
    negative = float(-np.min(probs, initial=0.0))
    if negative > conf.get('JOINT_CLIP'):
        logger.debug('clipping negative cell probabilities down to %.3e', -negative)
    return FockOutput(np.clip(probs, 0.0, None), povm.weights)


def output_entropy_discrete(output):
    """-sum_i q_i log(q_i / mu_i): mu-relative entropy of a discretised output law."""
    return float(-np.sum(scipy.special.rel_entr(output.probs, output.weights)))


def grid_displacements(grid, d):
    """Exact displacement matrices D(w_i) for every grid point, shape (points, d^s, d^s)."""
    return np.stack([_kron_all([_displacement_exact(alpha, d) for alpha in point]) for point in grid.points()])


def characteristic_values(rho, grid, displacements=None):
    """Tr rho D(w) on every grid point (exact displacement)."""
    displacements = grid_displacements(grid, rho.cutoff) if displacements is None else displacements
    return np.einsum('ab,iba->i', rho.matrix, displacements)


def parseval_check(rho, sigma, grid, displacements=None):
    """Tr rho sigma* against the quadrature of chi_rho conj(chi_sigma) over the grid."""
    displacements = grid_displacements(grid, rho.cutoff) if displacements is None else displacements
    lhs = complex(np.trace(rho.matrix @ sigma.matrix.conj().T))
    rhs = complex(np.sum(characteristic_values(rho, grid, displacements)
                         * np.conj(characteristic_values(sigma, grid, displacements))) * grid.cell_weight)
    residual = abs(lhs - rhs) / max(1.0, abs(lhs))
    return lhs.real, rhs.real, float(residual)


def gauge_average(rho, n_phases=None):
    """Average of U_phi* rho U_phi over phi = 2 pi k / n_phases, U_phi = exp(i phi N_total)."""
    n_phases = rho.modes * (rho.cutoff - 1) + 1 if n_phases is None else n_phases
    if n_phases < 2:
        raise InvalidInputError('gauge average needs at least two phases', field='n_phases')
    total = _occupations(rho.modes, rho.cutoff).sum(axis=1)
    gap = total[:, None] - total[None, :]
    phases = 2 * np.pi * np.arange(n_phases) / n_phases
    factor = np.mean(np.exp(-1j * gap[:, :, None] * phases), axis=2)
    return FockOperator(rho.modes, rho.cutoff, rho.matrix * factor, rho.leakage)


def total_number(modes, d):
    return np.diag(_occupations(modes, d).sum(axis=1)).astype(complex)


def covariance_of(rho):
    """Complex covariance [Tr a_j rho a_k*]_jk (no offsets)."""
    ladders = [op.matrix for op in ladder_operators(rho.modes, rho.cutoff)]
    entries = np.array([[np.trace(a_j @ rho.matrix @ a_k.conj().T) for a_k in ladders] for a_j in ladders])
    return hermitian(entries)


def max_entropy_check(rho, obs, grid, povm=None):
    """Discrete output entropy of ``rho`` against the Gaussian bound at its covariance."""
    povm = discretize_povm(obs, grid, rho.cutoff) if povm is None else povm
    output = fock_output_distribution(rho, povm)
    bound = output_entropy(GaussianState(covariance_of(rho)), obs)
    discrete = output_entropy_discrete(output)
    return {
        'discrete_entropy': discrete,
        'analytic_bound': bound,
        'gap': bound - discrete,
        'total_mass': output.total_mass,
    }


def dual_closure_check(ens, d, prior_grid=None, outcome_grid=None, levels=3, completeness_tol=5e-2,
                       reference_cutoff=None):
    """Finite dual of a discretised Gaussian ensemble against the analytic dual observable.

    The ensemble becomes states rho_{N, z_i} on ``prior_grid`` with weights
    proportional to exp(-z* Sigma^-1 z); ideal heterodyne is discretised on
    ``outcome_grid``. The finite dual POVM's statistics on the Fock states
    |n>, n < levels, are compared (total variation) with the analytic dual
    (K, N~) integrated over the same prior cells.
    """
    s = ens.dim
    prior_grid = prior_grid or OutcomeGrid(s, 4.0, 0.25)
    outcome_grid = outcome_grid or OutcomeGrid(s, 6.0, 0.25)
    reference_cutoff = reference_cutoff or d + 40
    ens.require_nondegenerate()

    points = prior_grid.points()
    sigma_inv = ens.prior_cov.inv().entries
    log_prior = -np.real(np.einsum('ia,ab,ib->i', points.conj(), sigma_inv, points))
    probs = np.exp(log_prior - log_prior.max())
    probs /= probs.sum()
    noise = _noise_state(ens.state_noise, d).matrix
    states = []
    for point in points:
        # states displaced far out lose mass above the cutoff; renormalise them
        state = _displace(noise, point, d)
        states.append(state / np.trace(state).real)
    finite_ens = DiscreteEnsemble(probs, states)
    heterodyne = discretize_povm(GaussianObservable.heterodyne(s), outcome_grid, d)
    pair = dual_pair_finite(finite_ens, heterodyne, completeness_tol=completeness_tol)

    dual = dual_gaussian_observable(ens)
    analytic = discretize_povm(dual.observable, prior_grid, reference_cutoff)
    distances = []
    for level in range(levels):
        target = (level,) + (0,) * (s - 1)
        index = int(np.ravel_multi_index(target, (d,) * s))
        ref_index = int(np.ravel_multi_index(target, (reference_cutoff,) * s))
        finite = np.real(pair.povm.elements[:, index, index])
        reference = np.real(analytic.elements[:, ref_index, ref_index]) * analytic.weights
        distances.append(float(0.5 * np.sum(np.abs(finite - reference))))
    return {
        'tv_distance': distances,
        'max_tv_distance': max(distances),
        'heterodyne_completeness_defect': pair.diagnostics.completeness_defect,
        'dual_completeness_defect': pair.diagnostics.dual_completeness_defect,
        'rescale': dual.rescale,
        'dual_noise': dual.dual_noise.entries,
    }
