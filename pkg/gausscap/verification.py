"""Randomised and closed-form check suites run by the ``verify`` command.

Every check is reported as {check_name, residual, threshold, pass} with
pass meaning residual <= threshold.
"""
import logging

import numpy as np

from . import fock_oracle
from .capacity import accessible_information, chi_capacity, gaussian_ensemble_information
from .duality import (DiscreteEnsemble, DiscretePOVM, dual_gaussian_observable, dual_pair_finite,
                      verify_capacity_identity, verify_dual_pair)
from .gauss_core import GaussianEnsemble, GaussianObservable, GaussianState, HermitianMatrix, output_density
from .mc_sampler import mi_monte_carlo
from .waterfill import (EnergyConstraint, brute_force_constrained, constrained_capacity, grid_search_diagonal,
                        waterfill_diagonal)

logger = logging.getLogger(__name__)


def check(name, residual, threshold):
    residual = float(residual)
    return {'check_name': name, 'residual': residual, 'threshold': threshold, 'pass': bool(residual <= threshold)}


def complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_psd(rng, dim, floor=0.1, scale=1.0):
    a = complex_normal(rng, (dim, dim))
    return HermitianMatrix(scale * (a @ a.conj().T) / dim + floor * np.eye(dim))


def random_unitary(rng, dim):
    q, r = np.linalg.qr(complex_normal(rng, (dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_invertible(rng, dim):
    singular = np.exp(rng.uniform(-1.0, 1.0, dim))
    return random_unitary(rng, dim) @ np.diag(singular) @ random_unitary(rng, dim)


def random_density(rng, dim, mixing=0.05):
    a = complex_normal(rng, (dim, dim))
    rho = a @ a.conj().T + mixing * np.eye(dim)
    return rho / np.trace(rho).real


def random_ensemble(rng, dim, size):
    probs = rng.dirichlet(np.ones(size))
    return DiscreteEnsemble(probs, [random_density(rng, dim) for _ in range(size)])


def random_povm(rng, dim, size):
    raw = []
    for _ in range(size):
        b = complex_normal(rng, (dim, dim))
        raw.append(b @ b.conj().T)
    total = HermitianMatrix(sum(raw)).inv_sqrt().entries
    return DiscretePOVM([total @ g @ total for g in raw])


def _random_gaussian_ensemble(rng, dim):
    return GaussianEnsemble(random_psd(rng, dim), random_psd(rng, dim))


def suite_chu(rng, n):
    worst, similarity = 0.0, 0.0
    for dim in range(1, 5):
        for _ in range(n):
            result = verify_capacity_identity(_random_gaussian_ensemble(rng, dim))
            worst = max(worst, result.residual)
            similarity = max(similarity, result.similarity_residual)
    return [check('chu-determinant-identity', worst, 1e-10), check('chu-similarity-spectrum', similarity, 1e-9)]


def suite_dual_scalar(rng, n):
    ens = GaussianEnsemble(HermitianMatrix([[1.0]]), HermitianMatrix([[1.0]]))
    dual = dual_gaussian_observable(ens)
    identity = verify_capacity_identity(ens)
    return [
        check('dual-scalar-sigma-tilde', abs(dual.sigma_tilde.entries[0, 0] - 2.0), 1e-12),
        check('dual-scalar-noise', abs(dual.dual_noise.entries[0, 0] - 3.0), 1e-12),
        check('dual-scalar-rescale', abs(dual.rescale[0, 0] - np.sqrt(6.0)), 1e-12),
        check('dual-scalar-determinants', max(abs(identity.lhs - 1.5), abs(identity.rhs - 1.5)), 1e-12),
    ]


def suite_consistency(rng, n):
    via_dual, via_heterodyne = 0.0, 0.0
    for _ in range(n):
        ens = _random_gaussian_ensemble(rng, int(rng.integers(1, 5)))
        value = accessible_information(ens).value
        dual = dual_gaussian_observable(ens)
        via_dual = max(via_dual, abs(value - chi_capacity(dual.observable, dual.sigma_tilde).value))
        via_heterodyne = max(via_heterodyne, abs(value - gaussian_ensemble_information(
            ens, GaussianObservable.heterodyne(ens.dim))))
    return [check('accessible-vs-dual-capacity', via_dual, 1e-10),
            check('accessible-vs-heterodyne-information', via_heterodyne, 1e-10)]


def suite_k_invariance(rng, n, rescalings=100):
    capacity_gap, information_gap = 0.0, 0.0
    for _ in range(n):
        dim = int(rng.integers(1, 5))
        ens, noise = _random_gaussian_ensemble(rng, dim), random_psd(rng, dim)
        base = GaussianObservable.heterodyne(dim, noise)
        reference = chi_capacity(base, ens.prior_cov).value
        reference_info = gaussian_ensemble_information(ens, base)
        for _ in range(rescalings):
            obs = GaussianObservable(random_invertible(rng, dim), noise)
            capacity_gap = max(capacity_gap, abs(chi_capacity(obs, ens.prior_cov).value - reference))
            information_gap = max(information_gap, abs(gaussian_ensemble_information(ens, obs) - reference_info))
    return [check('chi-capacity-k-invariance', capacity_gap, 0.0),
            check('ensemble-information-k-invariance', information_gap, 1e-12)]


def suite_waterfill(rng, n):
    example = waterfill_diagonal([1.0, 1.0], [0.0, 0.0], 2.0)
    checks = [check('waterfill-symmetric-example', abs(example.capacity - 2 * np.log(2)), 1e-12)]
    grid_gap, kkt, budget_gap, brute_gap = 0.0, 0.0, 0.0, 0.0
    for _ in range(n):
        freqs, noise, budget = rng.uniform(0.5, 2.0, 2), rng.uniform(0.0, 1.0, 2), rng.uniform(0.5, 3.0)
        result = waterfill_diagonal(freqs, noise, budget)
        grid_value, _ = grid_search_diagonal(freqs, noise, budget)
        grid_gap = max(grid_gap, abs(result.capacity - grid_value))
        kkt = max(kkt, result.kkt_residual)
        budget_gap = max(budget_gap, result.budget_residual)

        constraint = EnergyConstraint(random_psd(rng, 2, floor=0.5), rng.uniform(0.5, 3.0))
        noise_matrix = random_psd(rng, 2, floor=0.0, scale=0.5)
        optimum = constrained_capacity(constraint, noise_matrix)
        brute_value, _ = brute_force_constrained(constraint, noise_matrix)
        brute_gap = max(brute_gap, abs(optimum.capacity - brute_value))
    checks += [
        check('waterfill-vs-grid', grid_gap, 1e-4),
        check('waterfill-kkt', kkt, 1e-9),
        check('waterfill-budget', budget_gap, 1e-9),
        check('constrained-vs-brute-force', brute_gap, 1e-3),
    ]
    return checks


def suite_mc(rng, n, samples=100000):
    misses = 0
    for _ in range(n):
        dim = int(rng.integers(1, 3))
        ens = _random_gaussian_ensemble(rng, dim)
        obs = GaussianObservable(random_invertible(rng, dim), random_psd(rng, dim, floor=0.0, scale=0.5))
        estimate = mi_monte_carlo(ens, obs, samples, seed=int(rng.integers(2 ** 32)))
        if abs(estimate.value - gaussian_ensemble_information(ens, obs)) > 3 * estimate.stderr:
            misses += 1
    return [check('mc-within-three-stderr-miss-rate', misses / n, 0.1)]


def suite_fock_density(rng, n):
    grid = fock_oracle.OutcomeGrid(1, 6.0, 0.25)
    state = GaussianState(HermitianMatrix([[0.5]]))
    obs = GaussianObservable.heterodyne(1, HermitianMatrix([[0.3]]))
    rho = fock_oracle.gaussian_state_fock(state.cov, 25)
    output = fock_oracle.fock_output_distribution(rho, fock_oracle.discretize_povm(obs, grid, 25))
    analytic = output_density(state, obs, grid.points())
    return [check('fock-vs-analytic-output-density', np.max(np.abs(output.densities - analytic)), 1e-5)]


def suite_inv_sqrt(rng, n):
    worst = 0.0
    for lam in (0.5, 1.0, 2.0):
        for _ in range(n):
            z = rng.uniform(0.0, 1.0) * np.exp(2j * np.pi * rng.uniform())
            _, _, deviation = fock_oracle.inv_sqrt_coherent(HermitianMatrix([[lam]]), [z], 40)
            worst = max(worst, deviation)
    _, _, two_mode = fock_oracle.inv_sqrt_coherent(HermitianMatrix.diag([0.5, 2.0]), [0.3, 0.2j], 25)
    return [check('inv-sqrt-single-mode', worst, 1e-8), check('inv-sqrt-two-mode', two_mode, 1e-6)]


def suite_finite_duality(rng, n):
    worst = {'joint': 0.0, 'average_state': 0.0, 'mutual_information': 0.0, 'ide': 0.0, 'completeness': 0.0}
    for _ in range(n):
        dim = int(rng.integers(2, 7))
        ens = random_ensemble(rng, dim, int(rng.integers(1, 7)))
        povm = random_povm(rng, dim, int(rng.integers(1, 7)))
        residuals = verify_dual_pair(ens, povm, dual_pair_finite(ens, povm))
        for key in worst:
            worst[key] = max(worst[key], residuals[key])
    return [
        check('finite-dual-joint-distribution', worst['joint'], 1e-12),
        check('finite-dual-average-state', worst['average_state'], 1e-12),
        check('finite-dual-mutual-information', worst['mutual_information'], 1e-12),
        check('finite-dual-operator-identity', worst['ide'], 1e-12),
        check('finite-dual-completeness', worst['completeness'], 1e-10),
    ]


def random_mixture_state(rng, d, components=3):
    weights = rng.dirichlet(np.ones(components))
    matrix = np.zeros((d, d), dtype=complex)
    for weight in weights:
        z = rng.uniform(0.0, 0.8) * np.exp(2j * np.pi * rng.uniform())
        lam = HermitianMatrix([[rng.uniform(0.0, 0.8)]])
        matrix += weight * fock_oracle.displaced_thermal_fock(lam, [z], d).matrix
    return fock_oracle.FockOperator(1, d, matrix, float(1.0 - np.trace(matrix).real))


def suite_max_entropy(rng, n, d=25):
    obs = GaussianObservable.heterodyne(1, HermitianMatrix([[0.3]]))
    grid = fock_oracle.OutcomeGrid(1, 7.0, 0.25)
    povm = fock_oracle.discretize_povm(obs, grid, d)
    worst = 0.0
    for _ in range(n):
        result = fock_oracle.max_entropy_check(random_mixture_state(rng, d), obs, grid, povm=povm)
        worst = max(worst, -result['gap'])
    return [check('max-entropy-bound', max(worst, 0.0), 1e-2)]


def suite_parseval(rng, n, d=10):
    grid = fock_oracle.OutcomeGrid(1, 8.0, 0.2)
    displacements = fock_oracle.grid_displacements(grid, d)
    worst = 0.0
    for _ in range(n):
        rho = fock_oracle.FockOperator(1, d, random_density(rng, d))
        sigma = fock_oracle.FockOperator(1, d, random_density(rng, d))
        _, _, residual = fock_oracle.parseval_check(rho, sigma, grid, displacements=displacements)
        worst = max(worst, residual)
    return [check('parseval', worst, 1e-3)]


def suite_weyl(rng, n, d=40):
    worst = 0.0
    for _ in range(n):
        z, w = (rng.uniform(0.0, 1.0) * np.exp(2j * np.pi * rng.uniform()) for _ in range(2))
        worst = max(worst, fock_oracle.weyl_residual([z], [w], d))
    return [check('weyl-relation', worst, 1e-8)]


def suite_gauge(rng, n, d=20):
    vector = fock_oracle.coherent_state([1.0], d)
    rho = fock_oracle.FockOperator(1, d, np.outer(vector, vector.conj()))
    averaged = fock_oracle.gauge_average(rho)
    number = fock_oracle.total_number(1, d)
    twice = fock_oracle.gauge_average(averaged)
    return [
        check('gauge-commutes-with-number', np.linalg.norm(averaged.matrix @ number - number @ averaged.matrix), 1e-10),
        check('gauge-idempotent', np.linalg.norm(twice.matrix - averaged.matrix), 1e-12),
        check('gauge-coherent-poissonian', np.linalg.norm(averaged.matrix - np.diag(np.abs(vector) ** 2)), 1e-12),
    ]


def suite_dual_closure(rng, n):
    ens = GaussianEnsemble(HermitianMatrix([[1.0]]), HermitianMatrix([[1.0]]))
    result = fock_oracle.dual_closure_check(ens, 20)
    return [check('dual-closure-total-variation', result['max_tv_distance'], 5e-2)]


SUITES = {
    'chu': (suite_chu, 1000),
    'dual-scalar': (suite_dual_scalar, 1),
    'consistency': (suite_consistency, 500),
    'k-invariance': (suite_k_invariance, 10),
    'waterfill': (suite_waterfill, 10),
    'mc': (suite_mc, 20),
    'fock-density': (suite_fock_density, 1),
    'inv-sqrt': (suite_inv_sqrt, 10),
    'finite-duality': (suite_finite_duality, 200),
    'max-entropy': (suite_max_entropy, 50),
    'parseval': (suite_parseval, 50),
    'weyl': (suite_weyl, 100),
    'gauge': (suite_gauge, 1),
    'dual-closure': (suite_dual_closure, 1),
}
SUITE_NAMES = tuple(SUITES) + ('all',)


def run_suite(name, n=None, seed=None):
    """Run one suite (or ``all``) and return its checks in order."""
    rng = np.random.default_rng(seed)
    names = list(SUITES) if name == 'all' else [name]
    checks = []
    for suite in names:
        func, default_n = SUITES[suite]
        logger.info('running suite %s', suite)
        for item in func(rng, n or default_n):
            checks.append({'suite': suite, **item})
    return checks
