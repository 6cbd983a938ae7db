"""Monte Carlo sampling of (input, outcome) pairs and a plug-in mutual information estimate.

Complex normals have independent N(0, 1/2) real and imaginary parts, so a
draw with covariance C satisfies E z z* = C. Sampling is split into shards
seeded from ``SeedSequence(seed).spawn`` with a Philox generator each; shards
are merged in index order, so a (seed, shards) pair always reproduces the same draws.
"""
import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import conf
from .errors import InvalidInputError
from .gauss_core import GaussianState, log_output_density

logger = logging.getLogger(__name__)

MIN_MI_SAMPLES = 100


@dataclass(frozen=True, eq=False)
class SamplePair:
    input: np.ndarray
    outcome: np.ndarray


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    n_samples: int
    seed: int

    def to_json(self):
        return {
            'value_nats': self.value,
            'stderr_nats': self.stderr,
            'n': self.n_samples,
            'seed': self.seed,
        }


def _factor(cov):
    """F with F F* = cov: Cholesky when positive definite, otherwise the eigen square root."""
    try:
        return scipy.linalg.cholesky(cov.entries, lower=True)
    except np.linalg.LinAlgError:
        w, v = cov.eigh()
        return v * np.sqrt(np.clip(w, 0.0, None))


def standard_complex_normal(rng, size):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def _shard(ens, obs, count, seed_seq):
    rng = np.random.Generator(np.random.Philox(seed_seq))
    dim = ens.dim
    prior = _factor(ens.prior_cov)
    spread = _factor(ens.state_noise + obs.noise + np.eye(dim))
    inputs = standard_complex_normal(rng, (count, dim)) @ prior.T
    shifted = inputs + standard_complex_normal(rng, (count, dim)) @ spread.T
    outcomes = np.linalg.solve(obs.rescale, shifted.T).T
    return inputs, outcomes


def _resolve_seed(seed):
    if seed is None:
        seed = np.random.SeedSequence().entropy
        logger.info('no seed given; drew %d', seed)
    return int(seed)


def sample_arrays(ens, obs, n, seed=None, shards=None):
    """Inputs z ~ CN(0, Sigma) and outcomes w = K^-1 u, u ~ CN(z, N_e + N_m + I), as (n, s) arrays."""
    if n < 1:
        raise InvalidInputError('number of samples must be at least 1', field='n')
    if ens.dim != obs.dim:
        raise InvalidInputError(f'ensemble has {ens.dim} modes but the observable has {obs.dim}')
    seed = _resolve_seed(seed)
    shards = max(1, min(n, shards or conf.get('MC_SHARDS')))
    counts = [len(part) for part in np.array_split(np.arange(n), shards)]
    seeds = np.random.SeedSequence(seed).spawn(shards)
    if shards == 1:
        parts = [_shard(ens, obs, counts[0], seeds[0])]
    else:
        with ThreadPoolExecutor(max_workers=shards) as executor:
            parts = list(executor.map(lambda args: _shard(ens, obs, *args), zip(counts, seeds)))
    inputs = np.concatenate([part[0] for part in parts])
    outcomes = np.concatenate([part[1] for part in parts])
    return inputs, outcomes, seed


def sample_pairs(ens, obs, n, seed=None, shards=None):
    inputs, outcomes, _ = sample_arrays(ens, obs, n, seed, shards)
    return [SamplePair(z, w) for z, w in zip(inputs, outcomes)]


def information_density(ens, obs, inputs, outcomes):
    """log p(w | z) - log p_marginal(w) for every sampled pair."""
    # p(w | z) depends on K w - z only, so shift the outcome by K^-1 z
    shifted = outcomes - np.linalg.solve(obs.rescale, inputs.T).T
    conditional = log_output_density(GaussianState(ens.state_noise), obs, shifted)
    marginal = log_output_density(GaussianState(ens.prior_cov + ens.state_noise), obs, outcomes)
    return np.atleast_1d(conditional - marginal)


def mi_monte_carlo(ens, obs, n, seed=None, shards=None):
    if n < MIN_MI_SAMPLES:
        raise InvalidInputError(f'the estimator needs at least {MIN_MI_SAMPLES} samples', field='n')
    inputs, outcomes, seed = sample_arrays(ens, obs, n, seed, shards)
    values = information_density(ens, obs, inputs, outcomes)
    stderr = float(np.std(values, ddof=1) / np.sqrt(n))
    return MCEstimate(float(np.mean(values)), stderr, int(n), seed)


def pairs_to_csv(pairs, path):
    """Write pairs with one column per real and imaginary component."""
    if not pairs:
        raise InvalidInputError('no pairs to write')
    dim = pairs[0].input.size
    header = [f'{name}_{part}_{k + 1}' for name in ('input', 'outcome') for k in range(dim) for part in ('re', 'im')]
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for pair in pairs:
            row = []
            for vector in (pair.input, pair.outcome):
                for value in vector:
                    row.extend([repr(float(value.real)), repr(float(value.imag))])
            writer.writerow(row)
    return path
