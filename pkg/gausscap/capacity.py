"""Closed-form chi-capacity of Gaussian observables and accessible information of Gaussian ensembles."""
from dataclasses import dataclass

import numpy as np

from .gauss_core import GaussianObservable, HermitianMatrix, diff_entropy_gaussian

COHERENT_GAUSSIAN = 'coherent-state-gaussian'


@dataclass(frozen=True)
class ChiCapacityResult:
    value: float
    optimal_prior_cov: HermitianMatrix
    max_output_entropy: float
    min_output_entropy: float
    optimal_ensemble: str = COHERENT_GAUSSIAN

    def to_json(self):
        return {
            'capacity_nats': self.value,
            'optimal_prior_cov': self.optimal_prior_cov.to_json(),
            'optimal_ensemble': self.optimal_ensemble,
            'max_output_entropy_nats': self.max_output_entropy,
            'min_output_entropy_nats': self.min_output_entropy,
        }


@dataclass(frozen=True)
class AccessibleInformationResult:
    value: float
    optimal_observable: GaussianObservable
    # chi-capacity of the dual observable at Sigma + N; equals value
    dual_bound: float = None
    # any invertible K with zero noise attains the value
    optimal_family: str = 'rescaled-heterodyne: (K, 0) for every invertible K'

    def to_json(self):
        return {
            'accessible_information_nats': self.value,
            'dual_bound_nats': self.dual_bound,
            'optimal_observable': self.optimal_observable.to_json(),
            'optimal_family': self.optimal_family,
        }


def gain_spectrum(noise, signal):
    """Eigenvalues of the Hermitian form I + B signal B, B = (noise + I)^-1/2, similar to I + (noise + I)^-1 signal."""
    dim = noise.dim
    b = (noise + np.eye(dim)).inv_sqrt().entries
    return HermitianMatrix(np.eye(dim) + b @ signal.entries @ b).eigvalsh()


def log_det_gain(noise, signal):
    """log det(I + (noise + I)^-1 signal)."""
    return float(np.sum(np.log(gain_spectrum(noise, signal))))


def min_output_entropy(obs):
    """Minimal output entropy, attained on the vacuum: s + log det(N + I) - 2 log |det K|."""
    return diff_entropy_gaussian(obs.noise + np.eye(obs.dim)) - 2 * obs.log_abs_det


def max_output_entropy(obs, input_cov):
    """Maximal output entropy over states with covariance Sigma, attained on rho_Sigma."""
    return diff_entropy_gaussian(input_cov + obs.noise + np.eye(obs.dim)) - 2 * obs.log_abs_det


def chi_capacity(obs, input_cov):
    """chi-capacity log det(I + (N + I)^-1 Sigma); the value does not depend on K."""
    input_cov = input_cov.require_psd('input_cov')
    return ChiCapacityResult(
        value=log_det_gain(obs.noise, input_cov),
        optimal_prior_cov=input_cov,
        max_output_entropy=max_output_entropy(obs, input_cov),
        min_output_entropy=min_output_entropy(obs),
    )


def gaussian_ensemble_information(ens, obs):
    """Shannon information log det(Sigma + N_e + N_m + I) - log det(N_e + N_m + I)."""
    return log_det_gain(ens.state_noise + obs.noise, ens.prior_cov)


def accessible_information(ens):
    """Accessible information of a nondegenerate Gaussian ensemble (attained by heterodyne)."""
    from .duality import dual_gaussian_observable

    ens.require_nondegenerate()
    dual = dual_gaussian_observable(ens)
    return AccessibleInformationResult(
        value=log_det_gain(ens.state_noise, ens.prior_cov),
        optimal_observable=GaussianObservable.heterodyne(ens.dim),
        dual_bound=log_det_gain(dual.dual_noise, dual.sigma_tilde),
    )
