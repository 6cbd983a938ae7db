"""Access to the toolkit's numerical settings.

Values come from ``settings.GAUSSCAP`` when Django is configured and fall back
to the defaults below otherwise, so the numerical modules also work as a plain
library.
"""
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

DEFAULTS = {
    'HERMITIAN_TOL': 1e-12,
    'PSD_TOL': 1e-12,
    'MIN_EIG': 1e-10,
    'MIN_DET': 1e-12,
    'PINV_RTOL': 1e-12,
    'TRUNC_TOL': 1e-8,
    'DENSITY_TOL': 1e-10,
    'PROB_TOL': 1e-12,
    'JOINT_CLIP': 1e-14,
    'COMPLETENESS_TOL': 1e-10,
    'COMMUTE_TOL': 1e-10,
    'BISECTION_TOL': 1e-12,
    'MAX_ITER': 10000,
    'QUADRATURE_ORDER': 40,
    'DEFAULT_CUTOFF': {1: 25, 2: 20},
    'MC_SHARDS': 1,
    'REPORT_DIR': 'media/reports',
    'UNITS': 'nats',
}


def _overrides():
    try:
        return getattr(settings, 'GAUSSCAP', {})
    except ImproperlyConfigured:
        return {}


def get(name):
    """Return the configured value of ``name``."""
    if name not in DEFAULTS:
        raise KeyError(f'Unknown gausscap setting: {name}')
    return _overrides().get(name, DEFAULTS[name])


def default_cutoff(modes):
    """Fock cutoff used when a caller gives none; the largest configured mode count covers the rest."""
    cutoffs = get('DEFAULT_CUTOFF')
    return cutoffs.get(modes, cutoffs[max(cutoffs)])
