"""
Django settings for gausscap_project project.

The project has no web surface: it exists to host the ``gausscap`` app, its
management commands, its verification-report models and the test runner.
"""

from pathlib import Path
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get('GAUSSCAP_SECRET_KEY', 'gausscap-local-only-not-a-secret')

DEBUG = os.environ.get('GAUSSCAP_DEBUG', '0') == '1'

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'gausscap',
]

# Database (verification run history)
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

MEDIA_ROOT = BASE_DIR / 'media'

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(levelname)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'gausscap': {
            'handlers': ['console'],
            'level': os.environ.get('GAUSSCAP_LOG_LEVEL', 'WARNING'),
            'propagate': False,
        },
    },
}

# Numerical tolerances and defaults of the toolkit. Anything missing here falls
# back to the built-in value in gausscap.conf.
GAUSSCAP = {
    'HERMITIAN_TOL': 1e-12,
    'PSD_TOL': 1e-12,
    'MIN_EIG': 1e-10,
    'MIN_DET': 1e-12,
    'PINV_RTOL': 1e-12,
    'TRUNC_TOL': 1e-8,
    'COMPLETENESS_TOL': 1e-10,
    'COMMUTE_TOL': 1e-10,
    'BISECTION_TOL': 1e-12,
    'MAX_ITER': 10000,
    'QUADRATURE_ORDER': 40,
    'REPORT_DIR': MEDIA_ROOT / 'reports',
    'UNITS': 'nats',
}
