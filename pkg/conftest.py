"""Pytest wiring for the Django test suite (mirrors what ``manage.py test`` sets up)."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'gausscap_project.settings')
django.setup()

_old_config = None


def pytest_sessionstart(session):
    global _old_config
    from django.test.utils import setup_databases, setup_test_environment

    setup_test_environment()
    _old_config = setup_databases(verbosity=0, interactive=False)


def pytest_sessionfinish(session, exitstatus):
    from django.test.utils import teardown_databases, teardown_test_environment

    if _old_config is not None:
        teardown_databases(_old_config, verbosity=0)
    teardown_test_environment()
