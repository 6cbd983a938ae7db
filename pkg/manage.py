#!/usr/bin/env python
"""Command-line entry point of the gausscap toolkit."""
import os
import sys

EXIT_INVALID_INPUT = 2


def main():
    """Run a toolkit subcommand (or any Django administrative task)."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'gausscap_project.settings')
    try:
        from django.core.management import execute_from_command_line, get_commands
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc

    if len(sys.argv) > 1 and not sys.argv[1].startswith('-'):
        import django
        django.setup()
        from gausscap.runner import VALID_COMMANDS

        if sys.argv[1] not in get_commands():
            sys.stderr.write(
                f"Unknown command: {sys.argv[1]!r}. Valid commands: {', '.join(VALID_COMMANDS)}\n"
            )
            sys.exit(EXIT_INVALID_INPUT)
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
