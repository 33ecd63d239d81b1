#!/usr/bin/env python
"""Command-line entry point: ``python manage.py multislice run --config CONFIG.json``."""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings.local')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install the project with `poetry install` "
            "and run it through `poetry run` or ./multislice.sh."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
