#!/usr/bin/env python
"""python -m lv_lab <command> [flags]: the laboratory CLI without manage.py"""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lv_lab.settings')
    try:
        import django
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable?"
        ) from exc
    django.setup()

    from core.cli import run_cli
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == '__main__':
    main()
