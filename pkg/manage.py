#!/usr/bin/env python
"""manage.py simulate | wave | classify | track | verify | sweep | report"""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lv_lab.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install requirements.txt into the active "
            "environment before running laboratory commands."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
