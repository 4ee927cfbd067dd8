import sys

from django.core.management.base import BaseCommand

from core.cli import add_command_arguments, execute


class LabCommand(BaseCommand):
    """manage.py front end of one laboratory subcommand"""

    command_name = ''

    def add_arguments(self, parser):
        add_command_arguments(self.command_name, parser)

    def handle(self, *args, **options):
        code = execute(self.command_name, options, out=self.stdout, err=self.stderr)
        if code:
            sys.exit(code)
