from core.management.commands._base import LabCommand


class Command(LabCommand):
    help = 'Run one experiment kind over a parameter grid'
    command_name = 'sweep'
