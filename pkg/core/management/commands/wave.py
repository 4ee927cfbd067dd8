from core.management.commands._base import LabCommand


class Command(LabCommand):
    help = 'Compute the minimal speed c* and its traveling-wave profile'
    command_name = 'wave'
