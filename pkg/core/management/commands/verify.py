from core.management.commands._base import LabCommand


class Command(LabCommand):
    help = 'Check sub/super-solutions, sandwich, comparison principle and ODE statements'
    command_name = 'verify'
