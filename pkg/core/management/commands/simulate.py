from core.management.commands._base import LabCommand


class Command(LabCommand):
    help = 'Integrate the system from Scenario A, B or wave initial data'
    command_name = 'simulate'
