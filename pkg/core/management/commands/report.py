from core.management.commands._base import LabCommand


class Command(LabCommand):
    help = 'Render the summary of an existing run'
    command_name = 'report'
