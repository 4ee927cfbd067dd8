from core.management.commands._base import LabCommand


class Command(LabCommand):
    help = 'Simulate, track fronts and compare speeds with the predicted regime'
    command_name = 'track'
