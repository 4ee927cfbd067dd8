from core.management.commands._base import LabCommand


class Command(LabCommand):
    help = 'Evaluate the linear/nonlinear determinacy conditions'
    command_name = 'classify'
