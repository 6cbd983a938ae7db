from gausscap.management.base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'chi-capacity of a Gaussian observable (and accessible information when state_noise is given)'
    command_name = 'capacity'
