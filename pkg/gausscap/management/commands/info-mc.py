from gausscap.management.base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'Monte Carlo estimate of the Shannon information with its standard error'
    command_name = 'info-mc'
