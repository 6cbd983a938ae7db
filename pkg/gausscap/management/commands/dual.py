from gausscap.management.base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'Dual Gaussian observable (K, dual noise) of a Gaussian ensemble and the determinant identity'
    command_name = 'dual'
