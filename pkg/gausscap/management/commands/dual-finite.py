from gausscap.management.base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'Dual pair of a finite ensemble and a finite POVM'
    command_name = 'dual-finite'
