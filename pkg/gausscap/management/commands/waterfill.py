from gausscap.management.base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'Energy-constrained capacity: water-filling for diagonal inputs, projected ascent otherwise'
    command_name = 'waterfill'
