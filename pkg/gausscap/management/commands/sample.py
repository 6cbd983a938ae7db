from gausscap.management.base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'Sample (input, outcome) pairs of a Gaussian ensemble measured by a Gaussian observable'
    command_name = 'sample'

    def add_command_arguments(self, parser):
        parser.add_argument('--csv', help='write the pairs to this CSV file instead of the JSON document')

    def command_options(self, options):
        return {'csv': options['csv']}
