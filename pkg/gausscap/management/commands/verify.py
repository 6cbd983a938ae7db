from gausscap.management.base import ToolkitCommand
from gausscap.verification import SUITE_NAMES


class Command(ToolkitCommand):
    help = 'Run verification suites and report {check_name, residual, threshold, pass} for every check'
    command_name = 'verify'
    takes_input = False

    def add_command_arguments(self, parser):
        parser.add_argument('--suite', default='all', choices=SUITE_NAMES)
        parser.add_argument('--n', type=int, help='number of random instances (suite default when omitted)')
        parser.add_argument('--record', action='store_true', help='store the run and its checks in the database')
        parser.add_argument('--pdf', help='write a PDF report (plain text if ReportLab is unavailable)')

    def command_options(self, options):
        return {'suite': options['suite'], 'n': options['n'], 'record': options['record'], 'pdf': options['pdf']}
