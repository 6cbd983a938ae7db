import sys

from django.core.management.base import BaseCommand, CommandError

from gausscap.codec import dumps
from gausscap.errors import EXIT_OK
from gausscap.runner import VALID_UNITS, RunConfig, run


def parse_tolerance(text):
    name, sep, value = text.partition('=')
    if not sep:
        raise CommandError(f'--tol expects NAME=VALUE, got {text!r}', returncode=2)
    return name.strip().upper(), value.strip()


class ToolkitCommand(BaseCommand):
    """Shared options and JSON output of the toolkit commands."""

    command_name = None
    takes_input = True

    def add_arguments(self, parser):
        if self.takes_input:
            parser.add_argument('--input', help='input document: a JSON file path or inline JSON')
        parser.add_argument('--output', help='write the result document to this path instead of stdout')
        parser.add_argument('--units', choices=VALID_UNITS, help='information units of the result (default nats)')
        parser.add_argument('--seed', type=int, help='random seed')
        parser.add_argument('--tol', action='append', default=[], type=parse_tolerance, metavar='NAME=VALUE',
                            help='override a numerical tolerance for this run (repeatable)')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def command_options(self, options):
        return {}

    def handle(self, *args, **options):
        config = RunConfig(
            command=self.command_name,
            input=options.get('input'),
            output_path=options['output'],
            units=options['units'],
            seed=options['seed'],
            tolerances=dict(options['tol']),
            options=self.command_options(options),
        )
        exit_code, document = run(config)
        if not options['output']:
            self.stdout.write(dumps(document, indent=2))
        if exit_code != EXIT_OK:
            error = document['diagnostics'].get('error', {})
            raise CommandError(error.get('message', f'{self.command_name} failed'), returncode=exit_code)
        if options['output']:
            self.stdout.write(self.style.SUCCESS(f"{self.command_name}: result written to {options['output']}"))
        elif options['verbosity'] > 1:
            sys.stderr.write(self.style.SUCCESS(f'{self.command_name}: done') + '\n')
