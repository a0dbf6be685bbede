"""``hali`` console entry point running the management commands without a project."""
import sys

import django
from django.conf import settings
from django.core.management import load_command_class
from django.core.management.base import CommandError

from hali.constants import EXIT_INVALID_INPUT, EXIT_OK


COMMANDS = ("synth", "impute", "decompose", "bench")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "stderr": {
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
            "formatter": "plain",
        },
    },
    "loggers": {
        "hali": {"handlers": ["stderr"], "level": "WARNING", "propagate": False},
    },
}

USAGE = """usage: hali <subcommand> [options]

subcommands:
  synth      generate a synthetic signal, its masked copy and the gap list
  impute     impute the NaN gaps of a CSV signal
  decompose  write harmonic amplitudes, phases and trend of a complete signal
  bench      run the synthetic benchmark

Run 'hali <subcommand> --help' for the options of a subcommand.
"""


def configure():
    if not settings.configured:
        settings.configure(INSTALLED_APPS=["hali"], LOGGING=LOGGING, USE_TZ=True)
    django.setup()


def run_cli(argv=None):
    """Run one subcommand and return its exit code instead of exiting."""
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        sys.stdout.write(USAGE)
        return EXIT_OK if argv else EXIT_INVALID_INPUT
    name = argv[0]
    if name not in COMMANDS:
        sys.stderr.write("Unknown subcommand {!r}\n\n{}".format(name, USAGE))
        return EXIT_INVALID_INPUT

    configure()
    command = load_command_class("hali", name)
    try:
        parser = command.create_parser("hali", name)
        options = vars(parser.parse_args(argv[1:]))
        args = options.pop("args", ())
        command.execute(*args, **options)
    except CommandError as exc:
        message = str(exc)
        sys.stderr.write("{}\n".format(message if message.startswith("Error") else "Error: " + message))
        return exc.returncode
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    return EXIT_OK


def main():
    sys.exit(run_cli())
