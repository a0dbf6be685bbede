import logging

from django.core.management.base import BaseCommand, CommandError

from hali import conf, constants
from hali.exceptions import HaliError, InvalidConfigError
from hali.io import read_config_file
from hali.tfa import DecompositionParams


__all__ = ["HaliCommand", "snr_value", "float_list", "snr_list", "text_list", "positive_int"]

logger = logging.getLogger(__name__)

VERBOSITY_LEVELS = {0: logging.ERROR, 1: logging.WARNING, 2: logging.INFO, 3: logging.DEBUG}

# Options every Django command carries; they never come from a config file
BASE_OPTIONS = {
    "help", "version", "verbosity", "settings", "pythonpath", "traceback",
    "no_color", "force_color", "skip_checks", "config",
}

TRUE_VALUES = {"1", "true", "yes", "on"}
FALSE_VALUES = {"0", "false", "no", "off"}


def snr_value(value):
    if str(value).strip().lower() in ("none", "inf", "noiseless", ""):
        return None
    return float(value)


def float_list(value):
    return tuple(float(item) for item in str(value).split(",") if item.strip())


def snr_list(value):
    return tuple(snr_value(item) for item in str(value).split(","))


def text_list(value):
    return tuple(item.strip() for item in str(value).split(",") if item.strip())


def positive_int(value):
    number = int(value)
    if number < 1:
        raise ValueError("expected a positive integer")
    return number


class HaliCommand(BaseCommand):
    """Base for the ``hali`` commands.

    Options left unset on the command line are taken from ``--config`` and
    then from ``defaults``. Domain errors leave as ``CommandError`` carrying
    the exit code of the error class.
    """

    requires_system_checks = []
    operation = None
    defaults = {}

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.add_argument("--config", help="Flat 'key = value' file; command-line flags take precedence")
        self.option_actions = {
            action.dest: action for action in parser._actions if action.dest not in BASE_OPTIONS
        }
        return parser

    def convert(self, key, raw):
        action = self.option_actions[key]
        if action.nargs == 0:
            lowered = raw.lower()
            if lowered not in TRUE_VALUES | FALSE_VALUES:
                raise InvalidConfigError("Config key {!r} expects a boolean, got {!r}".format(key, raw))
            return lowered in TRUE_VALUES
        try:
            value = action.type(raw) if action.type else raw
        except (TypeError, ValueError) as exc:
            raise InvalidConfigError("Config key {!r} has an invalid value {!r}: {}".format(key, raw, exc))
        if action.choices is not None and value not in action.choices:
            raise InvalidConfigError("Config key {!r} must be one of {}".format(key, list(action.choices)))
        return value

    def merge_options(self, options):
        merged = dict(self.defaults)
        if options.get("config"):
            for key, raw in read_config_file(options["config"]).items():
                if key not in self.option_actions:
                    raise InvalidConfigError("Unknown config key {!r}".format(key))
                merged[key] = self.convert(key, raw)
        for key, value in options.items():
            if value is not None and value is not False:
                merged[key] = value
            else:
                merged.setdefault(key, value)
        return merged

    def execute(self, *args, **options):
        self.verbosity = options.get("verbosity", 1)
        level = VERBOSITY_LEVELS.get(self.verbosity, logging.DEBUG)
        logging.getLogger("hali").setLevel(level)
        return super().execute(*args, **options)

    def handle(self, *args, **options):
        try:
            options = self.merge_options(options)
            return self.run(**options)
        except HaliError as exc:
            raise CommandError("{} failed: {}".format(self.operation or "hali", exc), returncode=exc.exit_code)

    def run(self, **options):
        raise NotImplementedError

    def add_decomposition_arguments(self, parser):
        parser.add_argument("--components", type=positive_int, help="Number of oscillatory components K")
        parser.add_argument("--window-cycles", type=float, help="Cycles inside the STFT window")
        parser.add_argument("--bins", type=positive_int, help="One-sided frequency bins")
        parser.add_argument("--criterion", choices=constants.CRITERIA, help="Harmonic degree criterion")

    def decomposition_params(self, options):
        return DecompositionParams(
            cycles_in_window=options.get("window_cycles") or conf.HALI_WINDOW_CYCLES,
            n_bins=options.get("bins") or conf.HALI_FREQUENCY_BINS,
            gamma=conf.HALI_DESHAPE_GAMMA,
            criterion=options.get("criterion") or conf.HALI_DEGREE_CRITERION,
        ).validate()

    def report(self, message):
        if self.verbosity:
            self.stdout.write(message)
