from numbers import Number

from django.core.exceptions import ImproperlyConfigured

from hali import constants


POSITIVE_NUMBERS = (
    "HALI_MIN_GAP",
    "HALI_WINDOW_CYCLES",
    "HALI_FREQUENCY_BINS",
    "HALI_BENCH_WORKERS",
)

INTEGERS = ("HALI_MIN_GAP", "HALI_FREQUENCY_BINS", "HALI_BENCH_WORKERS")


def parse_settings(config):
    """Validate the ``HALI_*`` settings found on ``config``; absent ones keep their defaults."""
    choices = {
        "HALI_DEFAULT_METHOD": constants.INITIAL_METHODS,
        "HALI_DEFAULT_SCHEME": tuple(constants.SCHEME_FLAGS) + constants.SCHEMES,
        "HALI_DEGREE_CRITERION": constants.CRITERIA,
    }
    for attr_name, allowed in choices.items():
        if hasattr(config, attr_name) and getattr(config, attr_name) not in allowed:
            raise ImproperlyConfigured(
                "{} must be one of {}, got {!r}".format(attr_name, allowed, getattr(config, attr_name))
            )

    for attr_name in POSITIVE_NUMBERS:
        if not hasattr(config, attr_name):
            continue
        value = getattr(config, attr_name)
        if isinstance(value, bool) or not isinstance(value, Number) or not value > 0:
            raise ImproperlyConfigured("{} must be a positive number, got {!r}".format(attr_name, value))
        if attr_name in INTEGERS and int(value) != value:
            raise ImproperlyConfigured("{} must be an integer, got {!r}".format(attr_name, value))

    gamma = getattr(config, "HALI_DESHAPE_GAMMA", constants.DESHAPE_GAMMA_DEFAULT)
    if isinstance(gamma, bool) or not isinstance(gamma, Number) or not 0 < gamma <= 1:
        raise ImproperlyConfigured("HALI_DESHAPE_GAMMA must lie in (0, 1], got {!r}".format(gamma))
    if getattr(config, "HALI_FREQUENCY_BINS", constants.FREQUENCY_BINS_DEFAULT) < 8:
        raise ImproperlyConfigured("HALI_FREQUENCY_BINS must be at least 8")
