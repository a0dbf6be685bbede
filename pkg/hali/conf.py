from django.conf import settings

from hali import constants


def _setting(name, default):
    # Library callers may import hali without configuring Django
    if not settings.configured:
        return default
    return getattr(settings, name, default)


HALI_DEFAULT_METHOD = _setting("HALI_DEFAULT_METHOD", constants.METHOD_TLM)

HALI_DEFAULT_SCHEME = _setting("HALI_DEFAULT_SCHEME", "p")

HALI_MIN_GAP = _setting("HALI_MIN_GAP", constants.MIN_GAP_DEFAULT)

HALI_WINDOW_CYCLES = _setting("HALI_WINDOW_CYCLES", constants.WINDOW_CYCLES_DEFAULT)

HALI_FREQUENCY_BINS = _setting("HALI_FREQUENCY_BINS", constants.FREQUENCY_BINS_DEFAULT)

HALI_DESHAPE_GAMMA = _setting("HALI_DESHAPE_GAMMA", constants.DESHAPE_GAMMA_DEFAULT)

HALI_DEGREE_CRITERION = _setting("HALI_DEGREE_CRITERION", constants.CRITERION_AICC)

HALI_BENCH_WORKERS = _setting("HALI_BENCH_WORKERS", 1)
