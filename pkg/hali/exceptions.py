from django.core.exceptions import ImproperlyConfigured

from hali.constants import EXIT_COMPUTATION_FAILURE, EXIT_INVALID_INPUT


class HaliError(Exception):
    exit_code = EXIT_COMPUTATION_FAILURE


class InvalidInputError(HaliError, ValueError):
    exit_code = EXIT_INVALID_INPUT


class InvalidConfigError(InvalidInputError, ImproperlyConfigured):
    pass


class ComputationError(HaliError):
    exit_code = EXIT_COMPUTATION_FAILURE


class GenerationError(ComputationError):
    pass


class NoDominantFrequencyError(ComputationError):
    pass


class ImputerInfeasibleError(ComputationError):
    pass


class SeasonalityError(ComputationError):
    pass


class DegreeSelectionError(ComputationError):
    pass


class HarmonicOutOfRangeError(ComputationError):
    pass


class DegenerateTestError(ComputationError):
    pass
