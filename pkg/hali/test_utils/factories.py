import factory
import numpy as np

from hali import constants
from hali.evaluation import BenchmarkConfig
from hali.imputers import ImputerConfig
from hali.signal_core import MissingInterval, Signal, SyntheticSpec
from hali.tfa import DecompositionParams


def cosine(n, fs, frequency, amplitude=1.0, offset=0.0, phase=0.0):
    t = np.arange(n) / fs
    return amplitude * np.cos(2 * np.pi * frequency * t + phase) + offset


class SignalFactory(factory.Factory):
    """Complete cosine signal; override ``samples`` for anything else."""

    fs = 100.0
    samples = factory.LazyAttribute(
        lambda o: cosine(o.n, o.fs, o.frequency, o.amplitude, o.offset)
    )

    class Params:
        n = 1000
        frequency = 5.0
        amplitude = 1.0
        offset = 0.0

    class Meta:
        model = Signal


class MissingIntervalFactory(factory.Factory):
    start = factory.Sequence(lambda n: 100 + 200 * n)
    length = 20

    class Meta:
        model = MissingInterval


class SyntheticSpecFactory(factory.Factory):
    """Short, low-rate generator settings that keep tests fast."""

    fs = 1000.0
    duration = 2.0
    n_harmonics = 3
    base_freq = 10.0
    phase_wobble_amp = 0.5 / (2 * np.pi)
    harmonic_jitter = 0.0
    seed = factory.Sequence(lambda n: n)

    class Meta:
        model = SyntheticSpec


class DecompositionParamsFactory(factory.Factory):
    n_bins = 1025

    class Meta:
        model = DecompositionParams


class ImputerConfigFactory(factory.Factory):
    method = constants.METHOD_TLM

    class Meta:
        model = ImputerConfig


class BenchmarkConfigFactory(factory.Factory):
    n_signals = 3
    p_ms_levels = (0.05,)
    snr_levels = (constants.NOISELESS,)
    methods = (constants.METHOD_TLM, constants.METHOD_LSE)
    schemes = (constants.SCHEME_SPLINE, constants.SCHEME_PCHIP)
    synthetic = factory.SubFactory(SyntheticSpecFactory, seed=0)
    decomposition = factory.SubFactory(DecompositionParamsFactory)

    class Meta:
        model = BenchmarkConfig
