import logging
from dataclasses import dataclass, field
from math import ceil
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.ndimage import uniform_filter1d
from scipy.signal import periodogram

from hali import constants
from hali.exceptions import (
    GenerationError,
    InvalidConfigError,
    InvalidInputError,
    NoDominantFrequencyError,
)


__all__ = [
    "Signal",
    "MissingInterval",
    "SyntheticSpec",
    "GroundTruth",
    "detect_missing_intervals",
    "detect_short_gaps",
    "fill_short_gaps",
    "mask_signal",
    "validate_intervals",
    "intervals_mask",
    "generate_synthetic",
    "apply_missingness",
    "add_noise",
    "estimate_average_period",
]

logger = logging.getLogger(__name__)


class MissingInterval(NamedTuple):
    """One x-missing gap, ``length`` samples starting at 0-based ``start``."""

    start: int
    length: int

    @property
    def stop(self):
        return self.start + self.length

    def as_slice(self):
        return slice(self.start, self.stop)


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled real series with its sampling rate and missing mask.

    Missing samples always hold NaN, whatever the caller passed in, and the
    arrays are read-only so a ``Signal`` can be shared between tasks.
    """

    samples: np.ndarray
    fs: float
    missing: Optional[np.ndarray] = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidInputError("A signal must be a non-empty one-dimensional series")
        try:
            fs = float(self.fs)
        except (TypeError, ValueError):
            raise InvalidInputError("Sampling rate {!r} is not a number".format(self.fs))
        if not np.isfinite(fs) or fs <= 0:
            raise InvalidInputError("Sampling rate must be positive and finite, got {}".format(fs))

        if self.missing is None:
            missing = ~np.isfinite(samples)
        else:
            missing = np.array(self.missing, dtype=bool)
            if missing.shape != samples.shape:
                raise InvalidInputError(
                    "Missing mask has {} entries for {} samples".format(missing.size, samples.size)
                )
        if not np.all(np.isfinite(samples[~missing])):
            raise InvalidInputError("Observed samples must be finite")

        samples[missing] = np.nan
        samples.setflags(write=False)
        missing.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "fs", fs)
        object.__setattr__(self, "missing", missing)

    def __len__(self):
        return self.samples.size

    @property
    def n(self):
        return self.samples.size

    @property
    def duration(self):
        return self.n / self.fs

    @property
    def observed_mask(self):
        return ~self.missing

    @property
    def has_missing(self):
        return bool(self.missing.any())

    @property
    def times(self):
        return np.arange(self.n) / self.fs

    def with_samples(self, samples, missing=None):
        return Signal(samples, self.fs, self.missing if missing is None else missing)

    def to_array(self):
        return np.array(self.samples)

    @classmethod
    def from_values(cls, values, fs):
        """Build a signal from plain values, ``None`` and NaN marking missing samples."""
        values = np.array([np.nan if value is None else value for value in values], dtype=float)
        return cls(values, fs)


@dataclass(frozen=True)
class SyntheticSpec:
    fs: float = 4000.0
    duration: float = 1.0
    n_harmonics: int = 4
    base_freq: float = 50.0
    phase_wobble_amp: float = 5.0 / (2.0 * np.pi)
    random_walk: bool = True
    random_walk_window: float = constants.RANDOM_WALK_WINDOW_S
    harmonic_jitter: float = 0.05
    snr_db: Optional[float] = None
    seed: int = 0
    trend_amplitude: float = 0.0
    trend_freq: float = 0.5

    @property
    def n_samples(self):
        return int(round(self.fs * self.duration))

    def max_fundamental_frequency(self):
        # |d/dt wobble·cos(2πt)| ≤ 2π·wobble; the normalised random walk adds at most 1 Hz
        return self.base_freq + 2.0 * np.pi * abs(self.phase_wobble_amp) + (1.0 if self.random_walk else 0.0)

    def validate(self):
        for name in ("fs", "duration", "base_freq", "random_walk_window"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidConfigError("SyntheticSpec.{} must be positive, got {}".format(name, value))
        if self.n_samples < 4:
            raise InvalidConfigError("SyntheticSpec yields fewer than 4 samples")
        if int(self.n_harmonics) != self.n_harmonics or self.n_harmonics < 1:
            raise InvalidConfigError("SyntheticSpec.n_harmonics must be an integer >= 1")
        if not 0 <= self.harmonic_jitter < 0.5:
            raise InvalidConfigError("SyntheticSpec.harmonic_jitter must lie in [0, 0.5)")
        lowest = self.base_freq - 2.0 * np.pi * abs(self.phase_wobble_amp) - (1.0 if self.random_walk else 0.0)
        if lowest <= 0:
            raise InvalidConfigError("SyntheticSpec phase is not increasing: wobble exceeds the base frequency")
        highest = self.n_harmonics * (1.0 + self.harmonic_jitter) * self.max_fundamental_frequency()
        if highest >= self.fs / 2.0:
            raise InvalidConfigError(
                "SyntheticSpec violates Nyquist: highest harmonic reaches {:.1f} Hz at fs={}".format(
                    highest, self.fs
                )
            )
        if self.trend_amplitude and not self.trend_freq > 0:
            raise InvalidConfigError("SyntheticSpec.trend_freq must be positive")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Clean synthetic signal together with the model terms that built it."""

    clean: Signal
    amplitudes: np.ndarray
    phases: np.ndarray
    trend: np.ndarray
    spec: SyntheticSpec = field(default_factory=SyntheticSpec)

    @property
    def n_harmonics(self):
        return self.amplitudes.shape[0]

    def harmonic(self, ell):
        return self.amplitudes[ell - 1] * np.cos(2.0 * np.pi * self.phases[ell - 1])

    def instantaneous_frequency(self):
        return np.gradient(self.phases[0]) * self.clean.fs


def _runs(mask):
    padded = np.concatenate(([0], np.asarray(mask, dtype=np.int8), [0]))
    edges = np.flatnonzero(np.diff(padded))
    return [MissingInterval(int(a), int(b - a)) for a, b in zip(edges[::2], edges[1::2])]


def _check_min_len(min_len):
    if int(min_len) != min_len or min_len < 1:
        raise InvalidInputError("Minimum interval length must be an integer >= 1, got {}".format(min_len))
    return int(min_len)


def detect_missing_intervals(signal, min_len=constants.MIN_GAP_DEFAULT):
    """Maximal runs of missing samples at least ``min_len`` long, sorted."""
    min_len = _check_min_len(min_len)
    return [run for run in _runs(signal.missing) if run.length >= min_len]


def detect_short_gaps(signal, min_len=constants.MIN_GAP_DEFAULT):
    min_len = _check_min_len(min_len)
    return [run for run in _runs(signal.missing) if run.length < min_len]


def fill_short_gaps(signal, min_len=constants.MIN_GAP_DEFAULT):
    """Linearly interpolate runs shorter than ``min_len``; longer runs stay missing."""
    short = detect_short_gaps(signal, min_len)
    if not short:
        return signal
    observed = np.flatnonzero(signal.observed_mask)
    if observed.size == 0:
        raise InvalidInputError("Cannot interpolate short gaps in a signal without observed samples")
    samples = signal.to_array()
    missing = np.array(signal.missing)
    for gap in short:
        index = np.arange(gap.start, gap.stop)
        samples[index] = np.interp(index, observed, signal.samples[observed])
        missing[index] = False
    logger.debug("Linearly filled %d short gaps", len(short))
    return signal.with_samples(samples, missing)


def validate_intervals(intervals, n):
    """Return ``intervals`` as sorted ``MissingInterval`` s, checking bounds and overlap."""
    checked = sorted(MissingInterval(int(start), int(length)) for start, length in intervals)
    previous_stop = 0
    for interval in checked:
        if interval.length < 1:
            raise InvalidInputError("Interval {} has non-positive length".format(tuple(interval)))
        if interval.start < 0 or interval.stop > n:
            raise InvalidInputError("Interval {} lies outside [0, {})".format(tuple(interval), n))
        if interval.start < previous_stop:
            raise InvalidInputError("Interval {} overlaps its predecessor".format(tuple(interval)))
        previous_stop = interval.stop
    return checked


def intervals_mask(intervals, n):
    mask = np.zeros(n, dtype=bool)
    for interval in intervals:
        mask[interval.start:interval.stop] = True
    return mask


def mask_signal(signal, intervals):
    intervals = validate_intervals(intervals, signal.n)
    missing = np.array(signal.missing) | intervals_mask(intervals, signal.n)
    return signal.with_samples(signal.samples, missing)


def _smoothed_walk(rng, n, width):
    walk = uniform_filter1d(np.cumsum(rng.standard_normal(n)), size=width, mode="nearest")
    walk = walk - walk.mean()
    peak = np.max(np.abs(walk))
    return walk / peak if peak > 0 else walk


def generate_synthetic(spec):
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_samples
    t = np.arange(n) / spec.fs

    if spec.random_walk:
        width = max(1, int(round(spec.random_walk_window * spec.fs)))
        r_b = uniform_filter1d(rng.standard_normal(n), size=width, mode="nearest")
        wander = cumulative_trapezoid(r_b / np.max(np.abs(r_b)), t, initial=0.0)
    else:
        wander = np.zeros(n)
    fundamental_phase = spec.base_freq * t + spec.phase_wobble_amp * np.cos(2.0 * np.pi * t) + wander

    degrees = np.arange(1, spec.n_harmonics + 1, dtype=float)
    spread = np.ones(spec.n_harmonics)
    spread[1:] = rng.uniform(
        (1.0 - spec.harmonic_jitter) * degrees[1:], (1.0 + spec.harmonic_jitter) * degrees[1:]
    )
    phases = spread[:, None] * fundamental_phase[None, :]

    ratios = np.ones((spec.n_harmonics, n))
    smoothing = max(1, int(round(constants.AMPLITUDE_SMOOTHING_S * spec.fs)))
    for row in range(1, spec.n_harmonics):
        level = 0.25 + 0.5 * rng.uniform()
        walk = _smoothed_walk(rng, n, smoothing)
        ratios[row] = np.clip(
            level * (1.0 + constants.AMPLITUDE_MODULATION_DEPTH * walk),
            constants.AMPLITUDE_RATIO_FLOOR,
            constants.AMPLITUDE_RATIO_CEILING,
        )
    amplitudes = ratios * np.sqrt(t + 1.0)[None, :]

    if spec.trend_amplitude:
        trend = spec.trend_amplitude * np.sin(2.0 * np.pi * spec.trend_freq * t)
    else:
        trend = np.zeros(n)

    clean = np.sum(amplitudes * np.cos(2.0 * np.pi * phases), axis=0) + trend
    return GroundTruth(
        clean=Signal(clean, spec.fs),
        amplitudes=amplitudes,
        phases=phases,
        trend=trend,
        spec=spec,
    )


def _split_lengths(total, parts, rng):
    min_part = max(1, int(ceil(constants.MIN_INTERVAL_FRACTION * total)))
    if min_part * parts > total:
        min_part = total // parts
    free = total - min_part * parts
    distinct_possible = total >= min_part * parts + parts * (parts - 1) // 2

    for _ in range(constants.PLACEMENT_RETRIES):
        shares = rng.dirichlet(np.ones(parts)) * free
        lengths = min_part + np.floor(shares).astype(int)
        leftover = total - int(lengths.sum())
        order = np.argsort(np.floor(shares) - shares, kind="stable")
        lengths[order[:leftover]] += 1
        if not distinct_possible or len(set(lengths.tolist())) == parts:
            break
    return [int(length) for length in lengths]


def _place_intervals(lengths, n, margin, separation, rng):
    for _ in range(constants.PLACEMENT_RETRIES):
        placed = []
        for length in rng.permutation(lengths):
            length = int(length)
            highest = n - margin - length
            if highest < margin:
                raise GenerationError(
                    "Interval of {} samples does not fit between margins of {} samples".format(length, margin)
                )
            start = int(rng.integers(margin, highest + 1))
            clash = any(
                start < other.stop + separation and other.start < start + length + separation
                for other in placed
            )
            if clash:
                break
            placed.append(MissingInterval(start, length))
        else:
            return sorted(placed)
    raise GenerationError(
        "Could not place {} intervals of lengths {} in {} samples".format(len(lengths), list(lengths), n)
    )


def apply_missingness(source: Union[GroundTruth, Signal], p_ms, n_intervals=3, seed=0):
    """Remove ``round(N·p_ms)`` samples as ``n_intervals`` separated gaps.

    ``source`` is a ``GroundTruth`` (its clean signal is masked) or any
    complete ``Signal``, such as a noisy copy of the truth.
    """
    signal = source.clean if isinstance(source, GroundTruth) else source
    if not 0 < p_ms < 0.5:
        raise InvalidInputError("Missing fraction must lie in (0, 0.5), got {}".format(p_ms))
    if int(n_intervals) != n_intervals or n_intervals < 1:
        raise InvalidInputError("Number of intervals must be an integer >= 1")
    n_intervals = int(n_intervals)

    rng = np.random.default_rng(seed)
    total = max(int(round(signal.n * p_ms)), n_intervals)
    lengths = _split_lengths(total, n_intervals, rng)
    try:
        separation = int(ceil(estimate_average_period(signal)))
    except (NoDominantFrequencyError, InvalidInputError):
        separation = 1
    margin = int(ceil(constants.MISSING_MARGIN_FRACTION * signal.n))
    intervals = _place_intervals(lengths, signal.n, margin, separation, rng)
    return mask_signal(signal, intervals), intervals


def add_noise(signal, snr_db, seed=0):
    """Add white Gaussian noise at ``snr_db`` (variance ratio); ``None``/inf disables."""
    if snr_db is None or np.isposinf(snr_db):
        return signal
    variance = np.var(signal.samples[signal.observed_mask])
    if not variance > 0:
        raise InvalidInputError("Cannot add noise at a given SNR to a zero-variance signal")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(signal.n) * np.sqrt(variance / 10.0 ** (snr_db / 10.0))
    return signal.with_samples(signal.samples + noise)


def estimate_average_period(signal):
    """Average period T̃ in samples, from the dominant periodogram peak.

    Only the longest run of observed samples is analysed, so gaps never enter
    the spectrum.
    """
    runs = _runs(signal.observed_mask)
    if not runs:
        raise InvalidInputError("Signal has no observed samples")
    longest = max(runs, key=lambda run: run.length)
    if longest.length < 4:
        raise InvalidInputError("Need at least 4 contiguous observed samples to estimate a period")

    segment = signal.samples[longest.as_slice()]
    freqs, power = periodogram(segment, fs=signal.fs, window="boxcar", detrend="constant")
    f_min = 2.0 / (longest.length / signal.fs)
    band = (freqs >= f_min) & (freqs < signal.fs / 2.0)
    if not band.any():
        raise NoDominantFrequencyError("No frequency bins between {:.3f} Hz and Nyquist".format(f_min))
    floor = np.finfo(float).eps * (np.mean(segment ** 2) + np.finfo(float).tiny)
    if power[band].max() <= floor:
        raise NoDominantFrequencyError("Spectrum is flat: the signal has no oscillation")
    peak = freqs[band][np.argmax(power[band])]
    return max(2.0, signal.fs / peak)
