"""Gaussian-window STFT, de-shape STFT, greedy ridges and harmonic reconstruction."""
import logging
import warnings
from dataclasses import dataclass, field
from math import ceil, floor, log
from typing import List, Optional

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft

from hali import conf, constants
from hali.exceptions import (
    DegreeSelectionError,
    HarmonicOutOfRangeError,
    InvalidConfigError,
    InvalidInputError,
    NoDominantFrequencyError,
)
from hali.signal_core import Signal, estimate_average_period


__all__ = [
    "TimeFrequencyMap",
    "Ridge",
    "HarmonicComponent",
    "HarmonicDecomposition",
    "DecompositionParams",
    "stft",
    "de_shape",
    "extract_ridge",
    "extract_harmonic_ridge",
    "refine_ridge",
    "reconstruct_component",
    "estimate_trend",
    "select_harmonic_degree",
    "default_degree_cap",
    "harmonic_decompose",
    "dump_tfr_csv",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TimeFrequencyMap:
    """One-sided STFT with hop 1; frame ``n`` is centred on sample ``n``.

    Bins above DC are scaled by ``2/nfft`` and DC by ``1/nfft`` so that
    summing the bins around a ridge and dividing by ``window_g0`` returns the
    analytic component.
    """

    values: np.ndarray
    freq_axis: np.ndarray
    window_g0: float
    window_halfwidth_bins: int
    fs: float
    nfft: int
    window: np.ndarray
    half_len: int
    period: float

    @property
    def n_frames(self):
        return self.values.shape[0]

    @property
    def n_bins(self):
        return self.values.shape[1]

    @property
    def bin_width(self):
        return self.fs / self.nfft

    def power(self):
        return np.abs(self.values) ** 2


@dataclass(frozen=True, eq=False)
class Ridge:
    bins: np.ndarray
    freqs_hz: np.ndarray

    @classmethod
    def from_bins(cls, bins, freq_axis):
        bins = np.asarray(bins, dtype=int)
        return cls(bins=bins, freqs_hz=freq_axis[bins])

    def __len__(self):
        return self.bins.size


@dataclass(frozen=True, eq=False)
class HarmonicComponent:
    """Fundamental and harmonics of one oscillatory component.

    Row ``ell - 1`` of ``amplitudes`` and ``phases`` holds the ``ell``-th
    harmonic; phases are unwrapped and measured in cycles.
    """

    degree: int
    amplitudes: np.ndarray
    phases: np.ndarray
    ridges: List[Ridge] = field(default_factory=list)

    @property
    def fundamental_phase(self):
        return self.phases[0]

    def synthesize(self):
        return np.sum(self.amplitudes * np.cos(2.0 * np.pi * self.phases), axis=0)


@dataclass(frozen=True, eq=False)
class HarmonicDecomposition:
    components: List[HarmonicComponent]
    trend: np.ndarray
    fs: float
    period: float
    window_halfwidth_bins: int
    window_half_len: int

    @property
    def degrees(self):
        return [component.degree for component in self.components]

    def harmonic_sum(self):
        total = np.zeros_like(self.trend)
        for component in self.components:
            total += component.synthesize()
        return total

    def resynthesize(self):
        return self.harmonic_sum() + self.trend


@dataclass(frozen=True)
class DecompositionParams:
    cycles_in_window: float = conf.HALI_WINDOW_CYCLES
    n_bins: int = conf.HALI_FREQUENCY_BINS
    gamma: float = conf.HALI_DESHAPE_GAMMA
    criterion: str = conf.HALI_DEGREE_CRITERION
    d_max: Optional[int] = None
    fb_hz: Optional[float] = None
    vicinity_fraction: float = constants.HARMONIC_VICINITY_FRACTION
    segment_cycles: float = constants.DEGREE_SEGMENT_CYCLES
    period: Optional[float] = None

    def validate(self):
        if not self.cycles_in_window > 0:
            raise InvalidConfigError("cycles_in_window must be positive")
        if int(self.n_bins) != self.n_bins or self.n_bins < 8:
            raise InvalidConfigError("n_bins must be an integer >= 8")
        if not 0 < self.gamma <= 1:
            raise InvalidConfigError("De-shape gamma must lie in (0, 1]")
        if self.criterion not in constants.CRITERIA:
            raise InvalidConfigError(
                "Unknown degree criterion {!r}, expected one of {}".format(self.criterion, constants.CRITERIA)
            )
        if self.d_max is not None and (int(self.d_max) != self.d_max or self.d_max < 1):
            raise InvalidConfigError("d_max must be an integer >= 1")
        if self.fb_hz is not None and not self.fb_hz > 0:
            raise InvalidConfigError("fb_hz must be positive")
        if not 0 < self.vicinity_fraction <= 0.5:
            raise InvalidConfigError("vicinity_fraction must lie in (0, 0.5]")
        if not self.segment_cycles > 0:
            raise InvalidConfigError("segment_cycles must be positive")
        if self.period is not None and not self.period >= 2:
            raise InvalidConfigError("period must be at least 2 samples")
        return self


def _gaussian_window(cycles_in_window, period):
    # g >= 1e-2 g(0) over cycles_in_window periods, array cut where g < 1e-6 g(0)
    effective_half = cycles_in_window * period / 2.0
    sigma = log(1.0 / constants.WINDOW_SUPPORT_LEVEL) / effective_half ** 2
    half_len = max(1, int(ceil(np.sqrt(log(1.0 / constants.WINDOW_TRUNCATION_LEVEL) / sigma))))
    offsets = np.arange(-half_len, half_len + 1)
    return np.exp(-sigma * offsets ** 2), half_len


def _centre(block, half_len, nfft):
    buffer = np.zeros(block.shape[:-1] + (nfft,))
    buffer[..., :half_len + 1] = block[..., half_len:]
    buffer[..., nfft - half_len:] = block[..., :half_len]
    return buffer


def stft(signal, cycles_in_window=constants.WINDOW_CYCLES_DEFAULT, n_bins=constants.FREQUENCY_BINS_DEFAULT,
         period=None):
    if signal.has_missing:
        raise InvalidInputError("STFT needs a complete signal; impute the gaps first")
    if int(n_bins) != n_bins or n_bins < 8:
        raise InvalidInputError("n_bins must be an integer >= 8, got {}".format(n_bins))
    if not cycles_in_window > 0:
        raise InvalidInputError("cycles_in_window must be positive")
    n_bins = int(n_bins)
    if period is None:
        period = estimate_average_period(signal)

    nfft = 2 * (n_bins - 1)
    window, half_len = _gaussian_window(cycles_in_window, period)
    if window.size > nfft:
        nfft = 1 << int(window.size - 1).bit_length()
        logger.info("Window of %d samples does not fit %d bins, using %d", window.size, n_bins, nfft // 2 + 1)
        n_bins = nfft // 2 + 1
    if signal.n < window.size:
        raise InvalidInputError(
            "Signal of {} samples is shorter than the {}-sample analysis window".format(signal.n, window.size)
        )

    spectrum = np.abs(fft.rfft(_centre(window, half_len, nfft)))
    below = np.flatnonzero(spectrum < constants.SPECTRAL_SUPPORT_LEVEL * spectrum[0])
    halfwidth = int(below[0]) if below.size else n_bins - 1

    scale = np.full(n_bins, 2.0 / nfft)
    scale[0] = 1.0 / nfft
    frames = sliding_window_view(np.pad(signal.samples, half_len), window.size)
    values = np.empty((signal.n, n_bins), dtype=np.complex128)
    for start in range(0, signal.n, constants.FRAME_CHUNK):
        stop = min(signal.n, start + constants.FRAME_CHUNK)
        block = _centre(frames[start:stop] * window, half_len, nfft)
        values[start:stop] = fft.rfft(block, axis=1) * scale

    logger.debug("STFT: %d frames, %d bins, window %d samples, delta %d bins",
                 signal.n, n_bins, window.size, halfwidth)
    return TimeFrequencyMap(
        values=values,
        freq_axis=np.arange(n_bins) * signal.fs / nfft,
        window_g0=1.0,
        window_halfwidth_bins=max(1, halfwidth),
        fs=signal.fs,
        nfft=nfft,
        window=window,
        half_len=half_len,
        period=float(period),
    )


def _positive_quantile(cepstrum, q):
    positive = np.where(cepstrum > 0, cepstrum, np.nan)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        threshold = np.nanquantile(positive, q, axis=1)
    return np.nan_to_num(threshold, nan=np.inf)


def de_shape(tfr, gamma=constants.DESHAPE_GAMMA_DEFAULT):
    """Multiply ``|F|**gamma`` by its inverted short-time cepstrum.

    The cepstrum peaks at the quefrency of the fundamental period, so mapping
    quefrency back to frequency rewards the fundamental and leaves harmonics
    with little weight.
    """
    if not 0 < gamma <= 1:
        raise InvalidInputError("De-shape gamma must lie in (0, 1], got {}".format(gamma))
    half = tfr.nfft // 2
    quefrency = np.zeros(tfr.n_bins)
    positive = tfr.freq_axis > 0
    quefrency[positive] = tfr.fs / tfr.freq_axis[positive]
    usable = positive & (quefrency < half)
    lower = np.where(usable, np.floor(quefrency), 0).astype(int)
    weight = np.where(usable, quefrency - lower, 0.0)

    output = np.empty((tfr.n_frames, tfr.n_bins))
    for start in range(0, tfr.n_frames, constants.FRAME_CHUNK):
        stop = min(tfr.n_frames, start + constants.FRAME_CHUNK)
        rooted = np.abs(tfr.values[start:stop]) ** gamma
        cepstrum = fft.irfft(rooted, n=tfr.nfft, axis=1)[:, :half + 1]
        threshold = _positive_quantile(cepstrum, constants.DESHAPE_THRESHOLD_QUANTILE)
        cepstrum = np.maximum(cepstrum - threshold[:, None], 0.0)
        inverted = (1.0 - weight) * cepstrum[:, lower] + weight * cepstrum[:, lower + 1]
        inverted[:, ~usable] = 0.0
        output[start:stop] = rooted * inverted
    return output


def _pick(row, lower, upper, target):
    segment = row[lower:upper + 1]
    candidates = np.flatnonzero(segment == segment.max()) + lower
    return int(candidates[np.argmin(np.abs(candidates - target))])


def _track(energy, lower, upper, fb_bins, targets=None, anchor_lower=None, anchor_upper=None):
    n_frames, n_bins = energy.shape
    anchor_lower = lower if anchor_lower is None else anchor_lower
    anchor_upper = upper if anchor_upper is None else anchor_upper

    bins = np.arange(n_bins)
    best = np.full(n_frames, -np.inf)
    for start in range(0, n_frames, constants.FRAME_CHUNK):
        stop = min(n_frames, start + constants.FRAME_CHUNK)
        inside = (bins >= anchor_lower[start:stop, None]) & (bins <= anchor_upper[start:stop, None])
        if inside.any():
            best[start:stop] = np.where(inside, energy[start:stop], -np.inf).max(axis=1)
    anchor = int(np.argmax(best))
    if not np.isfinite(best[anchor]):
        raise InvalidInputError("Ridge search band contains no frequency bins")

    path = np.empty(n_frames, dtype=int)
    anchor_target = anchor_lower[anchor] if targets is None else targets[anchor]
    path[anchor] = _pick(energy[anchor], anchor_lower[anchor], anchor_upper[anchor], anchor_target)

    def step(frame, previous):
        low = max(lower[frame], previous - fb_bins)
        high = min(upper[frame], previous + fb_bins)
        if low > high:
            low, high = max(0, previous - fb_bins), min(n_bins - 1, previous + fb_bins)
        target = previous if targets is None else targets[frame]
        return _pick(energy[frame], low, high, target)

    for frame in range(anchor + 1, n_frames):
        path[frame] = step(frame, path[frame - 1])
    for frame in range(anchor - 1, -1, -1):
        path[frame] = step(frame, path[frame + 1])
    return path


def _fb_bins(fb_hz, freq_axis):
    return max(0, int(floor(fb_hz / (freq_axis[1] - freq_axis[0]))))


def extract_ridge(energy, fb_hz, freq_axis, seed_band=None):
    """Greedy maximum-energy ridge anchored at the global maximum.

    ``seed_band`` (low, high) in Hz restricts where the anchor may lie; the
    walk itself only obeys the ``fb_hz`` jump limit.
    """
    energy = np.asarray(energy, dtype=float)
    n_frames, n_bins = energy.shape
    if freq_axis.size != n_bins:
        raise InvalidInputError("Frequency axis has {} bins, energy has {}".format(freq_axis.size, n_bins))
    lower = np.zeros(n_frames, dtype=int)
    upper = np.full(n_frames, n_bins - 1)
    anchor_lower, anchor_upper = lower, upper
    if seed_band is not None:
        inside = np.flatnonzero((freq_axis >= seed_band[0]) & (freq_axis <= seed_band[1]))
        if inside.size == 0:
            raise InvalidInputError("Seed band {} Hz contains no frequency bins".format(tuple(seed_band)))
        anchor_lower = np.full(n_frames, inside[0])
        anchor_upper = np.full(n_frames, inside[-1])
    path = _track(energy, lower, upper, _fb_bins(fb_hz, freq_axis),
                  anchor_lower=anchor_lower, anchor_upper=anchor_upper)
    return Ridge.from_bins(path, freq_axis)


def _follow_multiple(power, tfr, fundamental, ell, vicinity_hz, fb_hz):
    highest = ell * fundamental.freqs_hz.max() + vicinity_hz
    if highest >= tfr.fs / 2.0:
        raise HarmonicOutOfRangeError(
            "Harmonic {} search band reaches {:.1f} Hz, beyond Nyquist {:.1f} Hz".format(ell, highest, tfr.fs / 2.0)
        )
    centre = ell * fundamental.bins.astype(float)
    reach = vicinity_hz / tfr.bin_width
    lower = np.clip(np.ceil(centre - reach), 0, tfr.n_bins - 1).astype(int)
    upper = np.clip(np.floor(centre + reach), 0, tfr.n_bins - 1).astype(int)
    path = _track(power, lower, upper, _fb_bins(fb_hz, tfr.freq_axis), targets=centre)
    return Ridge.from_bins(path, tfr.freq_axis)


def _default_fb(tfr):
    return constants.FB_FACTOR * tfr.fs / tfr.n_frames


def extract_harmonic_ridge(tfr, fundamental, ell, vicinity_hz=None, fb_hz=None, power=None):
    if int(ell) != ell or ell < 2:
        raise InvalidInputError("Harmonic order must be an integer >= 2, got {}".format(ell))
    if vicinity_hz is None:
        vicinity_hz = constants.HARMONIC_VICINITY_FRACTION * fundamental.freqs_hz.min()
    power = tfr.power() if power is None else power
    return _follow_multiple(power, tfr, fundamental, int(ell), vicinity_hz, fb_hz or _default_fb(tfr))


def refine_ridge(tfr, ridge, vicinity_hz=None, fb_hz=None, power=None):
    """Re-track a de-shape ridge on ``|F|**2`` near its own course."""
    if vicinity_hz is None:
        vicinity_hz = constants.REFINE_VICINITY_FRACTION * ridge.freqs_hz.min()
    power = tfr.power() if power is None else power
    return _follow_multiple(power, tfr, ridge, 1, vicinity_hz, fb_hz or _default_fb(tfr))


def reconstruct_component(tfr, ridge):
    if ridge.bins.size != tfr.n_frames:
        raise InvalidInputError("Ridge covers {} frames, map has {}".format(ridge.bins.size, tfr.n_frames))
    if ridge.bins.min() < 0 or ridge.bins.max() >= tfr.n_bins:
        raise InvalidInputError("Ridge leaves the frequency axis")
    delta = tfr.window_halfwidth_bins
    columns = ridge.bins[:, None] + np.arange(-delta + 1, delta)
    valid = (columns >= 0) & (columns < tfr.n_bins)
    rows = np.arange(tfr.n_frames)[:, None]
    gathered = tfr.values[rows, np.clip(columns, 0, tfr.n_bins - 1)] * valid
    analytic = gathered.sum(axis=1) / tfr.window_g0
    return np.abs(analytic), np.unwrap(np.angle(analytic)) / (2.0 * np.pi)


def estimate_trend(tfr, ridges):
    if not ridges:
        raise InvalidInputError("Trend estimation needs at least one ridge")
    lowest = np.min(np.vstack([ridge.bins for ridge in ridges]), axis=0)
    limit = np.maximum(lowest - tfr.window_halfwidth_bins, 0)
    width = int(limit.max())
    if width == 0:
        return np.zeros(tfr.n_frames)
    below = np.arange(width)[None, :] < limit[:, None]
    return (tfr.values[:, :width].real * below).sum(axis=1) / tfr.window_g0


def default_degree_cap(fs, max_frequency):
    if not max_frequency > 0:
        return 1
    return int(max(1, min(floor((fs / 2.0) / max_frequency) - 1, constants.DEGREE_CAP)))


def _criterion_value(criterion, n, rss, p):
    if criterion == constants.CRITERION_BIC:
        return n * np.log(rss / n) + p * np.log(n)
    return n * np.log(rss / n) + 2 * p + 2.0 * p * (p + 1) / (n - p - 1)


def select_harmonic_degree(signal, fundamental_phase, d_max=None, criterion=constants.CRITERION_AICC,
                           segment_len=None):
    """Pick the number of harmonics by trigonometric regression on the phase.

    With ``segment_len`` the regression is fitted independently on
    consecutive blocks and the criterion pools residuals and parameters.
    """
    if criterion not in constants.CRITERIA:
        raise InvalidInputError("Unknown degree criterion {!r}".format(criterion))
    phase = np.asarray(fundamental_phase, dtype=float)
    if phase.size != signal.n:
        raise InvalidInputError("Phase has {} samples, signal has {}".format(phase.size, signal.n))
    if d_max is None:
        d_max = default_degree_cap(signal.fs, np.max(np.gradient(phase)) * signal.fs)
    if int(d_max) != d_max or d_max < 1:
        raise InvalidInputError("d_max must be an integer >= 1")

    observed = signal.observed_mask
    values = signal.samples[observed]
    phase = phase[observed]
    n = values.size
    variance = np.var(values)
    if variance == 0:
        return 1
    floor_rss = constants.RSS_FLOOR * n * variance

    n_blocks = max(1, n // int(segment_len)) if segment_len else 1
    blocks = list(zip(np.array_split(values, n_blocks), np.array_split(phase, n_blocks)))
    smallest = min(block.size for block, _ in blocks)

    scores = []
    for degree in range(1, int(d_max) + 1):
        p = 2 * degree * n_blocks
        if 2 * degree >= smallest or n - p - 1 <= 0:
            break
        rss = 0.0
        orders = np.arange(1, degree + 1)
        for block, block_phase in blocks:
            angle = 2.0 * np.pi * block_phase[:, None] * orders[None, :]
            design = np.hstack([np.cos(angle), np.sin(angle)])
            coefficients, _, rank, _ = np.linalg.lstsq(design, block, rcond=None)
            if rank < design.shape[1]:
                raise DegreeSelectionError(
                    "Trigonometric regression of degree {} is rank-deficient".format(degree)
                )
            rss += float(np.sum((block - design @ coefficients) ** 2))
        scores.append(_criterion_value(criterion, n, max(rss, floor_rss), p))
    if not scores:
        raise DegreeSelectionError("Too few samples per block to fit even one harmonic")
    chosen = int(np.argmin(scores)) + 1
    logger.debug("Harmonic degree %d selected by %s over %d candidates", chosen, criterion, len(scores))
    return chosen


def harmonic_decompose(signal, K=1, params=None):
    params = (params or DecompositionParams()).validate()
    if int(K) != K or K < 1:
        raise InvalidInputError("Number of components must be an integer >= 1")
    if signal.has_missing:
        raise InvalidInputError("Harmonic decomposition needs a complete signal")

    period = params.period or estimate_average_period(signal)
    tfr = stft(signal, params.cycles_in_window, params.n_bins, period)
    energy = de_shape(tfr, params.gamma)
    np.square(energy, out=energy)
    ceiling = min(tfr.fs / 2.0, constants.FUNDAMENTAL_BAND_FACTOR * tfr.fs / period)
    outside = (tfr.freq_axis < 2.0 / signal.duration) | (tfr.freq_axis > ceiling)
    energy[:, outside] = 0.0

    fb_hz = params.fb_hz or _default_fb(tfr)
    mask_half = max(_fb_bins(fb_hz, tfr.freq_axis), tfr.window_halfwidth_bins)
    bins = np.arange(tfr.n_bins)
    fundamentals = []
    for index in range(int(K)):
        if not energy.max() > 0:
            raise NoDominantFrequencyError(
                "Found {} of {} requested components before the de-shape map ran empty".format(index, K)
            )
        ridge = extract_ridge(energy, fb_hz, tfr.freq_axis)
        fundamentals.append(ridge)
        for start in range(0, tfr.n_frames, constants.FRAME_CHUNK):
            stop = min(tfr.n_frames, start + constants.FRAME_CHUNK)
            near = np.abs(bins[None, :] - ridge.bins[start:stop, None]) <= mask_half
            energy[start:stop][near] = 0.0
    del energy

    power = tfr.power()
    fundamentals.sort(key=lambda ridge: ridge.freqs_hz.mean())
    fundamentals = [refine_ridge(tfr, ridge, fb_hz=fb_hz, power=power) for ridge in fundamentals]
    trend = estimate_trend(tfr, fundamentals)
    detrended = Signal(signal.samples - trend, signal.fs)
    segment_len = max(int(round(params.segment_cycles * period)), 4 * constants.DEGREE_CAP)

    components = []
    for number, fundamental in enumerate(fundamentals, start=1):
        amplitude, phase = reconstruct_component(tfr, fundamental)
        d_max = params.d_max or default_degree_cap(signal.fs, fundamental.freqs_hz.max())
        degree = select_harmonic_degree(detrended, phase, d_max, params.criterion, segment_len)
        ridges, amplitudes, phases = [fundamental], [amplitude], [phase]
        vicinity = params.vicinity_fraction * fundamental.freqs_hz.min()
        for ell in range(2, degree + 1):
            try:
                ridge = _follow_multiple(power, tfr, fundamental, ell, vicinity, fb_hz)
            except HarmonicOutOfRangeError as exc:
                logger.warning("Component %d: degree truncated to %d (%s)", number, ell - 1, exc)
                break
            harmonic_amplitude, harmonic_phase = reconstruct_component(tfr, ridge)
            ridges.append(ridge)
            amplitudes.append(harmonic_amplitude)
            phases.append(harmonic_phase)
        components.append(HarmonicComponent(
            degree=len(ridges),
            amplitudes=np.vstack(amplitudes),
            phases=np.vstack(phases),
            ridges=ridges,
        ))
        logger.info("Component %d: mean frequency %.2f Hz, %d harmonics",
                    number, fundamental.freqs_hz.mean(), len(ridges))

    return HarmonicDecomposition(
        components=components,
        trend=trend,
        fs=signal.fs,
        period=float(period),
        window_halfwidth_bins=tfr.window_halfwidth_bins,
        window_half_len=tfr.half_len,
    )


def dump_tfr_csv(path, tfr, energy=None, ridges=(), frame_step=10, max_freq=None):
    """Write |F|, the de-shape map and ridges as long (kind, frame, bin, value) rows.

    Frames are decimated by ``frame_step`` and bins cut at ``max_freq`` Hz to
    keep the file a manageable size.
    """
    frames = np.arange(0, tfr.n_frames, max(1, int(frame_step)))
    limit = tfr.n_bins if max_freq is None else int(np.searchsorted(tfr.freq_axis, max_freq, side="right"))
    grid_frames, grid_bins = np.meshgrid(frames, np.arange(limit), indexing="ij")
    pieces = [pd.DataFrame({
        "kind": "stft",
        "frame": grid_frames.ravel(),
        "bin": grid_bins.ravel(),
        "value": np.abs(tfr.values[frames, :limit]).ravel(),
    })]
    if energy is not None:
        pieces.append(pd.DataFrame({
            "kind": "deshape",
            "frame": grid_frames.ravel(),
            "bin": grid_bins.ravel(),
            "value": np.asarray(energy)[frames, :limit].ravel(),
        }))
    for number, ridge in enumerate(ridges, start=1):
        pieces.append(pd.DataFrame({
            "kind": "ridge{}".format(number),
            "frame": frames,
            "bin": ridge.bins[frames],
            "value": ridge.freqs_hz[frames],
        }))
    pd.concat(pieces, ignore_index=True).to_csv(path, index=False, float_format="%.17g")
    logger.info("Wrote time-frequency dump to %s", path)
