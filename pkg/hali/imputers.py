"""Initial imputers filling each missing interval from its observed context."""
import logging
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg
from scipy.spatial.distance import cdist, pdist
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import RBF, ConstantKernel, WhiteKernel
from statsmodels.tsa.ar_model import AutoReg

from hali import conf, constants
from hali.exceptions import (
    ComputationError,
    ImputerInfeasibleError,
    InvalidConfigError,
    InvalidInputError,
    SeasonalityError,
)
from hali.signal_core import (
    MissingInterval,
    detect_missing_intervals,
    estimate_average_period,
    intervals_mask,
    validate_intervals,
)
from hali.tfa import DecompositionParams, harmonic_decompose


__all__ = [
    "ImputerConfig",
    "IntervalRecord",
    "FillOutcome",
    "BaseImputer",
    "TakensLagMap",
    "LeastSquaresForecaster",
    "DmdForecaster",
    "KernelEdmdForecaster",
    "GaussianProcessForecaster",
    "SeasonalArForecaster",
    "LinearInterpolator",
    "auto_tune",
    "estimate_seasonality",
    "impute_tlm",
    "impute_dynamics",
    "impute_gpr",
    "impute_sar",
    "dmd_eigenvalues",
    "get_imputer",
    "initial_imputation",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ImputerConfig:
    """Parameters of the initial imputers, in samples.

    ``None`` fields are derived from the average period by ``auto_tune``.
    """

    method: str = conf.HALI_DEFAULT_METHOD
    template_len: Optional[int] = None
    embed_dim: Optional[int] = None
    subsignal_len: Optional[int] = None
    kernel_size: Optional[float] = None
    seasonality: Optional[int] = None
    cycles_for_seasonality: int = constants.SEASONAL_CYCLES_DEFAULT
    auto: bool = True
    period: Optional[float] = None
    seed: int = 0

    def validate(self):
        if self.method not in constants.INITIAL_METHODS + (constants.METHOD_LINEAR,):
            raise InvalidConfigError(
                "Unknown imputation method {!r}, expected one of {}".format(self.method, constants.INITIAL_METHODS)
            )
        for name in ("template_len", "embed_dim", "subsignal_len"):
            value = getattr(self, name)
            if value is not None and (int(value) != value or value < 2):
                raise InvalidConfigError("{} must be an integer >= 2, got {}".format(name, value))
        if self.seasonality is not None and (int(self.seasonality) != self.seasonality or self.seasonality < 2):
            raise InvalidConfigError("seasonality must be an integer >= 2")
        if self.kernel_size is not None and not self.kernel_size > 0:
            raise InvalidConfigError("kernel_size must be positive")
        if int(self.cycles_for_seasonality) != self.cycles_for_seasonality or self.cycles_for_seasonality < 1:
            raise InvalidConfigError("cycles_for_seasonality must be an integer >= 1")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidConfigError("seed must be a non-negative integer")
        if self.auto and self.period is not None:
            expected = _auto_lengths(self.period)
            actual = (self.template_len, self.subsignal_len, self.embed_dim)
            if any(value is not None and value != target for value, target in zip(actual, expected)):
                raise InvalidConfigError(
                    "Auto-tuned lengths {} do not follow the period {}".format(actual, self.period)
                )
        return self

    @property
    def is_resolved(self):
        return None not in (self.template_len, self.embed_dim, self.subsignal_len, self.kernel_size)


class IntervalRecord(NamedTuple):
    interval: MissingInterval
    requested: str
    used: str
    fallbacks: Tuple[Tuple[str, str], ...] = ()
    clamped: bool = False

    @property
    def fell_back(self):
        return bool(self.fallbacks)


class FillOutcome(NamedTuple):
    values: np.ndarray
    clamped: bool = False
    std: Optional[np.ndarray] = None


def _auto_lengths(period):
    template = max(2, int(round(constants.TEMPLATE_CYCLES * period)))
    subsignal = max(2, int(round(constants.SUBSIGNAL_CYCLES * period)))
    embed = max(2, int(round(constants.EMBEDDING_RATIO * subsignal)))
    return template, subsignal, embed


def _median_distance(vectors, seed=0):
    if vectors.shape[0] > constants.MEDIAN_HEURISTIC_SAMPLES:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(vectors.shape[0], constants.MEDIAN_HEURISTIC_SAMPLES, replace=False))
        vectors = vectors[keep]
    if vectors.shape[0] < 2:
        return 1.0
    median = float(np.median(pdist(vectors)))
    return median if median > 0 else 1.0


def auto_tune(signal, period=None, method=None, seed=0):
    if period is None:
        period = estimate_average_period(signal)
    if not period >= 2:
        raise InvalidInputError("Average period must be at least 2 samples, got {}".format(period))
    template, subsignal, embed = _auto_lengths(period)
    kernel_size = 1.0
    if signal.n >= embed:
        windows = sliding_window_view(signal.samples, embed)
        windows = windows[np.all(np.isfinite(windows), axis=1)]
        kernel_size = _median_distance(windows, seed)
    return ImputerConfig(
        method=method or conf.HALI_DEFAULT_METHOD,
        template_len=template,
        embed_dim=embed,
        subsignal_len=subsignal,
        kernel_size=kernel_size,
        cycles_for_seasonality=constants.SEASONAL_CYCLES_DEFAULT,
        auto=True,
        period=float(period),
        seed=seed,
    ).validate()


def _resolve(signal, config):
    config = (config or ImputerConfig()).validate()
    if config.is_resolved:
        return config
    tuned = auto_tune(signal, config.period, config.method, config.seed)
    return replace(
        config,
        template_len=config.template_len or tuned.template_len,
        embed_dim=config.embed_dim or tuned.embed_dim,
        subsignal_len=config.subsignal_len or tuned.subsignal_len,
        kernel_size=config.kernel_size or tuned.kernel_size,
        period=tuned.period,
        auto=config.auto and not any((config.template_len, config.embed_dim, config.subsignal_len)),
    )


def _finite_run_before(work, start):
    gaps = np.flatnonzero(~np.isfinite(work[:start]))
    return start - (gaps[-1] + 1) if gaps.size else start


def _clamp(values, reference):
    limit = constants.DIVERGENCE_FACTOR * max(float(np.max(np.abs(reference))), np.finfo(float).tiny)
    safe = np.clip(np.nan_to_num(values, nan=0.0, posinf=limit, neginf=-limit), -limit, limit)
    clamped = not np.array_equal(safe, values)
    if clamped:
        logger.warning("Forecast diverged beyond %.3g and was clamped", limit)
    return safe, clamped


class BaseImputer:
    method = None
    reverse_order = False

    def fill(self, work, interval):
        raise NotImplementedError

    def order(self, intervals):
        return sorted(intervals, reverse=self.reverse_order)

    def impute(self, signal, intervals):
        intervals = validate_intervals(intervals, signal.n)
        work = signal.to_array()
        for interval in self.order(intervals):
            work[interval.as_slice()] = self.fill(work, interval).values
        missing = np.array(signal.missing) & ~intervals_mask(intervals, signal.n)
        return signal.with_samples(work, missing)


class LinearInterpolator(BaseImputer):
    method = constants.METHOD_LINEAR

    def fill(self, work, interval):
        known = np.flatnonzero(np.isfinite(work))
        if known.size == 0:
            raise InvalidInputError("Cannot interpolate a signal without observed samples")
        index = np.arange(interval.start, interval.stop)
        return FillOutcome(np.interp(index, known, work[known]))


class TakensLagMap(BaseImputer):
    """Copy the in-record segment whose flanks best match the gap's flanks.

    The left template holds the ``d`` samples before the gap and the right
    template the ``d - 1`` samples after it, skipping the first sample after
    the gap. A flank that leaves the record or touches another gap is dropped
    and the match uses the remaining flank only.
    """

    method = constants.METHOD_TLM

    def __init__(self, template_len):
        if int(template_len) != template_len or template_len < 2:
            raise InvalidInputError("TLM template length must be an integer >= 2")
        self.template_len = int(template_len)

    def fill(self, work, interval):
        d, length, n = self.template_len, interval.length, work.size
        span = 2 * d + length
        if n < span:
            raise ImputerInfeasibleError("Record shorter than one TLM window of {} samples".format(span))

        left = work[interval.start - d:interval.start] if interval.start >= d else None
        right_start = interval.stop + 1
        right = work[right_start:right_start + d - 1] if right_start + d - 1 <= n else None
        use_left = left is not None and np.all(np.isfinite(left))
        use_right = right is not None and np.all(np.isfinite(right))
        if not (use_left or use_right):
            raise ImputerInfeasibleError(
                "Interval {} has no complete template on either side".format(tuple(interval))
            )

        n_candidates = n - span + 1
        distance = np.zeros(n_candidates)
        if use_left:
            windows = sliding_window_view(work, d)[:n_candidates]
            distance += np.sum((windows - left) ** 2, axis=1)
        if use_right:
            windows = sliding_window_view(work, d - 1)[d + length + 1:d + length + 1 + n_candidates]
            distance += np.sum((windows - right) ** 2, axis=1)
        broken = np.convolve(~np.isfinite(work), np.ones(span, dtype=int), mode="valid") > 0
        distance[broken | ~np.isfinite(distance)] = np.inf
        best = int(np.argmin(distance))
        if not np.isfinite(distance[best]):
            raise ImputerInfeasibleError(
                "No complete {}-sample window to match interval {}".format(span, tuple(interval))
            )
        logger.debug("TLM interval %s matched window at %d", tuple(interval), best)
        return FillOutcome(np.array(work[best + d:best + d + length]))


def _snapshots(history, embed_dim):
    x = sliding_window_view(history[:-1], embed_dim).T
    y = sliding_window_view(history[1:], embed_dim).T
    return x, y


class _DynamicsForecaster(BaseImputer):
    """Fit the shift dynamics of delay vectors left of the gap and roll them forward.

    Delay vectors have ``embed_dim`` samples and ``subsignal_len`` of them form
    the snapshot matrices. When less history is available both shrink in
    proportion.
    """

    def __init__(self, embed_dim, subsignal_len, seed=0):
        self.embed_dim = int(embed_dim)
        self.subsignal_len = int(subsignal_len)
        self.seed = seed

    def dimensions(self, available):
        wanted = self.embed_dim + self.subsignal_len
        if available >= wanted:
            return self.embed_dim, self.subsignal_len
        ratio = available / wanted
        embed, count = int(self.embed_dim * ratio), int(self.subsignal_len * ratio)
        if embed < 2 or count < 2:
            raise ImputerInfeasibleError(
                "Only {} contiguous samples precede the gap, {} wanted".format(available, wanted)
            )
        logger.debug("Shrinking delay embedding to %d x %d", embed, count)
        return embed, count

    def history(self, work, interval):
        embed, count = self.dimensions(_finite_run_before(work, interval.start))
        return work[interval.start - embed - count:interval.start], embed

    def forecast(self, history, embed_dim, steps):
        raise NotImplementedError

    def fill(self, work, interval):
        history, embed = self.history(work, interval)
        with np.errstate(over="ignore", invalid="ignore"):
            values = self.forecast(history, embed, interval.length)
        values, clamped = _clamp(values, history)
        return FillOutcome(values, clamped)


def _roll(step, state, steps):
    values = np.empty(steps)
    for index in range(steps):
        state = step(state)
        values[index] = state[-1]
    return values


class LeastSquaresForecaster(_DynamicsForecaster):
    method = constants.METHOD_LSE

    def forecast(self, history, embed_dim, steps):
        x, y = _snapshots(history, embed_dim)
        transposed, _, rank, _ = linalg.lstsq(x.T, y.T, cond=constants.PINV_RCOND)
        if rank == 0:
            raise ImputerInfeasibleError("Snapshot matrix has rank zero")
        return _roll(lambda state: state @ transposed, history[-embed_dim:], steps)


def _exact_dmd(x, y):
    u, s, vh = linalg.svd(x, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise ImputerInfeasibleError("Snapshot matrix has rank zero")
    rank = int(np.sum(s >= constants.PINV_RCOND * s[0]))
    u, s, v = u[:, :rank], s[:rank], vh[:rank].conj().T
    reduced = u.T @ y @ v / s
    eigenvalues, eigenvectors = linalg.eig(reduced)
    modes = (y @ v / s) @ eigenvectors
    return eigenvalues, eigenvectors, modes, u


class DmdForecaster(_DynamicsForecaster):
    method = constants.METHOD_DMD

    def forecast(self, history, embed_dim, steps):
        x, y = _snapshots(history, embed_dim)
        eigenvalues, eigenvectors, modes, u = _exact_dmd(x, y)
        amplitudes = np.linalg.lstsq(eigenvectors, u.T @ history[-embed_dim:], rcond=None)[0]
        powers = eigenvalues[None, :] ** np.arange(steps)[:, None]
        return (powers * (modes[-1] * amplitudes)).sum(axis=1).real


def dmd_eigenvalues(series, embed_dim, subsignal_len):
    series = np.asarray(series, dtype=float)
    if series.size < embed_dim + subsignal_len:
        raise InvalidInputError("Series needs at least {} samples".format(embed_dim + subsignal_len))
    x, y = _snapshots(series[-(embed_dim + subsignal_len):], embed_dim)
    return _exact_dmd(x, y)[0]


class KernelEdmdForecaster(_DynamicsForecaster):
    """Kernel EDMD with k(a, b) = exp(-||a - b|| / kernel_size).

    The Koopman estimate lives in the span of the training snapshots, truncated
    to the numerical rank of their Gram matrix.
    """

    method = constants.METHOD_EDMD

    def __init__(self, embed_dim, subsignal_len, kernel_size=None, seed=0):
        super().__init__(embed_dim, subsignal_len, seed)
        self.kernel_size = kernel_size

    def kernel(self, a, b, width):
        return np.exp(-cdist(a, b) / width)

    def forecast(self, history, embed_dim, steps):
        x, y = _snapshots(history, embed_dim)
        points, targets = x.T, y.T
        width = self.kernel_size or _median_distance(points, self.seed)
        gram = self.kernel(points, points, width)
        cross = self.kernel(targets, points, width)
        weights, basis = linalg.eigh(gram)
        keep = weights > constants.PINV_RCOND * weights.max()
        if not keep.any():
            raise ImputerInfeasibleError("Kernel Gram matrix has rank zero")
        root = np.sqrt(weights[keep])
        basis = basis[:, keep]
        koopman = (basis / root).T @ cross @ (basis / root)
        eigenvalues, eigenvectors = linalg.eig(koopman)
        projection = (basis / root) @ eigenvectors
        modes = np.linalg.pinv((basis * root) @ eigenvectors, rcond=constants.PINV_RCOND) @ points

        def step(state):
            observables = self.kernel(state[None, :].real, points, width) @ projection
            return ((observables * eigenvalues) @ modes)[0].real

        return _roll(step, history[-embed_dim:], steps)


class GaussianProcessForecaster(_DynamicsForecaster):
    """One-step GPR on delay vectors, rolled forward on its own predictions.

    Hyperparameters are fixed: unit signal variance on standardised targets, a
    median-distance length scale and a noise ratio of 1e-2. ``std`` in the
    outcome is the one-step predictive variance plus the covariance of the
    predicted part of the delay vector, carried through the linearised mean.
    """

    method = constants.METHOD_GPR

    def build(self, inputs, targets):
        length_scale = _median_distance(inputs, self.seed)
        kernel = (
            ConstantKernel(1.0, constant_value_bounds="fixed")
            * RBF(length_scale=length_scale, length_scale_bounds="fixed")
            + WhiteKernel(noise_level=constants.GPR_NOISE_RATIO, noise_level_bounds="fixed")
        )
        jitter = constants.GPR_JITTER_START
        while jitter <= constants.GPR_JITTER_MAX * (1 + 1e-9):
            model = GaussianProcessRegressor(kernel=kernel, alpha=jitter, optimizer=None, normalize_y=False)
            try:
                return model.fit(inputs, targets)
            except np.linalg.LinAlgError:
                logger.debug("GPR Gram matrix not positive definite at jitter %.0e", jitter)
                jitter *= 10.0
        raise ImputerInfeasibleError("GPR Gram matrix is not positive definite even with jitter")

    def forecast_with_std(self, history, embed_dim, steps):
        x, y = _snapshots(history, embed_dim)
        offset = float(np.mean(y[-1]))
        scale = float(np.std(y[-1])) or 1.0
        model = self.build(x.T, (y[-1] - offset) / scale)
        rbf = model.kernel_.k1
        length_scale = float(rbf.k2.length_scale)

        state = np.array(history[-embed_dim:], dtype=float)
        covariance = np.zeros((embed_dim, embed_dim))
        means, stds = np.empty(steps), np.empty(steps)
        for index in range(steps):
            mean, std = model.predict(state[None, :], return_std=True)
            weights = rbf(state[None, :], model.X_train_)[0] * model.alpha_
            gradient = scale * (weights @ model.X_train_ - weights.sum() * state) / length_scale ** 2
            spread = covariance @ gradient
            variance = (scale * std[0]) ** 2 + gradient @ spread
            means[index], stds[index] = offset + scale * mean[0], np.sqrt(variance)
            covariance = np.block([
                [covariance[1:, 1:], spread[1:, None]],
                [spread[None, 1:], np.array([[variance]])],
            ])
            state = np.append(state[1:], means[index])
        return means, stds

    def forecast(self, history, embed_dim, steps):
        return self.forecast_with_std(history, embed_dim, steps)[0]

    def fill(self, work, interval):
        history, embed = self.history(work, interval)
        means, std = self.forecast_with_std(history, embed, interval.length)
        values, clamped = _clamp(means, history)
        return FillOutcome(values, clamped, std)


def estimate_seasonality(phase, interval, side, n_c=constants.SEASONAL_CYCLES_DEFAULT):
    """Mean length of the ``n_c`` complete cycles next to ``interval``.

    Sample ``n`` belongs to cycle ``k`` when ``k - 1 < phase[n] <= k``; the
    partial cycles at the record edge and at the gap are not counted.
    """
    phase = np.asarray(phase, dtype=float)
    if side == constants.SIDE_BEFORE:
        cycles = np.ceil(phase[:interval.start])
        if cycles.size == 0:
            raise SeasonalityError("No samples before interval {}".format(tuple(interval)))
        edge, gap = cycles[0], np.ceil(phase[interval.start])
        labels, counts = np.unique(cycles, return_counts=True)
        lengths = counts[(labels > edge) & (labels < gap)][-n_c:]
    elif side == constants.SIDE_AFTER:
        cycles = np.ceil(phase[interval.stop:])
        if cycles.size == 0:
            raise SeasonalityError("No samples after interval {}".format(tuple(interval)))
        gap, edge = np.ceil(phase[interval.stop - 1]), cycles[-1]
        labels, counts = np.unique(cycles, return_counts=True)
        lengths = counts[(labels > gap) & (labels < edge)][:n_c]
    else:
        raise InvalidInputError("Side must be {!r} or {!r}".format(constants.SIDE_BEFORE, constants.SIDE_AFTER))
    if lengths.size < n_c:
        raise SeasonalityError(
            "Only {} complete cycles {} interval {}, {} needed".format(lengths.size, side, tuple(interval), n_c)
        )
    return max(2, int(round(lengths.mean())))


def _seasonal_lag_sets(seasonality):
    for p in range(1, constants.SAR_MAX_P + 1):
        for seasonal_p in range(1, constants.SAR_MAX_SEASONAL_P + 1):
            yield sorted({*range(1, p + 1), *(seasonality * k for k in range(1, seasonal_p + 1))})


def _aicc(results):
    k = len(results.params) + 1
    slack = results.nobs - k - 1
    if slack <= 0:
        return np.nan
    return -2.0 * results.llf + 2.0 * k + 2.0 * k * (k + 1) / slack


def _root_radius(results):
    roots = np.asarray(results.roots)
    return float(np.max(1.0 / np.abs(roots))) if roots.size else 0.0


def _fit_seasonal_ar(history, seasonality):
    """Fit each candidate lag set with ``AutoReg``; return the stable fit with the lowest AICc.

    All candidates share the same hold-back so their criteria are comparable.
    """
    hold_back = max(constants.SAR_MAX_P, constants.SAR_MAX_SEASONAL_P * seasonality)
    fits = []
    with np.errstate(divide="ignore", invalid="ignore"):
        for lags in _seasonal_lag_sets(seasonality):
            try:
                results = AutoReg(history, lags=lags, trend="c", hold_back=hold_back).fit()
            except (ValueError, np.linalg.LinAlgError) as exc:
                logger.debug("Seasonal AR with lags %s failed: %s", lags, exc)
                continue
            score = _aicc(results)
            if not np.isnan(score):
                fits.append((score, lags, results))
    if not fits:
        raise ImputerInfeasibleError("Too little history to fit a seasonal AR model")

    fits.sort(key=lambda fit: fit[0])
    radii = []
    for score, lags, results in fits:
        radius = _root_radius(results)
        if radius <= constants.SAR_STABILITY_LIMIT:
            logger.debug("Seasonal AR lags %s, AICc %.3f, root radius %.3f", lags, score, radius)
            return results
        radii.append(radius)
    raise ImputerInfeasibleError("Every seasonal AR fit is unstable (smallest root radius {:.3f})".format(min(radii)))


class SeasonalArForecaster(BaseImputer):
    """Seasonal AR fitted by conditional least squares next to each gap.

    The backward direction fits the samples after the gap in reversed time and
    processes intervals from right to left.
    """

    def __init__(self, direction=constants.DIRECTION_FORWARD, seasonality=None, phase=None, period=None,
                 n_c=constants.SEASONAL_CYCLES_DEFAULT):
        if direction not in (constants.DIRECTION_FORWARD, constants.DIRECTION_BACKWARD):
            raise InvalidInputError("Unknown direction {!r}".format(direction))
        self.direction = direction
        self.seasonality = seasonality
        self.phase = phase
        self.period = period
        self.n_c = n_c

    @property
    def backward(self):
        return self.direction == constants.DIRECTION_BACKWARD

    @property
    def method(self):
        return constants.METHOD_SAR_BACKWARD if self.backward else constants.METHOD_SAR_FORWARD

    @property
    def reverse_order(self):
        return self.backward

    def seasonality_for(self, interval):
        if self.seasonality:
            return int(self.seasonality)
        if self.phase is not None:
            side = constants.SIDE_AFTER if self.backward else constants.SIDE_BEFORE
            try:
                return estimate_seasonality(self.phase, interval, side, self.n_c)
            except SeasonalityError as exc:
                logger.debug("Seasonality falls back to the average period: %s", exc)
        if self.period:
            return max(2, int(round(self.period)))
        raise ImputerInfeasibleError("No seasonality available for interval {}".format(tuple(interval)))

    def fill(self, work, interval):
        seasonality = self.seasonality_for(interval)
        series = work[::-1] if self.backward else work
        start = work.size - interval.stop if self.backward else interval.start
        available = _finite_run_before(series, start)
        if available < 3 * seasonality:
            raise ImputerInfeasibleError(
                "Interval {} has {} usable samples, seasonal AR needs {}".format(
                    tuple(interval), available, 3 * seasonality
                )
            )
        history = series[start - min(available, constants.SAR_HISTORY_CYCLES * seasonality):start]
        results = _fit_seasonal_ar(history, seasonality)
        values = np.asarray(results.forecast(interval.length), dtype=float)
        return FillOutcome(values[::-1] if self.backward else values)


def get_imputer(method, config, phase=None):
    if method == constants.METHOD_TLM:
        return TakensLagMap(config.template_len)
    if method == constants.METHOD_LSE:
        return LeastSquaresForecaster(config.embed_dim, config.subsignal_len)
    if method == constants.METHOD_DMD:
        return DmdForecaster(config.embed_dim, config.subsignal_len)
    if method == constants.METHOD_EDMD:
        return KernelEdmdForecaster(config.embed_dim, config.subsignal_len, config.kernel_size, config.seed)
    if method == constants.METHOD_GPR:
        return GaussianProcessForecaster(config.embed_dim, config.subsignal_len, config.seed)
    if method in (constants.METHOD_SAR_FORWARD, constants.METHOD_SAR_BACKWARD):
        direction = (
            constants.DIRECTION_BACKWARD if method == constants.METHOD_SAR_BACKWARD
            else constants.DIRECTION_FORWARD
        )
        return SeasonalArForecaster(direction, config.seasonality, phase, config.period,
                                    config.cycles_for_seasonality)
    if method == constants.METHOD_LINEAR:
        return LinearInterpolator()
    raise InvalidInputError("Unknown imputation method {!r}".format(method))


def impute_tlm(signal, intervals, d):
    return TakensLagMap(d).impute(signal, intervals)


def impute_dynamics(signal, intervals, variant, config=None):
    if variant not in constants.DYNAMICS_VARIANTS:
        raise InvalidInputError("Unknown dynamics variant {!r}, expected one of {}".format(
            variant, constants.DYNAMICS_VARIANTS))
    config = _resolve(signal, config)
    return get_imputer(variant, config).impute(signal, intervals)


def impute_gpr(signal, intervals, config=None, return_std=False):
    config = _resolve(signal, config)
    imputer = GaussianProcessForecaster(config.embed_dim, config.subsignal_len, config.seed)
    intervals = validate_intervals(intervals, signal.n)
    work = signal.to_array()
    stds = []
    for interval in intervals:
        outcome = imputer.fill(work, interval)
        work[interval.as_slice()] = outcome.values
        stds.append(outcome.std)
    missing = np.array(signal.missing) & ~intervals_mask(intervals, signal.n)
    imputed = signal.with_samples(work, missing)
    return (imputed, stds) if return_std else imputed


def impute_sar(signal, intervals, direction, seasonality, config=None):
    n_c = config.cycles_for_seasonality if config else constants.SEASONAL_CYCLES_DEFAULT
    return SeasonalArForecaster(direction, seasonality=seasonality, n_c=n_c).impute(signal, intervals)


def _seasonal_phase(signal, config):
    filled = LinearInterpolator().impute(signal, detect_missing_intervals(signal, 1))
    decomposition = harmonic_decompose(filled, 1, DecompositionParams(d_max=1, period=config.period))
    return decomposition.components[0].fundamental_phase


def initial_imputation(signal, intervals, config=None):
    """Fill every interval with the configured method, falling back to LSE then linear.

    Returns the imputed signal and one ``IntervalRecord`` per interval.
    """
    config = _resolve(signal, config)
    intervals = validate_intervals(intervals, signal.n)
    chain = [config.method]
    for method in (constants.METHOD_LSE, constants.METHOD_LINEAR):
        if method not in chain:
            chain.append(method)

    phase = None
    if config.method in (constants.METHOD_SAR_FORWARD, constants.METHOD_SAR_BACKWARD) and not config.seasonality:
        try:
            phase = _seasonal_phase(signal, config)
        except ComputationError as exc:
            logger.warning("Seasonality estimation failed, using the average period: %s", exc)

    imputers = {}
    primary = get_imputer(config.method, config, phase)
    work = signal.to_array()
    records = []
    for interval in primary.order(intervals):
        fallbacks = []
        for method in chain:
            if method not in imputers:
                imputers[method] = primary if method == config.method else get_imputer(method, config, phase)
            try:
                outcome = imputers[method].fill(work, interval)
            except (ComputationError, np.linalg.LinAlgError) as exc:
                logger.warning("Interval %s: %s failed (%s), falling back", tuple(interval), method, exc)
                fallbacks.append((method, str(exc)))
                continue
            work[interval.as_slice()] = outcome.values
            records.append(IntervalRecord(interval, config.method, method, tuple(fallbacks), outcome.clamped))
            break
    records.sort(key=lambda record: record.interval)

    missing = np.array(signal.missing) & ~intervals_mask(intervals, signal.n)
    return signal.with_samples(work, missing), records
