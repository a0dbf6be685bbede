"""Harmonic level interpolation: the end-to-end imputation pipeline."""
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from hali import conf, constants
from hali.exceptions import ComputationError, InvalidConfigError, InvalidInputError
from hali.imputers import (
    ImputerConfig,
    IntervalRecord,
    LinearInterpolator,
    initial_imputation,
)
from hali.signal_core import (
    Signal,
    detect_missing_intervals,
    estimate_average_period,
    fill_short_gaps,
    intervals_mask,
    mask_signal,
    validate_intervals,
)
from hali.tfa import DecompositionParams, HarmonicDecomposition, harmonic_decompose


__all__ = [
    "HaliParams",
    "ImputationResult",
    "resolve_scheme",
    "interpolate_1d",
    "clip_and_interpolate",
    "harmonic_level_interpolation",
    "hali_impute",
]

logger = logging.getLogger(__name__)

MIN_KNOTS = {
    constants.SCHEME_SPLINE: 4,
    constants.SCHEME_PCHIP: 2,
}


def resolve_scheme(scheme):
    """Accept either the full scheme name or its one-letter flag."""
    scheme = constants.SCHEME_FLAGS.get(scheme, scheme)
    if scheme not in constants.SCHEMES:
        raise InvalidInputError("Unknown interpolation scheme {!r}".format(scheme))
    return scheme


def _interpolant(knot_x, knot_y, scheme):
    if scheme == constants.SCHEME_SPLINE:
        return CubicSpline(knot_x, knot_y, bc_type="not-a-knot", extrapolate=True)
    return PchipInterpolator(knot_x, knot_y, extrapolate=True)


def interpolate_1d(knot_x, knot_y, query_x, scheme=constants.SCHEME_PCHIP):
    scheme = resolve_scheme(scheme)
    knot_x = np.asarray(knot_x, dtype=float)
    knot_y = np.asarray(knot_y, dtype=float)
    query_x = np.asarray(query_x, dtype=float)
    if knot_x.ndim != 1 or knot_x.shape != knot_y.shape:
        raise InvalidInputError("Knot abscissae and values must be 1-D arrays of equal length")
    if knot_x.size < MIN_KNOTS[scheme]:
        raise InvalidInputError("{} needs at least {} knots, got {}".format(scheme, MIN_KNOTS[scheme], knot_x.size))
    if np.any(np.diff(knot_x) <= 0):
        raise InvalidInputError("Knots must be strictly increasing")
    if query_x.size and (query_x.min() < knot_x[0] or query_x.max() > knot_x[-1]):
        raise InvalidInputError("Queries must lie within the knot range")
    return _interpolant(knot_x, knot_y, scheme)(query_x)


def clip_and_interpolate(series, intervals, guard=0, scheme=constants.SCHEME_PCHIP):
    """Discard ``series`` over each interval widened by ``guard`` and refill it.

    Discarded samples at the record edges are extrapolated from the nearest
    knots. With fewer knots than the scheme needs the refill is linear.
    """
    scheme = resolve_scheme(scheme)
    series = np.asarray(series, dtype=float)
    if guard < 0:
        raise InvalidInputError("Guard must be non-negative")
    intervals = validate_intervals(intervals, series.size)
    if not intervals:
        return np.array(series)

    discard = np.zeros(series.size, dtype=bool)
    for interval in intervals:
        discard[max(0, interval.start - guard):min(series.size, interval.stop + guard)] = True
    knots = np.flatnonzero(~discard)
    queries = np.flatnonzero(discard)
    refilled = np.array(series)
    if knots.size == 0:
        raise InvalidInputError("No samples left to interpolate from after clipping")
    if knots.size < MIN_KNOTS[scheme]:
        logger.warning("Only %d knots for %s, falling back to linear interpolation", knots.size, scheme)
        refilled[queries] = np.interp(queries, knots, series[knots])
    else:
        refilled[queries] = _interpolant(knots, series[knots], scheme)(queries)
    return refilled


@dataclass(frozen=True)
class HaliParams:
    min_gap: int = conf.HALI_MIN_GAP
    guard: Optional[int] = None
    imputer: ImputerConfig = field(default_factory=ImputerConfig)
    decomposition: DecompositionParams = field(default_factory=DecompositionParams)

    def validate(self):
        if int(self.min_gap) != self.min_gap or self.min_gap < 1:
            raise InvalidConfigError("min_gap must be an integer >= 1")
        if self.guard is not None and (int(self.guard) != self.guard or self.guard < 0):
            raise InvalidConfigError("guard must be a non-negative integer")
        self.imputer.validate()
        self.decomposition.validate()
        return self


@dataclass(frozen=True, eq=False)
class ImputationResult:
    final: Signal
    initial: Signal
    decomposition: Optional[HarmonicDecomposition]
    records: List[IntervalRecord]
    denoised: Optional[Signal]
    intervals: list = field(default_factory=list)
    scheme: str = constants.SCHEME_PCHIP
    degraded: bool = False

    @property
    def methods_used(self):
        return [record.used for record in self.records]


def harmonic_level_interpolation(initial, decomposition, intervals, scheme=constants.SCHEME_PCHIP, guard=None):
    """Interpolate every amplitude, phase and the trend across the gaps.

    Returns the final signal, equal to ``initial`` off the gaps, and the
    full-record resynthesis from the interpolated series.
    """
    scheme = resolve_scheme(scheme)
    intervals = validate_intervals(intervals, initial.n)
    guard = decomposition.window_halfwidth_bins if guard is None else int(guard)

    harmonics = np.zeros(initial.n)
    for component in decomposition.components:
        for amplitude, phase in zip(component.amplitudes, component.phases):
            amplitude = np.maximum(clip_and_interpolate(amplitude, intervals, guard, scheme), 0.0)
            phase = clip_and_interpolate(phase, intervals, guard, scheme)
            harmonics += amplitude * np.cos(2.0 * np.pi * phase)
    denoised = harmonics + clip_and_interpolate(decomposition.trend, intervals, guard, scheme)

    gaps = intervals_mask(intervals, initial.n)
    final = np.where(gaps, denoised, initial.samples)
    return Signal(final, initial.fs), Signal(denoised, initial.fs)


def _degraded(initial, records, intervals, scheme):
    return ImputationResult(initial, initial, None, records, None, intervals, scheme, degraded=True)


def hali_impute(signal, intervals=None, K=1, initial_method=None, scheme=None, params=None):
    """Impute the missing intervals of ``signal`` at the harmonic level.

    Invalid arguments raise. Once the input is accepted the call does not
    abort: if the period estimate, the initial imputation or the
    decomposition fails, or any interval needs the linear fallback, the
    initial (or linear) imputation comes back with ``degraded`` set.
    """
    params = (params or HaliParams()).validate()
    scheme = resolve_scheme(scheme or conf.HALI_DEFAULT_SCHEME)

    completed = fill_short_gaps(signal, params.min_gap)
    if intervals is None:
        intervals = detect_missing_intervals(completed, params.min_gap)
    else:
        intervals = validate_intervals(intervals, signal.n)
        completed = mask_signal(completed, intervals)
        if np.any(completed.missing & ~intervals_mask(intervals, signal.n)):
            raise InvalidInputError("Signal has missing samples outside the declared intervals")
    if not intervals:
        logger.info("No missing intervals, returning the input unchanged")
        return ImputationResult(completed, completed, None, [], None, [], scheme)

    imputer = params.imputer
    if initial_method:
        imputer = replace(imputer, method=initial_method)
    try:
        if imputer.period is None:
            imputer = replace(imputer, period=estimate_average_period(completed))
        initial, records = initial_imputation(completed, intervals, imputer)
    except (ComputationError, InvalidInputError) as exc:
        logger.warning("Initial imputation failed, interpolating linearly: %s", exc)
        initial = LinearInterpolator().impute(completed, intervals)
        records = [
            IntervalRecord(interval, imputer.method, constants.METHOD_LINEAR, ((imputer.method, str(exc)),))
            for interval in intervals
        ]
        return _degraded(initial, records, intervals, scheme)

    linear = [record.interval for record in records if record.used == constants.METHOD_LINEAR != record.requested]
    if linear:
        logger.warning("%d interval(s) fell back to linear interpolation, skipping the harmonic stage: %s",
                       len(linear), ", ".join("({}, {})".format(i.start, i.length) for i in linear))
        return _degraded(initial, records, intervals, scheme)

    decomposition_params = params.decomposition
    if decomposition_params.period is None:
        decomposition_params = replace(decomposition_params, period=imputer.period)
    try:
        decomposition = harmonic_decompose(initial, K, decomposition_params)
    except (ComputationError, InvalidInputError) as exc:
        logger.warning("Harmonic decomposition failed, keeping the initial imputation: %s", exc)
        return _degraded(initial, records, intervals, scheme)

    final, denoised = harmonic_level_interpolation(initial, decomposition, intervals, scheme, params.guard)
    logger.info("Imputed %d intervals (%d samples) with %s and %s", len(intervals),
                sum(interval.length for interval in intervals), imputer.method, scheme)
    return ImputationResult(final, initial, decomposition, records, denoised, intervals, scheme)
