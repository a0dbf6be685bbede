"""CSV signal files, interval files, per-harmonic tables and the flat config file."""
import logging
import glob
import os
from typing import List, NamedTuple

import numpy as np
import pandas as pd

from hali.exceptions import InvalidConfigError, InvalidInputError
from hali.signal_core import (
    MissingInterval,
    Signal,
    detect_missing_intervals,
    validate_intervals,
)


__all__ = [
    "read_signal_csv",
    "write_signal_csv",
    "read_intervals_csv",
    "write_intervals_csv",
    "write_harmonic_csv",
    "write_decomposition_csv",
    "read_config_file",
    "CorpusEntry",
    "read_corpus",
]

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
NA_REP = "NaN"
TRUTH_SUFFIX = "_truth.csv"
MASKED_SUFFIX = "_masked.csv"
INTERVALS_SUFFIX = "_intervals.csv"


def read_signal_csv(path, fs=None):
    """Read a ``time,value`` or single ``value`` column CSV.

    ``fs`` is required for ``value``-only files; with a time column it is
    derived from the median sample spacing when not given.
    """
    if not os.path.exists(path):
        raise InvalidInputError("Signal file {} does not exist".format(path))
    try:
        frame = pd.read_csv(path, na_values=[NA_REP], keep_default_na=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise InvalidInputError("Cannot parse signal file {}: {}".format(path, exc))

    columns = [str(column).strip().lower() for column in frame.columns]
    if "value" not in columns:
        raise InvalidInputError("Signal file {} has no 'value' column".format(path))
    values = pd.to_numeric(frame.iloc[:, columns.index("value")], errors="coerce").to_numpy(dtype=float)

    if fs is None:
        if "time" not in columns:
            raise InvalidInputError("Signal file {} has no time column; pass the sampling rate".format(path))
        times = pd.to_numeric(frame.iloc[:, columns.index("time")], errors="coerce").to_numpy(dtype=float)
        spacing = np.diff(times[np.isfinite(times)])
        if spacing.size == 0 or not np.median(spacing) > 0:
            raise InvalidInputError("Cannot derive a sampling rate from the time column of {}".format(path))
        fs = 1.0 / float(np.median(spacing))
    logger.debug("Read %d samples from %s at fs=%g", values.size, path, fs)
    return Signal.from_values(values, fs)


def write_signal_csv(path, signal, with_time=True):
    data = {"value": signal.samples}
    if with_time:
        data = {"time": signal.times, "value": signal.samples}
    pd.DataFrame(data).to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep=NA_REP)
    logger.debug("Wrote %d samples to %s", signal.n, path)


def read_intervals_csv(path, n=None):
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InvalidInputError("Cannot read interval file {}: {}".format(path, exc))
    if not {"start", "length"} <= set(frame.columns):
        raise InvalidInputError("Interval file {} needs 'start' and 'length' columns".format(path))
    intervals = [MissingInterval(int(start), int(length)) for start, length in zip(frame["start"], frame["length"])]
    return validate_intervals(intervals, n) if n is not None else intervals


def write_intervals_csv(path, intervals):
    frame = pd.DataFrame([tuple(interval) for interval in intervals], columns=["start", "length"])
    frame.to_csv(path, index=False)


def write_harmonic_csv(path, times, series, prefix):
    """One column per harmonic (``<prefix>_k<component>_l<harmonic>``) next to time.

    ``series`` maps (component, harmonic) pairs to arrays.
    """
    data = {"time": times}
    for (component, harmonic), values in sorted(series.items()):
        data["{}_k{}_l{}".format(prefix, component, harmonic)] = values
    pd.DataFrame(data).to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep=NA_REP)


def read_config_file(path):
    """Parse flat ``key = value`` lines; ``#`` starts a comment.

    Keys are normalised to underscores so ``min-gap`` and ``min_gap`` agree.
    """
    options = {}
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise InvalidConfigError("Cannot read config file {}: {}".format(path, exc))
    for number, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, separator, value = line.partition("=")
        key = key.strip().lstrip("-").replace("-", "_")
        if not separator or not key:
            raise InvalidConfigError("{}:{}: expected 'key = value'".format(path, number))
        if key in options:
            raise InvalidConfigError("{}:{}: duplicate key {!r}".format(path, number, key))
        options[key] = value.strip()
    return options


def write_decomposition_csv(prefix, decomposition, times):
    """Write ``<prefix>_amplitudes.csv``, ``<prefix>_phases.csv`` and ``<prefix>_trend.csv``."""
    amplitudes, phases = {}, {}
    for number, component in enumerate(decomposition.components, start=1):
        for ell in range(1, component.degree + 1):
            amplitudes[(number, ell)] = component.amplitudes[ell - 1]
            phases[(number, ell)] = component.phases[ell - 1]
    paths = ["{}_{}.csv".format(prefix, name) for name in ("amplitudes", "phases", "trend")]
    write_harmonic_csv(paths[0], times, amplitudes, "amplitude")
    write_harmonic_csv(paths[1], times, phases, "phase")
    pd.DataFrame({"time": times, "trend": decomposition.trend}).to_csv(
        paths[2], index=False, float_format=FLOAT_FORMAT, na_rep=NA_REP
    )
    return paths


class CorpusEntry(NamedTuple):
    name: str
    truth: Signal
    masked: Signal
    intervals: List[MissingInterval]

    @property
    def missing_fraction(self):
        return sum(interval.length for interval in self.intervals) / self.masked.n


def read_corpus(directory, fs=None):
    """Pair every ``<name>_truth.csv`` in ``directory`` with its ``<name>_masked.csv``.

    The gaps come from ``<name>_intervals.csv`` when it exists and from the NaN
    runs of the masked file otherwise, so ``synth`` output can be used as is.
    """
    if not os.path.isdir(directory):
        raise InvalidInputError("Corpus directory {} does not exist".format(directory))
    entries = []
    for truth_path in sorted(glob.glob(os.path.join(directory, "*" + TRUTH_SUFFIX))):
        name = os.path.basename(truth_path)[:-len(TRUTH_SUFFIX)]
        masked_path = os.path.join(directory, name + MASKED_SUFFIX)
        if not os.path.exists(masked_path):
            logger.warning("Skipping %s: %s is missing", truth_path, masked_path)
            continue
        truth, masked = read_signal_csv(truth_path, fs), read_signal_csv(masked_path, fs)
        if truth.has_missing:
            raise InvalidInputError("Reference file {} has missing samples".format(truth_path))
        if truth.n != masked.n or not np.isclose(truth.fs, masked.fs):
            raise InvalidInputError("{} and {} differ in length or sampling rate".format(truth_path, masked_path))

        intervals_path = os.path.join(directory, name + INTERVALS_SUFFIX)
        if os.path.exists(intervals_path):
            intervals = read_intervals_csv(intervals_path, masked.n)
        else:
            intervals = detect_missing_intervals(masked, 1)
        if not intervals:
            raise InvalidInputError("{} has no missing samples to score".format(masked_path))
        entries.append(CorpusEntry(name, truth, masked, intervals))

    if not entries:
        raise InvalidInputError("No <name>{} / <name>{} pairs in {}".format(TRUTH_SUFFIX, MASKED_SUFFIX, directory))
    logger.info("Read %d corpus signals from %s", len(entries), directory)
    return entries
