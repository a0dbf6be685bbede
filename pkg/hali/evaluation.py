"""Error metrics, the Wilcoxon signed-rank test and the synthetic benchmark."""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.stats import norm, rankdata

from hali import conf, constants
from hali.exceptions import (
    DegenerateTestError,
    HaliError,
    InvalidConfigError,
    InvalidInputError,
)
from hali.imputers import auto_tune, initial_imputation
from hali.io import read_corpus
from hali.pipeline import harmonic_level_interpolation, resolve_scheme
from hali.signal_core import (
    Signal,
    SyntheticSpec,
    add_noise,
    apply_missingness,
    estimate_average_period,
    generate_synthetic,
    intervals_mask,
    validate_intervals,
)
from hali.tfa import DecompositionParams, harmonic_decompose


__all__ = [
    "mae",
    "nmae",
    "denoising_mae",
    "wilcoxon_signed_rank",
    "significance_threshold",
    "BenchmarkConfig",
    "SignalOutcome",
    "ReportRow",
    "PairwiseTest",
    "BenchmarkCell",
    "BenchmarkReport",
    "run_benchmark",
    "run_corpus",
    "derive_seeds",
    "write_report_csv",
    "write_raw_csv",
    "format_report_table",
]

logger = logging.getLogger(__name__)

BEST_INITIAL = "best"
HALI = "hali"
NOISELESS_LABEL = "noiseless"


def _values(series):
    return series.samples if isinstance(series, Signal) else np.asarray(series, dtype=float)


def mae(truth, estimate, intervals):
    """Mean absolute error over the union of ``intervals`` only."""
    truth, estimate = _values(truth), _values(estimate)
    if truth.shape != estimate.shape:
        raise InvalidInputError("Truth has {} samples, estimate has {}".format(truth.size, estimate.size))
    mask = intervals_mask(validate_intervals(intervals, truth.size), truth.size)
    if not mask.any():
        raise InvalidInputError("MAE needs at least one missing interval")
    return float(np.mean(np.abs(truth[mask] - estimate[mask])))


def nmae(truth, estimate, intervals):
    values = _values(truth)
    spread = float(np.max(values) - np.min(values))
    if not spread > 0:
        raise InvalidInputError("NMAE is undefined for a truth with zero range")
    return mae(truth, estimate, intervals) / spread


def denoising_mae(truth, result):
    """MAE of the full-record resynthesis against the clean truth."""
    denoised = getattr(result, "denoised", result)
    if denoised is None:
        raise InvalidInputError("Result carries no denoised signal")
    truth, denoised = _values(truth), _values(denoised)
    if truth.shape != denoised.shape:
        raise InvalidInputError("Truth and denoised signal differ in length")
    return float(np.mean(np.abs(truth - denoised)))


def wilcoxon_signed_rank(a, b):
    """Two-sided p-value of the signed-rank test on ``a - b``.

    Zero differences are dropped. Up to 12 pairs the null distribution is
    enumerated over all sign assignments of the (tie-averaged) ranks; above
    that the normal approximation with tie and continuity corrections is used.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInputError("Samples must be 1-D and of equal length")
    differences = a - b
    differences = differences[differences != 0]
    n = differences.size
    if n == 0:
        raise DegenerateTestError("All paired differences are zero")

    ranks = rankdata(np.abs(differences))
    statistic = ranks[differences > 0].sum()
    centre = ranks.sum() / 2.0
    deviation = abs(statistic - centre)
    if n <= constants.WILCOXON_EXACT_MAX_N:
        signs = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
        null = signs @ ranks
        return float(np.mean(np.abs(null - centre) >= deviation - 1e-9))

    _, tie_counts = np.unique(ranks, return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts ** 3 - tie_counts) / 48.0
    if not variance > 0:
        raise DegenerateTestError("Signed-rank statistic has zero variance")
    z = max(deviation - 0.5, 0.0) / np.sqrt(variance)
    return float(min(1.0, 2.0 * norm.sf(z)))


def significance_threshold(alpha=constants.SIGNIFICANCE_ALPHA, m=constants.COMPARISONS_PER_CELL):
    if not 0 < alpha < 1 or m < 1:
        raise InvalidInputError("alpha must lie in (0, 1) and m be at least 1")
    return alpha / m


@dataclass(frozen=True)
class BenchmarkConfig:
    n_signals: int = 100
    p_ms_levels: Tuple[float, ...] = (0.05, 0.10, 0.15, 0.20)
    snr_levels: Tuple[Optional[float], ...] = (constants.NOISELESS, 20.0, 10.0)
    methods: Tuple[str, ...] = constants.INITIAL_METHODS
    schemes: Tuple[str, ...] = constants.SCHEMES
    seed: int = 0
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    n_intervals: int = 3
    components: int = 1
    workers: int = conf.HALI_BENCH_WORKERS
    decomposition: DecompositionParams = field(default_factory=DecompositionParams)
    corpus: Optional[str] = None

    def validate(self):
        if int(self.n_signals) != self.n_signals or self.n_signals < 1:
            raise InvalidConfigError("A benchmark needs at least one signal")
        if not self.p_ms_levels or any(not 0 < p < 0.5 for p in self.p_ms_levels):
            raise InvalidConfigError("Missing fractions must lie in (0, 0.5)")
        if not self.snr_levels:
            raise InvalidConfigError("At least one noise level is required")
        unknown = set(self.methods) - set(constants.INITIAL_METHODS)
        if not self.methods or unknown:
            raise InvalidConfigError("Unknown initial methods: {}".format(sorted(unknown)))
        try:
            schemes = [resolve_scheme(scheme) for scheme in self.schemes]
        except InvalidInputError as exc:
            raise InvalidConfigError(str(exc))
        if not schemes:
            raise InvalidConfigError("At least one interpolation scheme is required")
        if self.n_intervals < 1 or self.components < 1 or self.workers < 1:
            raise InvalidConfigError("n_intervals, components and workers must be positive")
        self.synthetic.validate()
        self.decomposition.validate()
        return replace(self, schemes=tuple(schemes))


def noise_label(snr_db):
    return NOISELESS_LABEL if snr_db is None else "{:g}dB".format(snr_db)


@dataclass(frozen=True)
class SignalOutcome:
    snr_db: Optional[float]
    p_ms: float
    index: int
    method_maes: Dict[str, float] = field(default_factory=dict)
    method_nmaes: Dict[str, float] = field(default_factory=dict)
    best_method: Optional[str] = None
    hali_maes: Dict[str, float] = field(default_factory=dict)
    hali_nmaes: Dict[str, float] = field(default_factory=dict)
    denoising_maes: Dict[str, float] = field(default_factory=dict)
    fallbacks: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    error: str = ""
    name: str = ""

    @property
    def failed(self):
        return bool(self.error)

    @property
    def best_mae(self):
        return self.method_maes.get(self.best_method, np.nan) if self.best_method else np.nan

    @property
    def best_nmae(self):
        return self.method_nmaes.get(self.best_method, np.nan) if self.best_method else np.nan


@dataclass(frozen=True)
class ReportRow:
    snr_db: Optional[float]
    p_ms: float
    method: str
    scheme: str
    maes: Tuple[float, ...]
    failures: int = 0
    wins: int = 0
    denoising_median: float = np.nan
    nmaes: Tuple[float, ...] = ()
    fallbacks: int = 0

    @property
    def median(self):
        return float(np.median(self.maes)) if self.maes else np.nan

    @property
    def nmae_median(self):
        return float(np.median(self.nmaes)) if self.nmaes else np.nan


@dataclass(frozen=True)
class PairwiseTest:
    snr_db: Optional[float]
    p_ms: float
    first: str
    second: str
    p_value: float
    threshold: float

    @property
    def significant(self):
        return bool(self.p_value < self.threshold)


@dataclass(frozen=True)
class BenchmarkCell:
    snr_db: Optional[float]
    p_ms: float
    rows: List[ReportRow]
    tests: List[PairwiseTest]

    @property
    def wins(self):
        return {row.method: row.wins for row in self.rows if row.scheme == "" and row.method != BEST_INITIAL}

    def row(self, method, scheme=""):
        for candidate in self.rows:
            if candidate.method == method and candidate.scheme == scheme:
                return candidate
        raise KeyError((method, scheme))


@dataclass(frozen=True)
class BenchmarkReport:
    config: BenchmarkConfig
    cells: List[BenchmarkCell]
    outcomes: List[SignalOutcome]

    @property
    def rows(self):
        return [row for cell in self.cells for row in cell.rows]

    @property
    def tests(self):
        return [test for cell in self.cells for test in cell.tests]

    @property
    def failures(self):
        return [outcome for outcome in self.outcomes if outcome.failed]


def derive_seeds(seed):
    """Independent noise and missingness seeds for one signal seed."""
    streams = np.random.SeedSequence(seed).spawn(2)
    return tuple(int(stream.generate_state(1)[0]) for stream in streams)


def _nmae_or_nan(truth, estimate, intervals):
    try:
        return nmae(truth, estimate, intervals)
    except InvalidInputError:
        return np.nan


def _empty_scores():
    return {
        "method_maes": {}, "method_nmaes": {}, "hali_maes": {}, "hali_nmaes": {},
        "denoising_maes": {}, "fallbacks": {},
    }


def _score(scores, config, truth, masked, intervals, period, seed, label):
    """Fill ``scores`` for every initial method and for HaLI on the best one.

    A method whose intervals fell back to another method is not scored under
    its own name; it is listed in ``fallbacks`` and cannot win.
    """
    tuned = auto_tune(masked, period, seed=seed)
    initial = {}
    for method in config.methods:
        try:
            imputed, records = initial_imputation(masked, intervals, replace(tuned, method=method))
        except (HaliError, np.linalg.LinAlgError) as exc:
            logger.warning("%s: %s failed: %s", label, method, exc)
            scores["method_maes"][method] = np.nan
            continue
        used = tuple(sorted({record.used for record in records} - {method}))
        if used:
            logger.info("%s: %s fell back to %s and is not ranked", label, method, ", ".join(used))
            scores["method_maes"][method] = np.nan
            scores["fallbacks"][method] = used
            continue
        initial[method] = imputed
        scores["method_maes"][method] = mae(truth, imputed, intervals)
        scores["method_nmaes"][method] = _nmae_or_nan(truth, imputed, intervals)

    if not initial:
        raise InvalidInputError("no initial imputation ran without falling back")
    best = min(initial, key=scores["method_maes"].get)
    scores["best_method"] = best

    params = replace(config.decomposition, period=period)
    decomposition = harmonic_decompose(initial[best], config.components, params)
    for scheme in config.schemes:
        final, denoised = harmonic_level_interpolation(initial[best], decomposition, intervals, scheme)
        scores["hali_maes"][scheme] = mae(truth, final, intervals)
        scores["hali_nmaes"][scheme] = _nmae_or_nan(truth, final, intervals)
        scores["denoising_maes"][scheme] = denoising_mae(truth, denoised)


def _evaluate_signal(task):
    config, snr_db, p_ms, index = task
    seed = config.seed + index
    noise_seed, missing_seed = derive_seeds(seed)
    label = "Signal {} ({}, p_ms={:g})".format(index, noise_label(snr_db), p_ms)
    scores = _empty_scores()
    try:
        truth = generate_synthetic(replace(config.synthetic, seed=seed))
        observed = add_noise(truth.clean, snr_db, noise_seed)
        masked, intervals = apply_missingness(observed, p_ms, config.n_intervals, missing_seed)
        _score(scores, config, truth.clean, masked, intervals, estimate_average_period(observed), seed, label)
    except (HaliError, np.linalg.LinAlgError) as exc:
        logger.warning("%s failed: %s", label, exc)
        scores["error"] = str(exc) or exc.__class__.__name__
    return SignalOutcome(snr_db=snr_db, p_ms=p_ms, index=index, **scores)


def _evaluate_entry(task):
    config, p_ms, index, entry = task
    label = "Corpus signal {}".format(entry.name)
    scores = _empty_scores()
    try:
        period = estimate_average_period(entry.masked)
        _score(scores, config, entry.truth, entry.masked, entry.intervals, period, config.seed + index, label)
    except (HaliError, np.linalg.LinAlgError) as exc:
        logger.warning("%s failed: %s", label, exc)
        scores["error"] = str(exc) or exc.__class__.__name__
    return SignalOutcome(snr_db=constants.NOISELESS, p_ms=p_ms, index=index, name=entry.name, **scores)


def _finite(values):
    return tuple(float(value) for value in values if np.isfinite(value))


def _paired(outcomes, first, second):
    pairs = [(first(outcome), second(outcome)) for outcome in outcomes]
    pairs = [pair for pair in pairs if np.isfinite(pair[0]) and np.isfinite(pair[1])]
    return np.array([pair[0] for pair in pairs]), np.array([pair[1] for pair in pairs])


def _aggregate(config, snr_db, p_ms, outcomes):
    rows = []
    for method in config.methods:
        maes = _finite(outcome.method_maes.get(method, np.nan) for outcome in outcomes)
        rows.append(ReportRow(
            snr_db, p_ms, method, "", maes, len(outcomes) - len(maes),
            wins=sum(1 for outcome in outcomes if outcome.best_method == method),
            nmaes=_finite(outcome.method_nmaes.get(method, np.nan) for outcome in outcomes),
            fallbacks=sum(1 for outcome in outcomes if method in outcome.fallbacks),
        ))

    best = _finite(outcome.best_mae for outcome in outcomes)
    rows.append(ReportRow(
        snr_db, p_ms, BEST_INITIAL, "", best, len(outcomes) - len(best),
        nmaes=_finite(outcome.best_nmae for outcome in outcomes),
    ))
    for scheme in config.schemes:
        maes = _finite(outcome.hali_maes.get(scheme, np.nan) for outcome in outcomes)
        denoising = _finite(outcome.denoising_maes.get(scheme, np.nan) for outcome in outcomes)
        rows.append(ReportRow(
            snr_db, p_ms, HALI, scheme, maes, len(outcomes) - len(maes),
            denoising_median=float(np.median(denoising)) if denoising else np.nan,
            nmaes=_finite(outcome.hali_nmaes.get(scheme, np.nan) for outcome in outcomes),
        ))

    threshold = significance_threshold()
    contenders = [(BEST_INITIAL, lambda outcome: outcome.best_mae)] + [
        (scheme, lambda outcome, scheme=scheme: outcome.hali_maes.get(scheme, np.nan))
        for scheme in config.schemes
    ]
    tests = []
    for position, (first_name, first) in enumerate(contenders):
        for second_name, second in contenders[position + 1:]:
            a, b = _paired(outcomes, first, second)
            try:
                p_value = wilcoxon_signed_rank(a, b) if a.size else np.nan
            except DegenerateTestError:
                p_value = np.nan
            tests.append(PairwiseTest(snr_db, p_ms, first_name, second_name, p_value, threshold))
    return BenchmarkCell(snr_db, p_ms, rows, tests)


def _run_tasks(config, evaluate, tasks):
    logger.info("Benchmark: %d signal runs on %d worker(s)", len(tasks), config.workers)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            chunksize = max(1, len(tasks) // (4 * config.workers))
            outcomes = list(executor.map(evaluate, tasks, chunksize=chunksize))
    else:
        outcomes = [evaluate(task) for task in tasks]
    failures = sum(outcome.failed for outcome in outcomes)
    if failures:
        logger.warning("%d of %d benchmark runs failed and are flagged in the report", failures, len(outcomes))
    return outcomes


def run_benchmark(config):
    config = config.validate()
    tasks = [
        (config, snr_db, p_ms, index)
        for snr_db in config.snr_levels
        for p_ms in config.p_ms_levels
        for index in range(config.n_signals)
    ]
    outcomes = _run_tasks(config, _evaluate_signal, tasks)

    cells = []
    for snr_db in config.snr_levels:
        for p_ms in config.p_ms_levels:
            members = [outcome for outcome in outcomes if outcome.snr_db == snr_db and outcome.p_ms == p_ms]
            cells.append(_aggregate(config, snr_db, p_ms, members))
    return BenchmarkReport(config, cells, outcomes)


def run_corpus(config, fs=None):
    """Score the methods on the truth/masked pairs under ``config.corpus``.

    The report has a single cell whose ``p_ms`` is the mean missing fraction
    of the corpus.
    """
    if not config.corpus:
        raise InvalidConfigError("run_corpus needs BenchmarkConfig.corpus")
    config = config.validate()
    entries = read_corpus(config.corpus, fs)
    p_ms = float(np.mean([entry.missing_fraction for entry in entries]))
    config = replace(config, n_signals=len(entries), p_ms_levels=(p_ms,), snr_levels=(constants.NOISELESS,))
    outcomes = _run_tasks(config, _evaluate_entry, [
        (config, p_ms, index, entry) for index, entry in enumerate(entries)
    ])
    return BenchmarkReport(config, [_aggregate(config, constants.NOISELESS, p_ms, outcomes)], outcomes)


def _cell_label(config, snr_db):
    return "corpus" if config.corpus else noise_label(snr_db)


def write_report_csv(report, path):
    records = []
    for row in report.rows:
        records.append({
            "kind": "cell",
            "noise": _cell_label(report.config, row.snr_db),
            "p_ms": row.p_ms,
            "method": row.method,
            "scheme": row.scheme,
            "n": len(row.maes),
            "median_mae": row.median,
            "median_nmae": row.nmae_median,
            "wins": row.wins,
            "failures": row.failures,
            "fallbacks": row.fallbacks,
            "denoising_median_mae": row.denoising_median,
        })
    for test in report.tests:
        records.append({
            "kind": "test",
            "noise": _cell_label(report.config, test.snr_db),
            "p_ms": test.p_ms,
            "first": test.first,
            "second": test.second,
            "p_value": test.p_value,
            "threshold": test.threshold,
            "significant": test.significant,
        })
    pd.DataFrame.from_records(records).to_csv(path, index=False)


def write_raw_csv(report, path):
    """Per-signal MAEs in long format, one line per signal and estimator."""
    records = []
    for outcome in report.outcomes:
        base = {
            "noise": _cell_label(report.config, outcome.snr_db), "p_ms": outcome.p_ms,
            "signal": outcome.index, "name": outcome.name,
        }
        for method, value in outcome.method_maes.items():
            note = outcome.error
            if method in outcome.fallbacks:
                note = "fell back to {}".format(", ".join(outcome.fallbacks[method]))
            records.append(dict(base, method=method, scheme="", mae=value,
                                nmae=outcome.method_nmaes.get(method, np.nan), error=note))
        for scheme, value in outcome.hali_maes.items():
            records.append(dict(base, method=HALI, scheme=scheme, mae=value,
                                nmae=outcome.hali_nmaes.get(scheme, np.nan), error=outcome.error))
        if outcome.failed and not outcome.method_maes:
            records.append(dict(base, method="", scheme="", mae=np.nan, nmae=np.nan, error=outcome.error))
    columns = ["noise", "p_ms", "signal", "name", "method", "scheme", "mae", "nmae", "error"]
    pd.DataFrame.from_records(records, columns=columns).to_csv(path, index=False)


def _format_p(test):
    if not np.isfinite(test.p_value):
        return "n/a"
    return "{:.4f}{}".format(test.p_value, "*" if test.significant else "")


def format_report_table(report):
    schemes = list(report.config.schemes)
    short = {scheme: key for key, scheme in constants.SCHEME_FLAGS.items()}
    header = ["p_ms", "BI"] + ["HaLI({})".format(short.get(scheme, scheme)) for scheme in schemes]
    lines = []
    for snr_db in report.config.snr_levels:
        cells = [cell for cell in report.cells if cell.snr_db == snr_db]
        test_names = ["p({}-{})".format(test.first, test.second) for test in cells[0].tests] if cells else []
        lines.append("== {} ==".format(_cell_label(report.config, snr_db)))
        lines.append("  ".join("{:>12}".format(name) for name in header + test_names))
        for cell in cells:
            values = ["{:.2%}".format(cell.p_ms), "{:.4f}".format(cell.row(BEST_INITIAL).median)]
            values += ["{:.4f}".format(cell.row(HALI, scheme).median) for scheme in schemes]
            values += [_format_p(test) for test in cell.tests]
            lines.append("  ".join("{:>12}".format(value) for value in values))
        for cell in cells:
            nmaes = ["BI={:.4f}".format(cell.row(BEST_INITIAL).nmae_median)]
            nmaes += ["HaLI({})={:.4f}".format(short.get(scheme, scheme), cell.row(HALI, scheme).nmae_median)
                      for scheme in schemes]
            lines.append("  NMAE at {:.2%}: {}".format(cell.p_ms, ", ".join(nmaes)))
            wins = ", ".join("{}={}".format(method, count) for method, count in cell.wins.items())
            lines.append("  wins at {:.2%}: {}".format(cell.p_ms, wins))
            fallbacks = ", ".join("{}={}".format(row.method, row.fallbacks) for row in cell.rows if row.fallbacks)
            if fallbacks:
                lines.append("  fell back at {:.2%}: {}".format(cell.p_ms, fallbacks))
        lines.append("")
    lines.append("* significant at p < {:.4f} (Bonferroni, {} comparisons per cell)".format(
        significance_threshold(), constants.COMPARISONS_PER_CELL))
    if report.failures:
        lines.append("{} run(s) failed; see the raw CSV".format(len(report.failures)))
    return "\n".join(lines) + "\n"
