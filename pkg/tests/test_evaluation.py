import os
import tempfile
from unittest import mock

import numpy as np
import pandas as pd

from hali import constants
from hali.evaluation import (
    BEST_INITIAL,
    HALI,
    BenchmarkConfig,
    denoising_mae,
    derive_seeds,
    format_report_table,
    mae,
    nmae,
    noise_label,
    run_benchmark,
    run_corpus,
    significance_threshold,
    wilcoxon_signed_rank,
    write_raw_csv,
    write_report_csv,
)
from hali.exceptions import (
    DegenerateTestError,
    ImputerInfeasibleError,
    InvalidConfigError,
    InvalidInputError,
)
from hali.imputers import SeasonalArForecaster
from hali.io import (
    read_corpus,
    read_signal_csv,
    write_intervals_csv,
    write_signal_csv,
)
from hali.signal_core import MissingInterval, apply_missingness, generate_synthetic
from hali.test_utils.factories import (
    BenchmarkConfigFactory,
    DecompositionParamsFactory,
    SyntheticSpecFactory,
)

from .base import BaseHaliTestCase


class MetricsTestCase(BaseHaliTestCase):
    def test_mae_only_counts_gaps(self):
        truth = np.zeros(10)
        estimate = np.full(10, 100.0)
        estimate[2:5] = [1.0, 2.0, 3.0]

        self.assertAlmostEqual(mae(truth, estimate, [MissingInterval(2, 3)]), 2.0)

    def test_mae_of_constant_offset(self):
        truth = np.sin(np.arange(100))

        self.assertAlmostEqual(mae(truth, truth + 0.25, [(10, 5), (50, 20)]), 0.25)
        self.assertEqual(mae(truth, truth, [(10, 5)]), 0.0)

    def test_mae_needs_intervals(self):
        with self.assertRaises(InvalidInputError):
            mae(np.zeros(5), np.zeros(5), [])

    def test_nmae(self):
        truth = np.linspace(-2, 2, 101)

        self.assertAlmostEqual(nmae(truth, truth + 0.2, [(40, 10)]), 0.05)

    def test_nmae_is_affine_invariant(self):
        rng = np.random.default_rng(1)
        truth, estimate = rng.standard_normal(200), rng.standard_normal(200)
        intervals = [(20, 30)]

        self.assertAlmostEqual(nmae(truth, estimate, intervals), nmae(3 * truth + 7, 3 * estimate + 7, intervals))

    def test_nmae_flat_truth(self):
        with self.assertRaises(InvalidInputError):
            nmae(np.ones(20), np.zeros(20), [(5, 5)])

    def test_denoising_mae(self):
        truth = np.zeros(50)

        self.assertAlmostEqual(denoising_mae(truth, np.full(50, 0.5)), 0.5)


class WilcoxonTestCase(BaseHaliTestCase):
    def test_all_positive_differences(self):
        self.assertAlmostEqual(wilcoxon_signed_rank([1, 2, 3, 4, 5], np.zeros(5)), 0.0625)

    def test_balanced_differences(self):
        self.assertAlmostEqual(wilcoxon_signed_rank([-2, -1, 1, 2, 0], np.zeros(5)), 1.0)

    def test_identical_samples(self):
        with self.assertRaises(DegenerateTestError):
            wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])

    def test_symmetric_in_arguments(self):
        rng = np.random.default_rng(4)
        a, b = rng.standard_normal(30), rng.standard_normal(30)

        self.assertAlmostEqual(wilcoxon_signed_rank(a, b), wilcoxon_signed_rank(b, a))

    def test_normal_approximation_close_to_exact(self):
        differences = np.random.default_rng(6).normal(0.3, 1.0, 12)

        exact = wilcoxon_signed_rank(differences, np.zeros(12))
        with mock.patch.object(constants, "WILCOXON_EXACT_MAX_N", 11):
            approximate = wilcoxon_signed_rank(differences, np.zeros(12))

        self.assertAlmostEqual(exact, approximate, delta=0.02)

    def test_p_value_range(self):
        rng = np.random.default_rng(2)

        p_value = wilcoxon_signed_rank(rng.standard_normal(50), rng.standard_normal(50))

        self.assertTrue(0 <= p_value <= 1)

    def test_shape_mismatch(self):
        with self.assertRaises(InvalidInputError):
            wilcoxon_signed_rank([1, 2], [1, 2, 3])

    def test_bonferroni_threshold(self):
        self.assertAlmostEqual(significance_threshold(), 0.05 / 3)
        self.assertAlmostEqual(significance_threshold(0.01, 2), 0.005)


class BenchmarkConfigTestCase(BaseHaliTestCase):
    def test_scheme_flags_are_resolved(self):
        config = BenchmarkConfigFactory(schemes=("s", "p")).validate()

        self.assertEqual(config.schemes, (constants.SCHEME_SPLINE, constants.SCHEME_PCHIP))

    def test_invalid_values(self):
        for overrides in ({"n_signals": 0}, {"p_ms_levels": (0.6,)}, {"methods": ("magic",)},
                          {"schemes": ("x",)}, {"workers": 0}):
            with self.subTest(**overrides), self.assertRaises(InvalidConfigError):
                BenchmarkConfigFactory(**overrides).validate()

    def test_noise_labels(self):
        self.assertEqual(noise_label(None), "noiseless")
        self.assertEqual(noise_label(20.0), "20dB")

    def test_derived_seeds_are_stable(self):
        self.assertEqual(derive_seeds(5), derive_seeds(5))
        self.assertNotEqual(derive_seeds(5), derive_seeds(6))
        self.assertNotEqual(*derive_seeds(5))


class RunBenchmarkTestCase(BaseHaliTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config = BenchmarkConfigFactory(n_signals=3, p_ms_levels=(0.05, 0.1), workers=1)
        cls.report = run_benchmark(cls.config)

    def test_cell_layout(self):
        self.assertEqual(len(self.report.cells), 2)
        self.assertEqual(len(self.report.outcomes), 6)
        # two methods, the best initial imputation and one row per scheme
        self.assertEqual(len(self.report.rows), 2 * (2 + 1 + 2))
        for cell in self.report.cells:
            self.assertEqual(len(cell.tests), 3)
            self.assertEqual(cell.tests[0].threshold, significance_threshold())

    def test_wins_count_every_successful_signal(self):
        for cell in self.report.cells:
            members = [outcome for outcome in self.report.outcomes if outcome.p_ms == cell.p_ms]
            with_best = sum(1 for outcome in members if outcome.best_method is not None)
            self.assertEqual(sum(cell.wins.values()), with_best)

    def test_medians_match_stored_values(self):
        for row in self.report.rows:
            if row.maes:
                self.assertEqual(row.median, float(np.median(row.maes)))
            self.assertEqual(len(row.maes) + row.failures, self.config.n_signals)

    def test_best_initial_is_the_minimum(self):
        for outcome in self.report.outcomes:
            if outcome.best_method is None:
                continue
            finite = [value for value in outcome.method_maes.values() if np.isfinite(value)]
            self.assertEqual(outcome.best_mae, min(finite))

    def test_hali_rows_carry_denoising_medians(self):
        for cell in self.report.cells:
            row = cell.row(HALI, constants.SCHEME_PCHIP)
            if row.maes:
                self.assertTrue(np.isfinite(row.denoising_median))

    def test_reproducible(self):
        config = BenchmarkConfigFactory(n_signals=1, p_ms_levels=(0.05,), methods=("tlm",), workers=1)

        first, second = run_benchmark(config), run_benchmark(config)

        self.assertEqual([row.maes for row in first.rows], [row.maes for row in second.rows])

    def test_report_files(self):
        with tempfile.TemporaryDirectory() as directory:
            report_path = os.path.join(directory, "report.csv")
            raw_path = os.path.join(directory, "raw.csv")
            write_report_csv(self.report, report_path)
            write_raw_csv(self.report, raw_path)
            report = pd.read_csv(report_path, keep_default_na=False)
            raw = pd.read_csv(raw_path, keep_default_na=False)

        cells = report[report["kind"] == "cell"]
        self.assertEqual(len(cells), len(self.report.rows))
        self.assertEqual(len(report[report["kind"] == "test"]), len(self.report.tests))
        self.assertTrue({BEST_INITIAL, HALI, "tlm", "lse"} <= set(cells["method"]))
        self.assertEqual(set(raw["signal"]), {0, 1, 2})

    def test_table(self):
        table = format_report_table(self.report)

        self.assertIn("== noiseless ==", table)
        self.assertIn("HaLI(s)", table)
        self.assertIn("HaLI(p)", table)
        self.assertIn("wins at 5.00%", table)

    def test_nmae_rows(self):
        for cell in self.report.cells:
            for row in cell.rows:
                self.assertEqual(len(row.nmaes), len(row.maes))
                if row.nmaes:
                    self.assertLess(row.nmae_median, row.median)


class FallbackAttributionTestCase(BaseHaliTestCase):
    def test_fell_back_method_is_not_ranked(self):
        config = BenchmarkConfigFactory(n_signals=2, methods=("tlm", "sarf"), schemes=("p",), workers=1)

        with mock.patch.object(SeasonalArForecaster, "fill", side_effect=ImputerInfeasibleError("unstable")):
            report = run_benchmark(config)

        row = report.cells[0].row("sarf")
        self.assertEqual(row.maes, ())
        self.assertEqual(row.wins, 0)
        self.assertEqual(row.fallbacks, 2)
        for outcome in report.outcomes:
            self.assertTrue(outcome.fallbacks["sarf"])
            self.assertNotIn("sarf", outcome.fallbacks["sarf"])
            self.assertEqual(outcome.best_method, "tlm")
        self.assertIn("fell back at 5.00%: sarf=2", format_report_table(report))


class CorpusTestCase(BaseHaliTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)
        self.fractions = []
        for seed, name in enumerate(("alpha", "beta")):
            truth = generate_synthetic(SyntheticSpecFactory(seed=seed))
            masked, intervals = apply_missingness(truth, 0.05 * (seed + 1), 2, seed)
            self.fractions.append(sum(interval.length for interval in intervals) / masked.n)
            write_signal_csv(self.path("{}_truth.csv".format(name)), truth.clean)
            write_signal_csv(self.path("{}_masked.csv".format(name)), masked)
            if name == "alpha":
                write_intervals_csv(self.path("alpha_intervals.csv"), intervals)

    def path(self, name):
        return os.path.join(self.directory.name, name)

    def test_pairs_are_read(self):
        entries = read_corpus(self.directory.name)

        self.assertEqual([entry.name for entry in entries], ["alpha", "beta"])
        self.assertAlmostEqual(entries[1].missing_fraction, self.fractions[1])

    def test_corpus_report(self):
        config = BenchmarkConfigFactory(corpus=self.directory.name, workers=1)

        report = run_corpus(config)

        self.assertEqual(len(report.cells), 1)
        self.assertEqual([outcome.name for outcome in report.outcomes], ["alpha", "beta"])
        cell = report.cells[0]
        self.assertAlmostEqual(cell.p_ms, np.mean(self.fractions))
        self.assertEqual(len(cell.tests), 3)
        self.assertEqual(len(cell.row(HALI, constants.SCHEME_PCHIP).nmaes), 2)
        self.assertIn("== corpus ==", format_report_table(report))

    def test_corpus_needs_pairs(self):
        with tempfile.TemporaryDirectory() as empty:
            with self.assertRaises(InvalidInputError):
                read_corpus(empty)
        with self.assertRaises(InvalidInputError):
            read_corpus(self.path("absent"))

    def test_reference_with_gaps_is_rejected(self):
        masked = read_signal_csv(self.path("beta_masked.csv"))
        write_signal_csv(self.path("gamma_truth.csv"), masked)
        write_signal_csv(self.path("gamma_masked.csv"), masked)

        with self.assertRaises(InvalidInputError):
            read_corpus(self.directory.name)

    def test_run_corpus_needs_a_directory(self):
        with self.assertRaises(InvalidConfigError):
            run_corpus(BenchmarkConfigFactory())


class AcceptanceTestCase(BaseHaliTestCase):
    def test_pchip_improves_on_the_best_initial_imputation(self):
        config = BenchmarkConfig(
            n_signals=8,
            p_ms_levels=(0.05,),
            snr_levels=(constants.NOISELESS,),
            methods=(constants.METHOD_TLM, constants.METHOD_LSE, constants.METHOD_DMD),
            decomposition=DecompositionParamsFactory(n_bins=2049),
            workers=1,
        )

        cell = run_benchmark(config).cells[0]

        best = cell.row(BEST_INITIAL).median
        pchip = cell.row(HALI, constants.SCHEME_PCHIP).median
        spline = cell.row(HALI, constants.SCHEME_SPLINE).median
        self.assertLessEqual(pchip, 0.9 * best)
        self.assertLess(pchip, spline)
