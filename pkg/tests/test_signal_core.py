import numpy as np

from hali.exceptions import (
    InvalidConfigError,
    InvalidInputError,
    NoDominantFrequencyError,
)
from hali.signal_core import (
    MissingInterval,
    Signal,
    SyntheticSpec,
    add_noise,
    apply_missingness,
    detect_missing_intervals,
    detect_short_gaps,
    estimate_average_period,
    fill_short_gaps,
    generate_synthetic,
    mask_signal,
)
from hali.test_utils.factories import SignalFactory, SyntheticSpecFactory, cosine

from .base import BaseHaliTestCase


class SignalTestCase(BaseHaliTestCase):
    def test_nan_samples_are_missing(self):
        signal = Signal([1.0, np.nan, 3.0], 10)

        self.assertArrayEqual(signal.missing, [False, True, False])
        self.assertTrue(signal.has_missing)
        self.assertEqual(signal.duration, 0.3)

    def test_missing_mask_blanks_samples(self):
        signal = Signal([1.0, 2.0, 3.0], 10, missing=[False, True, False])

        self.assertTrue(np.isnan(signal.samples[1]))

    def test_from_values_marks_none_as_missing(self):
        signal = Signal.from_values([1.0, None, 3.0, float("nan")], 10)

        self.assertArrayEqual(signal.observed_mask, [True, False, True, False])
        self.assertEqual(signal.samples[2], 3.0)

    def test_arrays_are_read_only(self):
        signal = SignalFactory()

        with self.assertRaises(ValueError):
            signal.samples[0] = 5.0

    def test_invalid_sampling_rate(self):
        for fs in (0, -1, np.inf, "abc"):
            with self.subTest(fs=fs), self.assertRaises(InvalidInputError):
                Signal([1.0, 2.0], fs)

    def test_empty_signal(self):
        with self.assertRaises(InvalidInputError):
            Signal([], 10)

    def test_mask_shape_mismatch(self):
        with self.assertRaises(InvalidInputError):
            Signal([1.0, 2.0], 10, missing=[True])


class GapDetectionTestCase(BaseHaliTestCase):
    def setUp(self):
        samples = np.arange(20, dtype=float)
        samples[2:4] = np.nan
        samples[10:15] = np.nan
        self.signal = Signal(samples, 10)

    def test_detect_missing_intervals(self):
        self.assertEqual(detect_missing_intervals(self.signal, 3), [MissingInterval(10, 5)])
        self.assertEqual(detect_missing_intervals(self.signal, 1), [MissingInterval(2, 2), MissingInterval(10, 5)])

    def test_detect_short_gaps(self):
        self.assertEqual(detect_short_gaps(self.signal, 3), [MissingInterval(2, 2)])

    def test_fill_short_gaps_is_linear(self):
        filled = fill_short_gaps(self.signal, 3)

        self.assertArrayAlmostEqual(filled.samples[2:4], [2.0, 3.0])
        self.assertTrue(np.all(filled.missing[10:15]))
        self.assertEqual(detect_missing_intervals(filled, 1), [MissingInterval(10, 5)])

    def test_fill_short_gaps_without_gaps_returns_input(self):
        signal = SignalFactory()

        self.assertIs(fill_short_gaps(signal), signal)

    def test_invalid_min_len(self):
        with self.assertRaises(InvalidInputError):
            detect_missing_intervals(self.signal, 0)

    def test_mask_signal_rejects_overlap(self):
        with self.assertRaises(InvalidInputError):
            mask_signal(SignalFactory(), [(10, 5), (12, 5)])

    def test_mask_signal_rejects_out_of_range(self):
        with self.assertRaises(InvalidInputError):
            mask_signal(SignalFactory(n=100), [(95, 10)])


class SyntheticGenerationTestCase(BaseHaliTestCase):
    def test_same_seed_same_signal(self):
        spec = SyntheticSpecFactory(seed=3)

        first, second = generate_synthetic(spec), generate_synthetic(spec)

        self.assertArrayEqual(first.clean.samples, second.clean.samples)
        self.assertArrayEqual(first.phases, second.phases)

    def test_different_seed_different_signal(self):
        first = generate_synthetic(SyntheticSpecFactory(seed=1))
        second = generate_synthetic(SyntheticSpecFactory(seed=2))

        self.assertFalse(np.array_equal(first.clean.samples, second.clean.samples))

    def test_superposition_reproduces_signal(self):
        truth = generate_synthetic(SyntheticSpecFactory(trend_amplitude=0.5))

        harmonics = sum(truth.harmonic(ell) for ell in range(1, truth.n_harmonics + 1))

        self.assertArrayAlmostEqual(harmonics + truth.trend, truth.clean.samples, atol=1e-10)

    def test_instantaneous_frequency_follows_wobble(self):
        spec = SyntheticSpecFactory(random_walk=False, n_harmonics=1)
        truth = generate_synthetic(spec)

        t = truth.clean.times
        expected = spec.base_freq - 2 * np.pi * spec.phase_wobble_amp * np.sin(2 * np.pi * t)

        self.assertArrayAlmostEqual(self.interior(truth.instantaneous_frequency(), 1), self.interior(expected, 1),
                                    atol=1e-4)

    def test_amplitude_ratios_are_bounded(self):
        truth = generate_synthetic(SyntheticSpecFactory(n_harmonics=4))

        ratios = truth.amplitudes[1:] / truth.amplitudes[0]

        self.assertTrue(np.all(ratios >= 0.05 - 1e-12))
        self.assertTrue(np.all(ratios < 1.0))
        self.assertArrayAlmostEqual(truth.amplitudes[0], np.sqrt(truth.clean.times + 1.0))

    def test_harmonic_frequencies_follow_jitter(self):
        spec = SyntheticSpecFactory(harmonic_jitter=0.05, n_harmonics=4)
        truth = generate_synthetic(spec)

        rates = np.diff(truth.phases, axis=1)
        peak = rates[0].max()
        for ell in range(2, 5):
            deviation = np.abs(rates[ell - 1] - ell * rates[0])
            self.assertTrue(np.all(deviation <= 0.05 * ell * peak + 1e-12))

    def test_harmonics_above_nyquist_rejected(self):
        spec = SyntheticSpec(fs=200, base_freq=50, n_harmonics=4)

        with self.assertRaises(InvalidConfigError):
            generate_synthetic(spec)

    def test_default_spec_is_valid(self):
        spec = SyntheticSpec()

        self.assertEqual(spec.n_samples, 4000)
        spec.validate()


class MissingnessTestCase(BaseHaliTestCase):
    def setUp(self):
        self.truth = generate_synthetic(SyntheticSpec(seed=0))

    def test_missing_count_and_placement(self):
        masked, intervals = apply_missingness(self.truth, 0.1, n_intervals=3, seed=4)

        self.assertEqual(len(intervals), 3)
        self.assertEqual(sum(interval.length for interval in intervals), 400)
        self.assertEqual(int(masked.missing.sum()), 400)
        for interval in intervals:
            self.assertGreaterEqual(interval.start, 200)
            self.assertLessEqual(interval.stop, 3800)
        for first, second in zip(intervals, intervals[1:]):
            self.assertGreaterEqual(second.start - first.stop, 70)

    def test_seeded_placement_is_reproducible(self):
        first = apply_missingness(self.truth, 0.1, seed=9)[1]
        second = apply_missingness(self.truth, 0.1, seed=9)[1]

        self.assertEqual(first, second)

    def test_tiny_fraction_keeps_one_sample_per_interval(self):
        signal = Signal(cosine(100, 100, 5), 100)

        masked, intervals = apply_missingness(signal, 0.001, n_intervals=1, seed=0)

        self.assertEqual(len(intervals), 1)
        self.assertEqual(intervals[0].length, 1)
        self.assertEqual(int(masked.missing.sum()), 1)

    def test_invalid_fraction(self):
        for p_ms in (0, 0.5, -0.1):
            with self.subTest(p_ms=p_ms), self.assertRaises(InvalidInputError):
                apply_missingness(self.truth, p_ms)


class NoiseTestCase(BaseHaliTestCase):
    def test_noiseless_returns_input(self):
        signal = SignalFactory()

        self.assertIs(add_noise(signal, None), signal)
        self.assertIs(add_noise(signal, np.inf), signal)

    def test_noise_variance_matches_snr(self):
        signal = SignalFactory(n=20000)

        noisy = add_noise(signal, 20, seed=1)

        ratio = np.var(noisy.samples - signal.samples) / np.var(signal.samples)
        self.assertAlmostEqual(ratio, 0.01, delta=0.001)

    def test_zero_variance_rejected(self):
        with self.assertRaises(InvalidInputError):
            add_noise(Signal(np.ones(100), 10), 20)


class AveragePeriodTestCase(BaseHaliTestCase):
    def test_cosine_period(self):
        signal = Signal(cosine(4000, 4000, 50), 4000)

        self.assertAlmostEqual(estimate_average_period(signal), 80.0)

    def test_longest_observed_run_is_used(self):
        samples = cosine(4000, 4000, 50)
        samples[2000:2100] = np.nan

        self.assertAlmostEqual(estimate_average_period(Signal(samples, 4000)), 80.0)

    def test_flat_signal_has_no_dominant_frequency(self):
        with self.assertRaises(NoDominantFrequencyError):
            estimate_average_period(Signal(np.full(500, 2.0), 100))

    def test_too_short(self):
        with self.assertRaises(InvalidInputError):
            estimate_average_period(Signal([1.0, 2.0, 3.0], 10))
