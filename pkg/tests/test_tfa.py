import os
import tempfile

import numpy as np
import pandas as pd

from hali.exceptions import (
    HarmonicOutOfRangeError,
    InvalidConfigError,
    InvalidInputError,
)
from hali.signal_core import Signal, generate_synthetic
from hali.test_utils.factories import (
    DecompositionParamsFactory,
    SyntheticSpecFactory,
    cosine,
)
from hali.tfa import (
    DecompositionParams,
    Ridge,
    de_shape,
    default_degree_cap,
    dump_tfr_csv,
    estimate_trend,
    extract_harmonic_ridge,
    extract_ridge,
    harmonic_decompose,
    reconstruct_component,
    select_harmonic_degree,
    stft,
)

from .base import BaseHaliTestCase


PERIOD = 20.0
BINS = 257


class StftTestCase(BaseHaliTestCase):
    def test_zero_signal(self):
        tfr = stft(Signal(np.zeros(self.n), self.fs), n_bins=BINS, period=PERIOD)

        self.assertFalse(np.any(tfr.values))
        self.assertEqual(tfr.values.shape, (self.n, BINS))

    def test_linearity(self):
        rng = np.random.default_rng(0)
        x, y = rng.standard_normal(self.n), rng.standard_normal(self.n)

        combined = stft(Signal(x + y, self.fs), n_bins=BINS, period=PERIOD).values
        separate = (
            stft(Signal(x, self.fs), n_bins=BINS, period=PERIOD).values
            + stft(Signal(y, self.fs), n_bins=BINS, period=PERIOD).values
        )

        self.assertArrayAlmostEqual(combined, separate, atol=1e-12)

    def test_cosine_peaks_at_its_frequency(self):
        tfr = stft(self.cosine_signal(), n_bins=BINS, period=PERIOD)

        expected = int(np.argmin(np.abs(tfr.freq_axis - self.frequency)))
        peaks = np.argmax(np.abs(self.interior(tfr.values, tfr.half_len)), axis=1)

        self.assertTrue(np.all(peaks == expected))

    def test_window_geometry(self):
        tfr = stft(self.cosine_signal(), n_bins=BINS, period=PERIOD)

        self.assertEqual(tfr.nfft, 512)
        self.assertEqual(tfr.window.size, 2 * tfr.half_len + 1)
        self.assertAlmostEqual(tfr.window[tfr.half_len], 1.0)
        self.assertAlmostEqual(tfr.bin_width, self.fs / 512)
        self.assertEqual(tfr.window_halfwidth_bins, 11)

    def test_missing_samples_rejected(self):
        samples = cosine(self.n, self.fs, self.frequency)
        samples[10] = np.nan

        with self.assertRaises(InvalidInputError):
            stft(Signal(samples, self.fs), n_bins=BINS, period=PERIOD)

    def test_bins_grow_to_fit_the_window(self):
        tfr = stft(self.cosine_signal(), n_bins=65, period=PERIOD)

        self.assertEqual(tfr.nfft, 256)
        self.assertEqual(tfr.n_bins, 129)
        self.assertGreaterEqual(tfr.nfft, tfr.window.size)
        expected = int(np.argmin(np.abs(tfr.freq_axis - self.frequency)))
        peaks = np.argmax(np.abs(self.interior(tfr.values, tfr.half_len)), axis=1)
        self.assertTrue(np.all(peaks == expected))

    def test_signal_shorter_than_window(self):
        with self.assertRaises(InvalidInputError):
            stft(self.cosine_signal(n=200), n_bins=BINS, period=PERIOD)


class ReconstructionTestCase(BaseHaliTestCase):
    def setUp(self):
        self.signal = self.cosine_signal(amplitude=2.0)
        self.tfr = stft(self.signal, n_bins=BINS, period=PERIOD)
        self.ridge = Ridge.from_bins(np.full(self.n, 26), self.tfr.freq_axis)

    def test_amplitude_and_phase_rate(self):
        amplitude, phase = reconstruct_component(self.tfr, self.ridge)

        margin = self.tfr.half_len
        self.assertArrayAlmostEqual(self.interior(amplitude, margin), 2.0, rtol=0.02)
        rate = np.diff(self.interior(phase, margin))
        self.assertArrayAlmostEqual(rate, self.frequency / self.fs, rtol=0.02)

    def test_amplitude_ignores_offset(self):
        shifted = stft(self.cosine_signal(amplitude=2.0, offset=3.0), n_bins=BINS, period=PERIOD)

        plain = reconstruct_component(self.tfr, self.ridge)[0]
        offset = reconstruct_component(shifted, self.ridge)[0]

        margin = self.tfr.half_len
        self.assertArrayAlmostEqual(self.interior(offset, margin), self.interior(plain, margin), rtol=0.01)

    def test_ridge_length_must_match(self):
        with self.assertRaises(InvalidInputError):
            reconstruct_component(self.tfr, Ridge.from_bins(np.full(10, 26), self.tfr.freq_axis))

    def test_trend_of_pure_cosine_is_negligible(self):
        trend = estimate_trend(self.tfr, [self.ridge])

        self.assertLess(np.max(np.abs(self.interior(trend, self.tfr.half_len))), 0.02)

    def test_constant_offset_trend(self):
        tfr = stft(self.cosine_signal(offset=3.0), n_bins=BINS, period=PERIOD)

        trend = estimate_trend(tfr, [self.ridge])

        self.assertArrayAlmostEqual(self.interior(trend, tfr.half_len), 3.0, rtol=0.05)

    def test_slow_trend_is_recovered(self):
        t = np.arange(self.n) / self.fs
        slow = 0.5 * np.sin(2 * np.pi * 2.0 * t)
        tfr = stft(Signal(cosine(self.n, self.fs, self.frequency) + slow, self.fs), n_bins=BINS, period=PERIOD)

        trend = estimate_trend(tfr, [self.ridge])

        margin = tfr.half_len
        self.assertArrayAlmostEqual(self.interior(trend, margin), self.interior(slow, margin), atol=0.05)

    def test_trend_needs_a_ridge(self):
        with self.assertRaises(InvalidInputError):
            estimate_trend(self.tfr, [])


class DeShapeTestCase(BaseHaliTestCase):
    def test_zero_map(self):
        tfr = stft(Signal(np.zeros(self.n), self.fs), n_bins=BINS, period=PERIOD)

        self.assertFalse(np.any(de_shape(tfr)))

    def test_pure_cosine(self):
        tfr = stft(self.cosine_signal(), n_bins=BINS, period=PERIOD)

        energy = self.interior(de_shape(tfr), tfr.half_len)
        peaks = tfr.freq_axis[np.argmax(energy, axis=1)]

        self.assertTrue(np.all(np.abs(peaks - self.frequency) <= 2.0))

    def test_fundamental_dominates_harmonics(self):
        tfr = stft(self.harmonic_signal(), n_bins=BINS, period=PERIOD)

        energy = self.interior(de_shape(tfr), tfr.half_len)
        peaks = tfr.freq_axis[np.argmax(energy, axis=1)]

        self.assertGreaterEqual(np.mean(np.abs(peaks - self.frequency) <= 2.0), 0.95)

    def test_invalid_gamma(self):
        tfr = stft(self.cosine_signal(), n_bins=BINS, period=PERIOD)

        with self.assertRaises(InvalidInputError):
            de_shape(tfr, gamma=1.5)


class RidgeTestCase(BaseHaliTestCase):
    def test_single_energetic_row(self):
        freq_axis = np.linspace(0, 50, 20)
        energy = np.zeros((30, 20))
        energy[:, 7] = 1.0

        ridge = extract_ridge(energy, 5.0, freq_axis)

        self.assertArrayEqual(ridge.bins, np.full(30, 7))

    def test_jump_limit(self):
        freq_axis = np.arange(40, dtype=float)
        energy = np.random.default_rng(2).random((200, 40))

        ridge = extract_ridge(energy, 3.0, freq_axis)

        self.assertLessEqual(np.max(np.abs(np.diff(ridge.freqs_hz))), 3.0)

    def test_chirp_is_followed(self):
        t = np.arange(self.n) / self.fs
        chirp = Signal(np.cos(2 * np.pi * (8.0 * t + t ** 2)), self.fs)
        tfr = stft(chirp, n_bins=BINS, period=PERIOD)

        ridge = extract_ridge(tfr.power(), 2.0, tfr.freq_axis)

        expected = (8.0 + 2.0 * t) / tfr.bin_width
        error = np.abs(ridge.bins - expected)
        self.assertLessEqual(np.max(self.interior(error, tfr.half_len)), 2.0)

    def test_second_harmonic(self):
        tfr = stft(self.harmonic_signal(), n_bins=BINS, period=PERIOD)
        fundamental = Ridge.from_bins(np.full(self.n, 26), tfr.freq_axis)

        ridge = extract_harmonic_ridge(tfr, fundamental, 2)

        self.assertLessEqual(np.max(np.abs(self.interior(ridge.bins, tfr.half_len) - 52)), 2)

    def test_harmonic_beyond_nyquist(self):
        tfr = stft(self.harmonic_signal(), n_bins=BINS, period=PERIOD)
        fundamental = Ridge.from_bins(np.full(self.n, 26), tfr.freq_axis)

        with self.assertRaises(HarmonicOutOfRangeError):
            extract_harmonic_ridge(tfr, fundamental, 10)

    def test_harmonic_order_must_exceed_one(self):
        tfr = stft(self.cosine_signal(), n_bins=BINS, period=PERIOD)
        fundamental = Ridge.from_bins(np.full(self.n, 26), tfr.freq_axis)

        with self.assertRaises(InvalidInputError):
            extract_harmonic_ridge(tfr, fundamental, 1)


class DegreeSelectionTestCase(BaseHaliTestCase):
    def setUp(self):
        self.phase = self.frequency * np.arange(self.n) / self.fs

    def build(self, degree):
        samples = sum(0.8 ** ell * np.cos(2 * np.pi * ell * self.phase) for ell in range(1, degree + 1))
        return Signal(samples, self.fs)

    def test_pure_cosine(self):
        self.assertEqual(select_harmonic_degree(self.build(1), self.phase, d_max=5), 1)

    def test_exact_degrees(self):
        for degree in range(1, 6):
            with self.subTest(degree=degree):
                self.assertEqual(select_harmonic_degree(self.build(degree), self.phase), degree)

    def test_blockwise_regression(self):
        self.assertEqual(select_harmonic_degree(self.build(3), self.phase, d_max=6, segment_len=40), 3)

    def test_wandering_phase_over_many_seeds(self):
        hits = 0
        for seed in range(100):
            degree = 1 + seed % 5
            truth = generate_synthetic(SyntheticSpecFactory(n_harmonics=1, seed=seed))
            phase = truth.phases[0]
            amplitudes = np.random.default_rng(seed).uniform(0.2, 1.0, degree)
            samples = sum(a * np.cos(2 * np.pi * ell * phase) for ell, a in enumerate(amplitudes, start=1))
            if select_harmonic_degree(Signal(samples, truth.clean.fs), phase) == degree:
                hits += 1

        self.assertGreaterEqual(hits, 95)

    def test_twenty_db_blockwise(self):
        clean = self.build(4).samples
        hits = 0
        for seed in range(50):
            rng = np.random.default_rng(seed)
            noisy = Signal(clean + rng.standard_normal(self.n) * np.sqrt(np.var(clean) / 100), self.fs)
            if select_harmonic_degree(noisy, self.phase, segment_len=40) == 4:
                hits += 1

        self.assertGreaterEqual(hits, 45)

    def test_bic_with_noise(self):
        rng = np.random.default_rng(5)
        clean = self.build(2).samples
        noisy = Signal(clean + rng.standard_normal(self.n) * np.sqrt(np.var(clean) / 100), self.fs)

        degree = select_harmonic_degree(noisy, self.phase, d_max=6, criterion="bic")

        self.assertIn(degree, (2, 3))

    def test_constant_signal(self):
        self.assertEqual(select_harmonic_degree(Signal(np.ones(self.n), self.fs), self.phase), 1)

    def test_default_cap(self):
        self.assertEqual(default_degree_cap(200, 10), 9)
        self.assertEqual(default_degree_cap(4000, 50), 10)
        self.assertEqual(default_degree_cap(100, 40), 1)

    def test_unknown_criterion(self):
        with self.assertRaises(InvalidInputError):
            select_harmonic_degree(self.build(1), self.phase, criterion="aic")


class HarmonicDecomposeTestCase(BaseHaliTestCase):
    def setUp(self):
        self.params = DecompositionParams(n_bins=BINS)

    def test_pure_cosine(self):
        decomposition = harmonic_decompose(self.cosine_signal(), 1, self.params)

        self.assertEqual(decomposition.degrees, [1])
        amplitude = decomposition.components[0].amplitudes[0]
        self.assertArrayAlmostEqual(self.interior(amplitude, decomposition.window_half_len), 1.0, rtol=0.02)

    def test_scaling_by_two(self):
        signal = self.harmonic_signal()
        doubled = Signal(2.0 * signal.samples, self.fs)

        plain = harmonic_decompose(signal, 1, self.params)
        scaled = harmonic_decompose(doubled, 1, self.params)

        self.assertEqual(plain.degrees, scaled.degrees)
        self.assertArrayAlmostEqual(scaled.components[0].amplitudes, 2.0 * plain.components[0].amplitudes,
                                    rtol=1e-9, atol=1e-12)
        self.assertArrayAlmostEqual(scaled.components[0].phases, plain.components[0].phases, atol=1e-9)

    def test_two_components(self):
        samples = cosine(self.n, self.fs, 10.0) + cosine(self.n, self.fs, 37.0, amplitude=0.7)

        decomposition = harmonic_decompose(Signal(samples, self.fs), 2, self.params)

        self.assertEqual(len(decomposition.components), 2)
        margin = decomposition.window_half_len
        for component, frequency in zip(decomposition.components, (10.0, 37.0)):
            bins = self.interior(component.ridges[0].bins, margin)
            self.assertLessEqual(abs(np.mean(bins) - frequency / (self.fs / 512)), 2.0)

    def test_synthetic_reconstruction(self):
        truth = generate_synthetic(SyntheticSpecFactory(seed=11, random_walk=False, phase_wobble_amp=0.0))

        decomposition = harmonic_decompose(truth.clean, 1, DecompositionParamsFactory())

        margin = decomposition.window_half_len
        error = self.interior(decomposition.resynthesize() - truth.clean.samples, margin)
        self.assertLessEqual(np.max(np.abs(error)), 0.05 * np.max(np.abs(truth.clean.samples)))
        self.assertGreaterEqual(decomposition.degrees[0], 3)

    def test_missing_samples_rejected(self):
        samples = cosine(self.n, self.fs, self.frequency)
        samples[100:110] = np.nan

        with self.assertRaises(InvalidInputError):
            harmonic_decompose(Signal(samples, self.fs), 1, self.params)

    def test_invalid_params(self):
        for params in (DecompositionParams(gamma=0), DecompositionParams(n_bins=4),
                       DecompositionParams(criterion="aic"), DecompositionParams(d_max=0)):
            with self.subTest(params=params), self.assertRaises(InvalidConfigError):
                harmonic_decompose(self.cosine_signal(), 1, params)


class DumpTfrTestCase(BaseHaliTestCase):
    def test_long_format(self):
        tfr = stft(self.cosine_signal(), n_bins=BINS, period=PERIOD)
        ridge = Ridge.from_bins(np.full(self.n, 26), tfr.freq_axis)

        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "tfr.csv")
            dump_tfr_csv(path, tfr, energy=de_shape(tfr), ridges=[ridge], frame_step=100, max_freq=20.0)
            frame = pd.read_csv(path)

        self.assertTrue({"kind", "frame", "bin", "value"} <= set(frame.columns))
        self.assertTrue(set(frame["frame"]) <= set(range(0, self.n, 100)))
