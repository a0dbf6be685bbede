import numpy as np
from django.test import SimpleTestCase

from hali.signal_core import Signal
from hali.test_utils.factories import cosine


class BaseHaliTestCase(SimpleTestCase):
    fs = 200.0
    frequency = 10.0
    n = 1000

    def cosine_signal(self, amplitude=1.0, offset=0.0, frequency=None, n=None, fs=None):
        fs = fs or self.fs
        return Signal(cosine(n or self.n, fs, frequency or self.frequency, amplitude, offset), fs)

    def harmonic_signal(self, amplitudes=(1.0, 0.6, 0.4), frequency=None, n=None, fs=None):
        fs = fs or self.fs
        samples = sum(
            cosine(n or self.n, fs, ell * (frequency or self.frequency), amplitude)
            for ell, amplitude in enumerate(amplitudes, start=1)
        )
        return Signal(samples, fs)

    def interior(self, values, margin):
        return np.asarray(values)[margin:len(values) - margin]

    def assertArrayAlmostEqual(self, actual, desired, atol=1e-12, rtol=0.0):
        np.testing.assert_allclose(actual, desired, atol=atol, rtol=rtol)

    def assertArrayEqual(self, actual, desired):
        np.testing.assert_array_equal(actual, desired)
