import numpy as np
import pytest

from diffsense import IQRecording


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_recording(c1, c2=None, fs=1e5, fc=25.1e9, **meta):
    c1 = np.asarray(c1)
    return IQRecording(c1, c1.copy() if c2 is None else np.asarray(c2), fs, fc, meta)


def naive_dft(x):
    """O(N^2) DFT with the same sign convention as numpy."""
    n = len(x)
    k = np.arange(n)
    return np.array([np.sum(x * np.exp(-2j * np.pi * q * k / n)) for q in range(n)])
