import numpy as np
import pytest


@pytest.fixture
def gen():
    return np.random.default_rng(20240817)


def rand_sym(g, d, scale=1.0):
    a = g.standard_normal((d, d)) * scale
    return 0.5 * (a + a.T)


def rand_psd(g, d, extra=2):
    a = g.standard_normal((d, d + extra))
    return (a @ a.T) / (d + extra)
