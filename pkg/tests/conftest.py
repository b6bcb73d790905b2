import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_spd(rng, p, scale=1.0):
    """Random well-conditioned symmetric positive-definite matrix."""
    a = rng.standard_normal((p, p))
    return scale * (a @ a.T / p + np.eye(p))
