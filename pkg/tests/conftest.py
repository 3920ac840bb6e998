import numpy as np
import pytest

from certlab import CsbmParams, normalize_adjacency, sample_csbm


def random_psd(rng, m, jitter=0.0):
    a = rng.standard_normal((m, m))
    return a @ a.T + jitter * np.eye(m)


@pytest.fixture(scope="session")
def small_csbm():
    """Dense-ish 12-node two-class graph used across modules."""
    return sample_csbm(CsbmParams(n=12, p=0.5, q=0.15, labeled_per_class=3, seed=3))


@pytest.fixture(scope="session")
def small_conv(small_csbm):
    return normalize_adjacency(small_csbm, "row")
