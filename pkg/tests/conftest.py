"""Shared helpers for the test suite."""

import numpy as np
import pytest


def gauss_pair(rng, n, rho, means=(0.0, 0.0), sds=(1.0, 1.0)):
    """Bivariate normal sample with the requested correlation."""
    z = rng.standard_normal((n, 2))
    y = rho * z[:, 0] + np.sqrt(1.0 - rho * rho) * z[:, 1]
    out = np.column_stack([z[:, 0], y])
    return np.asarray(means) + np.asarray(sds) * out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
