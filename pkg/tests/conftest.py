import numpy as np
import pytest

import probattn as pa


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_model(rng, n=4, d=3, m=2, beta="positive", prior=None, equal_alpha=False):
    """Random valid model for structural tests."""
    if beta == "zero":
        betas = np.zeros(n)
    elif beta == "equal":
        betas = np.full(n, float(rng.uniform(0.1, 1.0)))
    else:
        betas = rng.uniform(0.1, 1.0, n)
    alphas = (
        np.full(n, float(rng.uniform(0.3, 2.0)))
        if equal_alpha
        else rng.uniform(0.3, 2.0, n)
    )
    return pa.MixtureModel(
        keys=rng.normal(size=(n, d)),
        key_precisions=alphas,
        value_means=rng.normal(size=(n, m)),
        value_precisions=betas,
        prior=prior if prior is not None else pa.UniformPrior(),
    )


@pytest.fixture
def small_model(rng):
    return make_model(rng)
