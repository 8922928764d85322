import numpy as np
import pytest

from gravhom import synth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_instance(solver="frhfr", seed=0, **overrides):
    """A noise-free instance with defaults suited to the chosen solver."""
    params = {"n_points": 10, "f_gt": 1.2,
              "lambda_gt": -0.3 if solver == "frhfr" else 0.0,
              "rng_seed": seed}
    params.update(overrides)
    return synth.generate(synth.SceneConfig(**params))
