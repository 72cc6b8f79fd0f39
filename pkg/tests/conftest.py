import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("lawson", max_examples=40, deadline=None, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "lawson"))


@pytest.fixture
def rng():
    return np.random.default_rng(20260419)


@pytest.fixture(scope="session")
def lawson_data():
    from lawson_spectral.cli import REFERENCE_DATA, load_spectral

    return load_spectral(REFERENCE_DATA)


@pytest.fixture(scope="session")
def lawson_base(lawson_data):
    from lawson_spectral.surface_reconstruction import BaseFrame, LambdaCircle

    return BaseFrame.build(lawson_data, LambdaCircle())
