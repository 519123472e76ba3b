import os

import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("fast", max_examples=25, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture(scope="session")
def walk_measure():
    from hypwalk.config import default_measure

    return default_measure()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260822)
