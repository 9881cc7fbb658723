import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from momentstab.core_model import LinearSDESystem

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

finite = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False, width=64)


@st.composite
def systems(draw, max_dim=3, max_noise=3):
    n = draw(st.integers(1, max_dim))
    count = draw(st.integers(0, max_noise))
    drift = draw(arrays(float, (n, n), elements=finite))
    noise = draw(arrays(float, (n, n, count), elements=finite))
    return LinearSDESystem(drift, noise)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_system(rng, n, count, scale=0.4):
    return LinearSDESystem.from_drivers(rng.normal(size=(n, n)),
                                        [scale * rng.normal(size=(n, n)) for _ in range(count)])
