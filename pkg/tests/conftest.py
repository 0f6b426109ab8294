import numpy as np
import pytest

from treetrace.harness import fnv1a64


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(fnv1a64("tests:0")))


def make_rng(tag: str):
    return np.random.Generator(np.random.PCG64(fnv1a64(f"tests:{tag}")))
