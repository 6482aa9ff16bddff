import numpy as np
import pytest

from mmrl.params import build_alpha, build_hurst


@pytest.fixture
def alpha_const():
    return build_alpha({"family": "constant", "p1": 1.5})


@pytest.fixture
def alpha_sine():
    return build_alpha({"family": "sine", "p1": 1.5, "p2": 0.3})


@pytest.fixture
def hurst_09(alpha_const):
    return build_hurst({"family": "constant", "p1": 0.9}, alpha_const)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
