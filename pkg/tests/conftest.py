import pytest

from ckls.model import make_ckls

# (beta1, beta2, sigma, alpha, r0) of the five estimation-table blocks
BLOCKS = [
    (0.1, 0.5, 0.03, 0.5, 1.0),
    (0.2, 0.7, 0.05, 1.0, 0.5),
    (0.15, 0.3, 0.04, 0.6, 1.5),
    (0.25, 0.6, 0.06, 0.8, 1.0),
    (0.3, 0.9, 0.07, 0.55, 0.7),
]


@pytest.fixture
def cir():
    return make_ckls(0.1, 0.5, 0.03, 0.5, 1.0)


@pytest.fixture
def alpha_one():
    return make_ckls(0.2, 0.7, 0.05, 1.0, 0.5)
