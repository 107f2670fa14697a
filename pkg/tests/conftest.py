import numpy as np
import pytest

from laxforge.harness import generate_instance

ALL_CASES = ((4, ()), (5, ()), (3, (2,)), (3, (1, 1)), (2, (2,)),
             (2, (1, 2)), (1, (3,)), (1, (2, 2)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def instance(case, seed=1, min_p=0.0):
    return generate_instance(case, seed, min_p=min_p)


@pytest.fixture(params=ALL_CASES, ids=lambda c: f"rinf{c[0]}-{list(c[1])}")
def any_case(request):
    return request.param
