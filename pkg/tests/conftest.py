import random

import pytest

from matmul_r1cs.field import MERSENNE_61, PrimeModulus

P97 = PrimeModulus(97)
P251 = PrimeModulus(251)


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture(params=[P251, MERSENNE_61], ids=["p251", "m61"])
def modulus(request):
    return request.param
