import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matmul_r1cs.errors import ModulusMismatch, NotInvertible, OutOfRange, ValidationError
from matmul_r1cs.field import (
    MERSENNE_61,
    FieldElement,
    PrimeModulus,
    commit_then_challenge,
    fe_arith,
    fe_from_integer,
    fe_inverse,
    fe_pow,
    sample_challenge,
)

from .conftest import P97, P251


def egcd_inverse(a, p):
    # extended Euclid, independent of pow(a, -1, p)
    old_r, r, old_s, s = a, p, 1, 0
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
    assert old_r == 1
    return old_s % p


def fe(v, p=P97):
    return fe_from_integer(v, p)


class TestFromInteger:
    def test_zero(self):
        assert fe(0).value == 0

    def test_minus_one(self):
        assert fe(-1).value == 96

    def test_minus_forty(self):
        assert fe(-40).value == 57
        assert (57 + 40) % 97 == 0

    @pytest.mark.parametrize("v", [97, -97, 1000])
    def test_out_of_range(self, v):
        with pytest.raises(OutOfRange):
            fe(v)

    def test_negation_pairs_exhaustive(self):
        for v in range(-96, 97):
            assert (fe(v) + fe(-v)).value == 0


class TestArith:
    def test_wraparound(self):
        assert fe_arith("add", fe(95), fe(5)).value == 3

    def test_mul_identity(self):
        for x in range(97):
            assert fe_arith("mul", fe(1), fe(x)) == fe(x)

    def test_mul_example(self):
        assert 28 * 23 == 644 and 644 % 97 == 62
        assert fe_arith("mul", fe(28), fe(23)).value == 62

    def test_sub_neg(self):
        assert fe_arith("sub", fe(3), fe(5)).value == 95
        assert fe_arith("neg", fe(3)).value == 94

    def test_modulus_mismatch(self):
        with pytest.raises(ModulusMismatch):
            fe_arith("add", fe(1, P97), fe(1, P251))
        with pytest.raises(ModulusMismatch):
            fe(1, P97) * fe(1, P251)

    @settings(max_examples=200)
    @given(st.integers(0, 2**61 - 2), st.integers(0, 2**61 - 2), st.integers(0, 2**61 - 2))
    def test_ring_laws(self, a, b, c):
        A, B, C = (FieldElement(v, MERSENNE_61) for v in (a, b, c))
        assert A + B == B + A
        assert A * B == B * A
        assert A * (B + C) == A * B + A * C


class TestInverse:
    def test_one(self):
        assert fe_inverse(fe(1)).value == 1

    def test_minus_one(self):
        assert fe_inverse(fe(96)).value == 96

    def test_three(self):
        assert egcd_inverse(3, 97) == 65
        assert fe_inverse(fe(3)).value == 65

    def test_zero(self):
        with pytest.raises(NotInvertible):
            fe_inverse(fe(0))

    def test_exhaustive_small_field(self):
        for a in range(1, 251):
            inv = fe_inverse(fe(a, P251))
            assert inv.value == egcd_inverse(a, 251)
            assert (fe(a, P251) * inv).value == 1

    @given(st.integers(1, 2**61 - 2))
    def test_random_large_field(self, a):
        x = FieldElement(a, MERSENNE_61)
        assert (x * fe_inverse(x)).value == 1


class TestPow:
    def test_zero_exponent(self):
        assert fe_pow(fe(0), 0).value == 1
        assert fe_pow(fe(42), 0).value == 1

    def test_small(self):
        assert fe_pow(fe(3), 4).value == 81
        assert 3**5 % 97 == 49
        assert fe_pow(fe(3), 5).value == 49

    def test_fermat_exhaustive(self):
        for a in range(1, 251):
            assert fe_pow(fe(a, P251), 250).value == 1


class TestModulus:
    def test_composite_rejected(self):
        with pytest.raises(ValidationError):
            PrimeModulus(91)

    @pytest.mark.parametrize("p", [0, 1, 2, 4, 2**256 + 1])
    def test_bad_values(self, p):
        with pytest.raises(ValidationError):
            PrimeModulus(p)

    def test_wide_prime(self):
        p = 2**255 - 19
        m = PrimeModulus(p)
        x = FieldElement(p - 2, m)
        assert (x * x).value == 4


class TestChallenge:
    def test_deterministic(self):
        assert sample_challenge(b"seed", P251) == sample_challenge(b"seed", P251)
        assert sample_challenge(b"seed") == sample_challenge(b"seed")

    def test_empty_seed(self):
        with pytest.raises(ValueError):
            sample_challenge(b"", P251)

    def test_uniform_and_nonzero_over_small_field(self):
        n = 100_000
        counts = [0] * 251
        for i in range(n):
            counts[sample_challenge(i.to_bytes(4, "big"), P251).value] += 1
        assert counts[0] == 0
        expected = n / 250
        sigma = (n * (1 / 250) * (1 - 1 / 250)) ** 0.5
        assert all(abs(c - expected) <= 5 * sigma for c in counts[1:])
        chi2 = sum((c - expected) ** 2 / expected for c in counts[1:])
        # 249 degrees of freedom; mean 249, sd about 22.3
        assert chi2 < 249 + 6 * 22.3

    def test_commit_changes_with_y(self):
        X = [[1, 2], [3, 4]]
        Y = [[19, 22], [43, 50]]
        z1 = commit_then_challenge(X, Y, P251)
        assert z1 == commit_then_challenge(X, Y, P251)
        assert z1.value != 0
        assert commit_then_challenge(X, Y) != commit_then_challenge(X, [[19, 22], [43, 51]])
