"""Prime-field arithmetic over a modulus chosen at runtime.

Hot paths elsewhere in the package work on canonical Python ints in
``[0, p)``; :class:`FieldElement` is the checked, user-facing scalar.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Union

import gmpy2

from .errors import ModulusMismatch, NotInvertible, OutOfRange, ValidationError

MAX_MODULUS_BITS = 255
PRIMALITY_ROUNDS = 40


@dataclass(frozen=True)
class PrimeModulus:
    p: int

    def __post_init__(self):
        p = self.p
        if not isinstance(p, int) or isinstance(p, bool):
            raise ValidationError(f"modulus must be an int, got {type(p).__name__}")
        if p <= 2:
            raise ValidationError(f"modulus must be an odd prime > 2, got {p}")
        if p.bit_length() > MAX_MODULUS_BITS:
            raise ValidationError(f"modulus wider than {MAX_MODULUS_BITS} bits")
        if not gmpy2.is_prime(p, PRIMALITY_ROUNDS):
            raise ValidationError(f"modulus {p} is not prime")

    def __int__(self):
        return self.p

    def __call__(self, v) -> "FieldElement":
        return fe_from_integer(v, self)

    def __str__(self):
        return str(self.p)


MERSENNE_61 = PrimeModulus(2**61 - 1)
DEFAULT_MODULUS = MERSENNE_61


def as_modulus(p: Union[int, str, PrimeModulus]) -> PrimeModulus:
    if isinstance(p, PrimeModulus):
        return p
    if isinstance(p, str):
        try:
            p = int(p, 10)
        except ValueError:
            raise ValidationError(f"modulus {p!r} is not a decimal integer") from None
    return PrimeModulus(p)


class FieldElement:
    """An element of F_p, always held in canonical form."""

    __slots__ = ("value", "modulus")

    def __init__(self, value: int, modulus: PrimeModulus):
        self.value = value % modulus.p
        self.modulus = modulus

    @property
    def p(self) -> int:
        return self.modulus.p

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.modulus.p != self.modulus.p:
                raise ModulusMismatch(f"cannot combine elements of F_{self.p} and F_{other.p}")
            return other.value
        if isinstance(other, int) and not isinstance(other, bool):
            return fe_from_integer(other, self.modulus).value
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value + o, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value - o, self.modulus)

    def __rsub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldElement(o - self.value, self.modulus)

    def __mul__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value * o, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.modulus)

    def __pow__(self, e: int):
        return fe_pow(self, e)

    def __truediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return self * fe_inverse(FieldElement(o, self.modulus))

    def inverse(self) -> "FieldElement":
        return fe_inverse(self)

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.value == other.value and self.modulus.p == other.modulus.p
        if isinstance(other, int) and not isinstance(other, bool):
            return self.value == other % self.modulus.p
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.modulus.p))

    def __int__(self):
        return self.value

    __index__ = __int__

    def __bool__(self):
        return self.value != 0

    def signed(self) -> int:
        """Representative in (-p/2, p/2]."""
        return to_signed(self.value, self.modulus.p)

    def __repr__(self):
        return f"FieldElement({self.value}, p={self.modulus.p})"

    def __str__(self):
        return str(self.value)


def to_signed(v: int, p: int) -> int:
    return v - p if v > p // 2 else v


def fe_from_integer(v: int, p: PrimeModulus = DEFAULT_MODULUS) -> FieldElement:
    """Embed a signed integer; negative values map to ``p - |v|``."""
    if abs(v) >= p.p:
        raise OutOfRange(f"|{v}| >= p = {p.p}")
    return FieldElement(v, p)


def fe_arith(op: str, a: FieldElement, b: FieldElement | None = None) -> FieldElement:
    if op == "neg":
        return -a
    if b is None:
        raise TypeError(f"{op} needs two operands")
    if a.modulus.p != b.modulus.p:
        raise ModulusMismatch(f"cannot combine elements of F_{a.p} and F_{b.p}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown field operation {op!r}")


def fe_inverse(a: FieldElement) -> FieldElement:
    if a.value == 0:
        raise NotInvertible("zero has no multiplicative inverse")
    return FieldElement(pow(a.value, -1, a.modulus.p), a.modulus)


def fe_pow(a: FieldElement, e: int) -> FieldElement:
    if e < 0:
        raise ValueError("exponent must be nonnegative")
    # Python's three-argument pow is square-and-multiply and gives 0**0 == 1.
    return FieldElement(pow(a.value, e, a.modulus.p), a.modulus)


def _prf_block(seed: bytes, counter: int) -> int:
    h = hashlib.blake2b(digest_size=64, key=b"challenge")
    h.update(counter.to_bytes(8, "big"))
    h.update(seed)
    return int.from_bytes(h.digest(), "big")


def sample_challenge(seed: bytes, p: PrimeModulus = DEFAULT_MODULUS) -> FieldElement:
    """Derive a nonzero challenge deterministically from ``seed``.

    A 512-bit keyed BLAKE2b block is reduced mod p; the reduction bias is at
    most 2^-256 for every supported modulus. A zero residue is rejected and
    the next counter block is tried.
    """
    if isinstance(seed, str):
        seed = seed.encode()
    if not seed:
        raise ValueError("challenge seed must be nonempty")
    counter = 0
    while True:
        v = _prf_block(seed, counter) % p.p
        if v:
            return FieldElement(v, p)
        counter += 1


def _canonical_matrix(m: Iterable[Iterable], p: int) -> list[list[str]]:
    return [[str(int(v) % p) for v in row] for row in m]


def commit_then_challenge(
    X, Y, p: PrimeModulus = DEFAULT_MODULUS, domain: bytes = b""
) -> FieldElement:
    """Challenge bound to the already-fixed public matrices ``X`` and ``Y``.

    The seed is a SHA-256 digest of the canonical JSON of both matrices, so
    any change to either after the fact changes the challenge.
    """
    doc = json.dumps(
        {"modulus": str(p.p), "x": _canonical_matrix(X, p.p), "y": _canonical_matrix(Y, p.p)},
        separators=(",", ":"),
        sort_keys=True,
    ).encode()
    seed = hashlib.sha256(domain + b"|" + doc).digest()
    return sample_challenge(seed, p)
