"""Fixed-point gadgets for the non-arithmetic parts of a transformer block.

Reals are carried as ``round(x * 2**s)`` embedded in F_p (negatives as
``p - |v|``). Gadgets take a builder plus linear combinations and return
variables; if the inputs carry witness values the outputs do too.

Row counts, with ``B`` the bit width, ``s`` the scale bits, ``n`` the exp
iteration count and ``d`` the vector length:

=====================  ==============================================
bit decomposition      ``B + 1``
geq                    ``B + 1``
max                    ``d*(B + 1) + max(d - 1, 1)``
rescale by k bits      ``k + 1``
exp (negative input)   ``(B + 1) + 1 + n*(s + n + 2) + (n + 1) + 1``
softmax                ``max + d*exp + d*(1 + (s + 2) + 2*(B + 1))``
gelu                   ``1 + (s + 4)``
=====================  ==============================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

from .builder import PUBLIC, CircuitBuilder, Linear, LinearCombination, Variable
from .errors import OutOfRange, SpecError, WitnessError
from .field import DEFAULT_MODULUS, FieldElement, PrimeModulus, to_signed
from .r1cs import is_satisfied


@dataclass(frozen=True)
class FixedPointParams:
    scale_bits: int = 8
    bit_width: int = 24
    # clipping threshold for exp, in scaled units
    threshold: int = -16 * 2**8
    exp_iters: int = 6

    def validate(self, modulus: PrimeModulus = DEFAULT_MODULUS) -> None:
        s, B = self.scale_bits, self.bit_width
        if s < 1 or self.exp_iters < 1:
            raise SpecError("scale_bits and exp_iters must be >= 1")
        if B < s + 2:
            raise SpecError(f"bit_width {B} must be at least scale_bits + 2 = {s + 2}")
        if 2**B >= modulus.p:
            raise SpecError(f"2^{B} does not fit below p")
        if self.threshold >= 0:
            raise SpecError("threshold must be negative")

    @property
    def one(self) -> int:
        return 1 << self.scale_bits


DEFAULT_PARAMS = FixedPointParams()


@dataclass(frozen=True)
class QuantizedValue:
    value: FieldElement
    params: FixedPointParams

    @property
    def signed(self) -> int:
        return self.value.signed()


def quantize_int(x: float, params: FixedPointParams = DEFAULT_PARAMS) -> int:
    q = math.floor(x * (1 << params.scale_bits) + 0.5)
    if abs(q) >= 1 << (params.bit_width - 1):
        raise OutOfRange(f"{x} does not fit in {params.bit_width} signed bits at scale 2^{params.scale_bits}")
    return q


def quantize(x: float, params: FixedPointParams = DEFAULT_PARAMS, modulus: PrimeModulus = DEFAULT_MODULUS) -> QuantizedValue:
    return QuantizedValue(FieldElement(quantize_int(x, params), modulus), params)


def dequantize(q, params: FixedPointParams = DEFAULT_PARAMS, p: Optional[int] = None) -> float:
    if isinstance(q, QuantizedValue):
        return q.signed / q.params.one
    if isinstance(q, FieldElement):
        return q.signed() / params.one
    if p is not None:
        q = to_signed(q, p)
    return q / params.one


# -- witness helpers -------------------------------------------------------


def _signed_value(builder: CircuitBuilder, x) -> Optional[int]:
    v = builder.value(x)
    return None if v is None else to_signed(v, builder.p)


def _alloc_bits(builder, v: Optional[int], nbits: int, label: str) -> list[Variable]:
    return [
        builder.private(f"{label}.b{i}", None if v is None else (v >> i) & 1)
        for i in range(nbits)
    ]


def _recompose(bits: Sequence[Variable], p: int, owner: int) -> LinearCombination:
    return LinearCombination(0, {b.index: pow(2, i, p) for i, b in enumerate(bits)}, p, owner)


def _booleanity(builder, bit: Variable) -> None:
    builder.enforce(bit, bit - 1, 0)


# -- gadgets ---------------------------------------------------------------


def synth_bit_decompose(builder: CircuitBuilder, x: Linear, B: int, label: str = "dec") -> list[Variable]:
    """Bits of ``x``, least significant first; proves ``0 <= x < 2^B``."""
    x = builder.lc(x)
    v = builder.value(x)
    if v is not None and v >= 1 << B:
        raise WitnessError(f"value {v} does not fit in {B} bits")
    bits = _alloc_bits(builder, v, B, label)
    for bit in bits:
        _booleanity(builder, bit)
    builder.enforce(_recompose(bits, builder.p, builder.owner), 1, x)
    return bits


def synth_geq(builder: CircuitBuilder, x: Linear, y: Linear, B: int, require: bool = False, label: str = "geq") -> Variable:
    """Bit that is 1 iff ``x >= y`` as signed integers.

    ``x - y + 2^(B-1)`` is decomposed into B bits and the top bit returned.
    With ``require=True`` the top bit's booleanity row becomes ``bit * 1 = 1``,
    pinning the comparison to true at no extra cost.
    """
    diff = builder.lc(x) - builder.lc(y) + (1 << (B - 1))
    v = builder.value(diff)
    if v is not None and v >= 1 << B:
        raise WitnessError(f"operands of comparison do not fit in {B - 1} signed bits")
    bits = _alloc_bits(builder, v, B, label)
    for bit in bits[:-1]:
        _booleanity(builder, bit)
    top = bits[-1]
    if require:
        builder.enforce(top, 1, 1)
    else:
        _booleanity(builder, top)
    builder.enforce(_recompose(bits, builder.p, builder.owner), 1, diff)
    return top


def synth_max(builder: CircuitBuilder, xs: Sequence[Linear], B: int, witness_max: Optional[int] = None) -> Variable:
    """Variable proven equal to the largest of ``xs``.

    ``x_max >= x_j`` for every j, and ``prod_j (x_max - x_j) = 0`` through a
    chain of d-1 product rows. ``witness_max`` (signed) overrides the honest
    witness; it exists for adversarial tests.
    """
    if not xs:
        raise SpecError("max of an empty sequence")
    xs = [builder.lc(x) for x in xs]
    vals = [_signed_value(builder, x) for x in xs]
    if witness_max is not None:
        mv = witness_max
    elif all(v is not None for v in vals):
        mv = max(vals)
    else:
        mv = None
    m = builder.private("max", mv)
    for j, x in enumerate(xs):
        synth_geq(builder, m, x, B, require=True, label=f"max.geq{j}")
    diffs = [m - x for x in xs]
    if len(diffs) == 1:
        builder.enforce(diffs[0], 1, 0)
        return m
    cur = diffs[0]
    for j in range(1, len(diffs)):
        if j == len(diffs) - 1:
            builder.enforce(cur, diffs[j], 0)
        else:
            a, b = builder.value(cur), builder.value(diffs[j])
            prod = builder.private(f"max.prod{j}", None if a is None or b is None else a * b)
            builder.enforce(cur, diffs[j], prod)
            cur = prod.lc()
    return m


def synth_rescale(builder: CircuitBuilder, x: Linear, shift: int, label: str = "rescale") -> Variable:
    """Floor division by ``2^shift``: proves ``x = q*2^shift + r`` with ``0 <= r < 2^shift``."""
    x = builder.lc(x)
    v = _signed_value(builder, x)
    q = r = None
    if v is not None:
        q, r = v >> shift, v & ((1 << shift) - 1)
    qv = builder.private(f"{label}.q", q)
    bits = _alloc_bits(builder, r, shift, label)
    for bit in bits:
        _booleanity(builder, bit)
    builder.enforce(qv * (1 << shift) + _recompose(bits, builder.p, builder.owner), 1, x)
    return qv


def _round_shift(builder, x: Linear, shift: int, label: str) -> Variable:
    return synth_rescale(builder, builder.lc(x) + (1 << (shift - 1)), shift, label)


def synth_exp_neg(builder: CircuitBuilder, x: Linear, params: FixedPointParams = DEFAULT_PARAMS, label: str = "exp") -> Variable:
    """``e^x`` for ``x <= 0``: 0 below the threshold, else ``(1 + x/2^n)^(2^n)``.

    Squarings run at ``s + n`` fractional bits, where ``1 + x/2^n`` is exactly
    ``2^(s+n) + x`` and no division is needed up front; one rounding shift by
    n bits brings the result back to scale s. Inputs below the threshold are
    clamped to it before squaring so intermediates stay bounded.
    """
    s, n, B, T = params.scale_bits, params.exp_iters, params.bit_width, params.threshold
    s_int = s + n
    if -T > 1 << s_int:
        raise SpecError("threshold below -2^exp_iters makes the base negative")
    if 1 << (2 * s_int + 1) >= builder.p:
        raise SpecError("field too small for exp intermediates")
    x = builder.lc(x)
    v = _signed_value(builder, x)
    if v is not None and v > 0:
        raise WitnessError(f"exp input must be nonpositive, got {v}")
    sel = synth_geq(builder, x, T, B, label=f"{label}.sel")
    sv = builder.value(sel)
    clamped = builder.private(f"{label}.clamped", None if v is None else (v if sv else T))
    builder.enforce(sel, x - T, clamped - T)
    cur = clamped + (1 << s_int)
    for it in range(n):
        cv = builder.value(cur)
        sq = builder.private(f"{label}.sq{it}", None if cv is None else cv * cv)
        builder.enforce(cur, cur, sq)
        cur = _round_shift(builder, sq, s_int, f"{label}.sq{it}").lc()
    approx = _round_shift(builder, cur, n, f"{label}.out")
    av, sv = builder.value(approx), builder.value(sel)
    out = builder.private(f"{label}.y", None if av is None else av * sv)
    builder.enforce(sel, approx, out)
    return out


def synth_softmax(builder: CircuitBuilder, xs: Sequence[Linear], params: FixedPointParams = DEFAULT_PARAMS) -> list[Variable]:
    """Fixed-point softmax via max-normalisation, exp and checked division.

    Each output satisfies ``out * 2*den + r = 2^(s+1)*e + den`` with
    ``0 <= r < 2*den`` and ``0 <= out < 2^(s+1)``, i.e. ``out`` is
    ``e * 2^s / den`` rounded to nearest.
    """
    if not xs:
        raise SpecError("softmax of an empty vector")
    s, B = params.scale_bits, params.bit_width
    xs = [builder.lc(x) for x in xs]
    m = synth_max(builder, xs, B)
    es = [synth_exp_neg(builder, x - m, params, label=f"sm.exp{i}") for i, x in enumerate(xs)]
    den = es[0].lc()
    for e in es[1:]:
        den = den + e
    dv = builder.value(den)
    if dv == 0:
        raise WitnessError("softmax denominator is zero")
    outs = []
    for i, e in enumerate(es):
        num = e * (1 << (s + 1)) + den
        nv = builder.value(num)
        q = r = None
        if nv is not None:
            q, r = divmod(nv, 2 * dv)
        out = builder.private(f"sm.out{i}", q)
        rem = builder.private(f"sm.rem{i}", r)
        builder.enforce(out, den * 2, num - rem)
        synth_bit_decompose(builder, out, s + 1, label=f"sm.out{i}")
        synth_bit_decompose(builder, rem, B, label=f"sm.rem{i}")
        synth_bit_decompose(builder, den * 2 - 1 - rem, B, label=f"sm.slack{i}")
        outs.append(out)
    return outs


def synth_gelu(builder: CircuitBuilder, x: Linear, params: FixedPointParams = DEFAULT_PARAMS) -> Variable:
    """``x^2/8 + x/4 + 1/2`` in fixed point, rounded to nearest.

    With x at scale s the scaled result is
    ``(x^2 + 2^(s+1) x + 2^(2s+2)) / 2^(s+3)``; the numerator equals
    ``(x + 2^s)^2 + 3*2^(2s)`` and is always positive.
    """
    s, B = params.scale_bits, params.bit_width
    x = builder.lc(x)
    v = _signed_value(builder, x)
    if v is not None and abs(v) >= 1 << (B - 1):
        raise WitnessError(f"gelu input {v} exceeds {B - 1} signed bits")
    if 1 << (2 * B) >= builder.p:
        raise SpecError("field too small for gelu intermediates")
    sq = builder.private("gelu.sq", None if v is None else v * v)
    builder.enforce(x, x, sq)
    num = sq + x * (1 << (s + 1)) + (1 << (2 * s + 2))
    return _round_shift(builder, num, s + 3, "gelu")


# -- closed-form row counts ------------------------------------------------


def rows_bit_decompose(B: int) -> int:
    return B + 1


def rows_geq(B: int) -> int:
    return B + 1


def rows_max(d: int, B: int) -> int:
    return d * (B + 1) + max(d - 1, 1)


def rows_exp(params: FixedPointParams = DEFAULT_PARAMS) -> int:
    s, n, B = params.scale_bits, params.exp_iters, params.bit_width
    return (B + 1) + 1 + n * (s + n + 2) + (n + 1) + 1


def rows_softmax(d: int, params: FixedPointParams = DEFAULT_PARAMS) -> int:
    s, B = params.scale_bits, params.bit_width
    return rows_max(d, B) + d * rows_exp(params) + d * (1 + (s + 2) + 2 * (B + 1))


def rows_gelu(params: FixedPointParams = DEFAULT_PARAMS) -> int:
    return 1 + (params.scale_bits + 4)


# -- float references ------------------------------------------------------


def exp_reference(x: float, params: FixedPointParams = DEFAULT_PARAMS) -> float:
    """The piecewise approximation evaluated in floating point."""
    if x * params.one < params.threshold:
        return 0.0
    k = 1 << params.exp_iters
    return (1.0 + x / k) ** k


def softmax_reference(xs: Sequence[float]) -> list[float]:
    m = max(xs)
    es = [math.exp(x - m) for x in xs]
    total = sum(es)
    return [e / total for e in es]


def gelu_quadratic(x: float) -> float:
    return x * x / 8 + x / 4 + 0.5


def gelu_exact(x: float) -> float:
    return 0.5 * x * (1 + math.tanh(math.sqrt(2 / math.pi) * (x + 0.044715 * x**3)))


def gelu_fixed_reference(xq: int, params: FixedPointParams = DEFAULT_PARAMS) -> int:
    """Quadratic evaluated exactly on the scaled input, rounded half up."""
    s = params.scale_bits
    exact = Fraction(xq * xq, 1 << (s + 3)) + Fraction(xq, 4) + (1 << (s - 1))
    return math.floor(exact + Fraction(1, 2))


# -- standalone runs -------------------------------------------------------


class GadgetRun(NamedTuple):
    inputs: list[float]
    outputs: list[float]
    satisfied: bool
    n_constraints: int


def run_gadget(kind: str, xs: Sequence[float], params: FixedPointParams = DEFAULT_PARAMS, modulus: PrimeModulus = DEFAULT_MODULUS) -> GadgetRun:
    """Synthesize one gadget on public inputs, check it, dequantize outputs.

    ``exp`` and ``gelu`` take a single input; ``max`` and ``softmax`` take
    the whole vector.
    """
    params.validate(modulus)
    builder = CircuitBuilder(modulus)
    qs = [quantize_int(x, params) for x in xs]
    ins = [builder.alloc(PUBLIC, f"in{i}", q) for i, q in enumerate(qs)]
    if kind == "exp":
        (x,) = ins
        outs = [synth_exp_neg(builder, x, params)]
    elif kind == "gelu":
        (x,) = ins
        outs = [synth_gelu(builder, x, params)]
    elif kind == "max":
        outs = [synth_max(builder, ins, params.bit_width)]
    elif kind == "softmax":
        outs = synth_softmax(builder, ins, params)
    else:
        raise SpecError(f"unknown gadget {kind!r}")
    values = [builder.value(o) for o in outs]
    syn = builder.finalize()
    ok = is_satisfied(syn.instance, syn.assignment).ok
    return GadgetRun(
        [q / params.one for q in qs],
        [dequantize(v, params, modulus.p) for v in values],
        ok,
        syn.instance.n_constraints,
    )
