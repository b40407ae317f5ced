"""Matrix-multiplication circuits for ``Y = X @ W`` with X a-by-n, W n-by-b.

Four encodings are supported:

``naive``
    one product row per ``x_ik * w_kj`` plus one wide addition row per
    output, ``a*b*(n+1)`` rows.
``naive-psq``
    product rows whose C side is a difference of running prefix sums, the
    last one bound directly to ``y_ij``; ``a*b*n`` rows.
``crpc``
    every column of X and row of W is packed into a polynomial in a
    challenge Z (``x_ik`` at exponent ``i*b``, ``w_kj`` at ``j``), giving
    ``n`` polynomial product rows plus one aggregation row, ``n+1`` rows.
``crpc-psq``
    the polynomial products accumulated as prefix sums with the final one
    bound to ``sum Z^(i*b+j) y_ij``; exactly ``n`` rows.

Z only ever appears as a constant inside coefficients. The polynomial
encodings are sound only when Z is drawn after X and Y are fixed; use
:func:`~matmul_r1cs.field.commit_then_challenge` for that ordering.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

from .builder import PRIVATE, PUBLIC, CircuitBuilder, LinearCombination, Synthesis, Variable
from .errors import ParseError, ShapeError, SpecError, ValidationError
from .field import DEFAULT_MODULUS, FieldElement, PrimeModulus, as_modulus, commit_then_challenge
from .r1cs import Assignment, is_satisfied

Matrix = list[list[int]]


class Encoding(Enum):
    NAIVE = "naive"
    NAIVE_PSQ = "naive-psq"
    CRPC = "crpc"
    CRPC_PSQ = "crpc-psq"

    @property
    def polynomial(self) -> bool:
        return self in (Encoding.CRPC, Encoding.CRPC_PSQ)

    @property
    def prefix_sums(self) -> bool:
        return self in (Encoding.NAIVE_PSQ, Encoding.CRPC_PSQ)

    @classmethod
    def parse(cls, name) -> "Encoding":
        if isinstance(name, Encoding):
            return name
        key = str(name).lower().replace("_", "-")
        for e in cls:
            if e.value == key:
                return e
        raise SpecError(f"unknown encoding {name!r}; choose from {[e.value for e in cls]}")


def expected_constraints(a: int, n: int, b: int, encoding: Encoding) -> int:
    encoding = Encoding.parse(encoding)
    return {
        Encoding.NAIVE: a * b * (n + 1),
        Encoding.NAIVE_PSQ: a * b * n,
        Encoding.CRPC: n + 1,
        Encoding.CRPC_PSQ: n,
    }[encoding]


@dataclass(frozen=True)
class MatMulSpec:
    a: int
    n: int
    b: int
    encoding: Encoding = Encoding.CRPC_PSQ
    challenge: Optional[FieldElement] = None
    modulus: PrimeModulus = DEFAULT_MODULUS
    x_public: bool = True
    w_public: bool = False
    y_public: bool = True

    def __post_init__(self):
        object.__setattr__(self, "encoding", Encoding.parse(self.encoding))
        if isinstance(self.challenge, int) and not isinstance(self.challenge, bool):
            object.__setattr__(self, "challenge", FieldElement(self.challenge % self.modulus.p, self.modulus))
        if self.challenge is not None and self.challenge.modulus != self.modulus:
            # the challenge decides the field when one is given
            object.__setattr__(self, "modulus", self.challenge.modulus)

    def validate(self) -> None:
        for name in ("a", "n", "b"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise SpecError(f"dimension {name} must be a positive integer, got {v!r}")
        if self.encoding.polynomial:
            if self.challenge is None:
                raise SpecError(f"encoding {self.encoding.value} needs a challenge Z")
            if self.challenge.value == 0:
                raise SpecError("challenge Z must be nonzero")

    def with_challenge(self, z: FieldElement) -> "MatMulSpec":
        return MatMulSpec(
            self.a, self.n, self.b, self.encoding, z, z.modulus, self.x_public, self.w_public, self.y_public
        )

    @property
    def p(self) -> int:
        return self.modulus.p


# -- matrices --------------------------------------------------------------


def to_int_matrix(M, p: int) -> Matrix:
    return [[(v.value if isinstance(v, FieldElement) else int(v)) % p for v in row] for row in M]


def _shape(M) -> tuple[int, int]:
    rows = len(M)
    cols = len(M[0]) if rows else 0
    if any(len(r) != cols for r in M):
        raise ShapeError("ragged matrix")
    return rows, cols


def matmul_mod(X: Matrix, W: Matrix, p: int) -> Matrix:
    """Schoolbook product over F_p."""
    a, n = _shape(X)
    n2, b = _shape(W)
    if n != n2:
        raise ShapeError(f"inner dimensions differ: {n} vs {n2}")
    cols = list(zip(*W))
    return [[sum(x * w for x, w in zip(row, col)) % p for col in cols] for row in X]


def matrix_to_json(M: Matrix) -> bytes:
    rows, cols = _shape(M)
    doc = {"rows": rows, "cols": cols, "data": [[str(v) for v in r] for r in M]}
    return json.dumps(doc, separators=(",", ":")).encode()


def matrix_from_json(data, p: int) -> Matrix:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8", errors="replace")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    if not isinstance(doc, dict) or not {"rows", "cols", "data"} <= doc.keys():
        raise ParseError("matrix document needs rows, cols and data", "$")
    rows, cols, raw = doc["rows"], doc["cols"], doc["data"]
    if not isinstance(rows, int) or not isinstance(cols, int) or not isinstance(raw, list):
        raise ParseError("rows/cols must be integers and data a list", "$")
    if len(raw) != rows or any(not isinstance(r, list) or len(r) != cols for r in raw):
        raise ShapeError(f"data does not match declared shape {rows}x{cols}")
    out = []
    for i, r in enumerate(raw):
        row = []
        for j, s in enumerate(r):
            if not isinstance(s, str) or not s.isdigit():
                raise ParseError("expected a decimal string", f"$.data[{i}][{j}]")
            v = int(s)
            if v >= p:
                raise ValidationError(f"data[{i}][{j}] is not reduced mod p")
            row.append(v)
        out.append(row)
    return out


# -- mapped polynomials ----------------------------------------------------


@dataclass
class MappedPolynomial:
    """Sparse polynomial in Z; every exponent is below ``degree_bound`` (= a*b)."""

    coefficients: dict[int, int]
    degree_bound: int

    def __post_init__(self):
        for e in self.coefficients:
            if not 0 <= e < self.degree_bound:
                raise ValueError(f"exponent {e} outside [0, {self.degree_bound})")


def map_x_column(X, k: int, b: int) -> MappedPolynomial:
    a, n = _shape(X)
    if not 0 <= k < n:
        raise IndexError(f"column {k} out of range for {n} columns")
    return MappedPolynomial({i * b: int(X[i][k]) for i in range(a)}, a * b)


def map_w_row(W, k: int, a: int = 1) -> MappedPolynomial:
    """Row k of W at exponents ``0..b-1``; ``a`` only sets the degree bound."""
    n, b = _shape(W)
    if not 0 <= k < n:
        raise IndexError(f"row {k} out of range for {n} rows")
    return MappedPolynomial({j: int(W[k][j]) for j in range(b)}, max(a, 1) * b)


def map_y(Y) -> MappedPolynomial:
    a, b = _shape(Y)
    return MappedPolynomial({i * b + j: int(Y[i][j]) for i in range(a) for j in range(b)}, a * b)


def eval_mapped(poly: MappedPolynomial, Z: FieldElement) -> FieldElement:
    p = Z.modulus.p
    z = Z.value
    total = sum(int(c) * pow(z, e, p) for e, c in poly.coefficients.items())
    return FieldElement(total, Z.modulus)


def check_prop1(X, W, Y, Z: FieldElement) -> bool:
    """Does ``sum_k xhat_k(Z) * what_k(Z) == yhat(Z)`` hold at this challenge?"""
    a, n = _shape(X)
    n2, b = _shape(W)
    a2, b2 = _shape(Y)
    if n != n2 or (a, b) != (a2, b2):
        raise ShapeError(f"shapes X {a}x{n}, W {n2}x{b}, Y {a2}x{b2} are inconsistent")
    lhs = eval_mapped(map_y(Y), Z)
    rhs = FieldElement(0, Z.modulus)
    for k in range(n):
        rhs = rhs + eval_mapped(map_x_column(X, k, b), Z) * eval_mapped(map_w_row(W, k, a), Z)
    return lhs == rhs


# -- synthesis -------------------------------------------------------------


@dataclass
class MatMulCircuit:
    spec: MatMulSpec
    builder: CircuitBuilder
    x: list[list[Variable]]
    w: list[list[Variable]]
    y: list[list[Variable]]
    aux: list[Variable] = field(default_factory=list)
    y_values: Optional[Matrix] = None

    def finalize(self) -> Synthesis:
        syn = self.builder.finalize()
        spec = self.spec
        meta = {"encoding": spec.encoding.value, "a": spec.a, "n": spec.n, "b": spec.b}
        if spec.encoding.polynomial:
            meta["challenge"] = str(spec.challenge.value)
        syn.instance.metadata.update(meta)
        return syn


def _alloc_matrix(builder, rows, cols, public, name, values):
    vis = PUBLIC if public else PRIVATE
    return [
        [
            builder.alloc(vis, f"{name}[{i},{j}]", None if values is None else values[i][j])
            for j in range(cols)
        ]
        for i in range(rows)
    ]


def synthesize_matmul(spec: MatMulSpec, X=None, W=None, Y=None) -> MatMulCircuit:
    """Emit the constraints for ``spec``; with X and W also fill the witness.

    ``Y`` defaults to the honest product. Passing a different Y keeps every
    auxiliary value honest (derived from X, W and Z only), which is how a
    cheating prover with a wrong output would have to proceed.
    """
    spec.validate()
    a, n, b = spec.a, spec.n, spec.b
    p = spec.p
    builder = CircuitBuilder(spec.modulus)
    witness = X is not None and W is not None
    if witness:
        X = to_int_matrix(X, p)
        W = to_int_matrix(W, p)
        if _shape(X) != (a, n) or _shape(W) != (n, b):
            raise ShapeError(f"expected X {a}x{n} and W {n}x{b}, got {_shape(X)} and {_shape(W)}")
        Y = matmul_mod(X, W, p) if Y is None else to_int_matrix(Y, p)
        if _shape(Y) != (a, b):
            raise ShapeError(f"expected Y {a}x{b}, got {_shape(Y)}")
    elif X is not None or W is not None:
        raise ShapeError("witness generation needs both X and W")
    else:
        Y = None

    xv = _alloc_matrix(builder, a, n, spec.x_public, "x", X)
    wv = _alloc_matrix(builder, n, b, spec.w_public, "w", W)
    yv = _alloc_matrix(builder, a, b, spec.y_public, "y", Y)
    circuit = MatMulCircuit(spec, builder, xv, wv, yv, y_values=Y)

    if spec.encoding.polynomial:
        _synth_polynomial(circuit, X, W)
    else:
        _synth_scalar(circuit, X, W)
    return circuit


def _synth_scalar(circuit: MatMulCircuit, X, W):
    spec, builder = circuit.spec, circuit.builder
    a, n, b, p = spec.a, spec.n, spec.b, spec.p
    own = builder.owner
    xv, wv, yv = circuit.x, circuit.w, circuit.y
    aux = circuit.aux
    one = LinearCombination(1, {}, p)
    psq = spec.encoding.prefix_sums
    witness = X is not None
    emit = builder._enforce_trusted
    for i in range(a):
        for j in range(b):
            y_idx = yv[i][j].index
            prev = None  # index of s_{k-1}
            acc = 0
            sums = {}
            for k in range(n):
                A = LinearCombination(0, {xv[i][k].index: 1}, p, own)
                B = LinearCombination(0, {wv[k][j].index: 1}, p, own)
                prod = X[i][k] * W[k][j] % p if witness else None
                if psq:
                    if k == n - 1:
                        C = {y_idx: 1}
                    else:
                        acc = (acc + prod) % p if witness else None
                        s = builder.alloc(PRIVATE, f"s[{i},{j},{k}]", acc)
                        aux.append(s)
                        C = {s.index: 1}
                    if prev is not None:
                        C[prev] = p - 1
                    if k < n - 1:
                        prev = s.index
                    emit(A, B, LinearCombination(0, C, p, own))
                else:
                    t = builder.alloc(PRIVATE, f"t[{i},{j},{k}]", prod)
                    aux.append(t)
                    sums[t.index] = 1
                    emit(A, B, LinearCombination(0, {t.index: 1}, p, own))
            if not psq:
                emit(LinearCombination(0, sums, p, own), one, LinearCombination(0, {y_idx: 1}, p, own))


def _synth_polynomial(circuit: MatMulCircuit, X, W):
    spec, builder = circuit.spec, circuit.builder
    a, n, b, p = spec.a, spec.n, spec.b, spec.p
    own = builder.owner
    xv, wv, yv = circuit.x, circuit.w, circuit.y
    z = spec.challenge.value
    zp = [pow(z, e, p) for e in range(a * b)]
    y_poly = {yv[i][j].index: zp[i * b + j] for i in range(a) for j in range(b)}
    psq = spec.encoding.prefix_sums
    witness = X is not None
    emit = builder._enforce_trusted
    prev = None
    acc = 0
    ts = {}
    for k in range(n):
        A = LinearCombination(0, {xv[i][k].index: zp[i * b] for i in range(a)}, p, own)
        B = LinearCombination(0, {wv[k][j].index: zp[j] for j in range(b)}, p, own)
        if witness:
            xk = sum(zp[i * b] * X[i][k] for i in range(a)) % p
            wk = sum(zp[j] * W[k][j] for j in range(b)) % p
            prod = xk * wk % p
        else:
            prod = None
        if psq:
            if k == n - 1:
                C = dict(y_poly)
            else:
                acc = (acc + prod) % p if witness else None
                s = builder.alloc(PRIVATE, f"s[{k}]", acc)
                circuit.aux.append(s)
                C = {s.index: 1}
            if prev is not None:
                C[prev] = p - 1
            if k < n - 1:
                prev = s.index
            emit(A, B, LinearCombination(0, C, p, own))
        else:
            t = builder.alloc(PRIVATE, f"t[{k}]", prod)
            circuit.aux.append(t)
            ts[t.index] = 1
            emit(A, B, LinearCombination(0, {t.index: 1}, p, own))
    if not psq:
        one = LinearCombination(1, {}, p)
        emit(LinearCombination(0, ts, p, own), one, LinearCombination(0, y_poly, p, own))


def generate_matmul_witness(spec: MatMulSpec, X, W) -> tuple[Assignment, Matrix]:
    circuit = synthesize_matmul(spec, X, W)
    syn = circuit.finalize()
    return syn.assignment, circuit.y_values


# -- soundness experiments -------------------------------------------------


@dataclass
class SoundnessReport:
    a: int
    b: int
    p: int
    trials: int
    detections: int
    passing_challenges: Optional[list[int]] = None

    @property
    def degree(self) -> int:
        # highest exponent of the difference polynomial
        return self.a * self.b - 1

    @property
    def bound(self) -> Fraction:
        return Fraction(self.degree, self.p - 1)

    @property
    def bound_expr(self) -> str:
        return f"{self.degree}/(p-1)"

    def invariants_hold(self) -> bool:
        if not 0 <= self.detections <= self.trials:
            return False
        if self.passing_challenges is not None and len(self.passing_challenges) > self.degree:
            return False
        return True

    def to_dict(self) -> dict:
        doc = {
            "a": self.a,
            "b": self.b,
            "modulus": str(self.p),
            "trials": self.trials,
            "detections": self.detections,
            "misses": self.trials - self.detections,
            "bound": f"{self.bound.numerator}/{self.bound.denominator}",
            "bound_expr": self.bound_expr,
            "bound_float": float(f"{float(self.bound):.6g}"),
        }
        if self.passing_challenges is not None:
            doc["passing_challenges"] = [str(z) for z in self.passing_challenges]
            doc["passing_count"] = len(self.passing_challenges)
        return doc


def trial_seed(master_seed: bytes, index: int) -> bytes:
    if isinstance(master_seed, str):
        master_seed = master_seed.encode()
    return hashlib.sha256(master_seed + b"/trial/" + index.to_bytes(8, "big")).digest()


def random_matrix(rng: random.Random, rows: int, cols: int, p: int) -> Matrix:
    return [[rng.randrange(p) for _ in range(cols)] for _ in range(rows)]


def soundness_trial(
    spec: MatMulSpec,
    tamper: tuple[int, int, int],
    trials: int,
    master_seed: bytes = b"soundness",
    control: bool = False,
) -> SoundnessReport:
    """Count how often a one-entry tamper of Y is rejected.

    Each trial draws X and W from a seed derived from ``(master_seed, i)``,
    fixes the tampered Y, and only then derives Z from a hash of X and Y.
    With ``control=True`` the delta is applied and reverted, so every trial
    is honest and nothing should be detected.
    """
    if not spec.encoding.polynomial:
        raise SpecError("soundness trials need a polynomial (crpc) encoding")
    r, c, delta = tamper
    p = spec.p
    if delta % p == 0:
        raise SpecError("a tamper delta of 0 does not change Y")
    if not (0 <= r < spec.a and 0 <= c < spec.b):
        raise SpecError(f"tamper entry ({r}, {c}) outside {spec.a}x{spec.b}")
    if trials < 1:
        raise SpecError("need at least one trial")
    detections = 0
    for t in range(trials):
        seed = trial_seed(master_seed, t)
        rng = random.Random(seed)
        X = random_matrix(rng, spec.a, spec.n, p)
        W = random_matrix(rng, spec.n, spec.b, p)
        Y = matmul_mod(X, W, p)
        Y[r][c] = (Y[r][c] + delta) % p
        if control:
            Y[r][c] = (Y[r][c] - delta) % p
        Z = commit_then_challenge(X, Y, spec.modulus, domain=seed)
        syn = synthesize_matmul(spec.with_challenge(Z), X, W, Y).finalize()
        if not is_satisfied(syn.instance, syn.assignment).ok:
            detections += 1
    return SoundnessReport(spec.a, spec.b, p, trials, detections)


EXHAUSTIVE_MAX_MODULUS = 2**16


def exhaustive_challenge_scan(p, X, W, Y_wrong) -> list[int]:
    """Every nonzero Z at which a wrong Y still passes the polynomial check."""
    modulus = as_modulus(p)
    if modulus.p > EXHAUSTIVE_MAX_MODULUS:
        raise SpecError(f"exhaustive scan needs p <= 2^16, got {modulus.p}")
    X = to_int_matrix(X, modulus.p)
    W = to_int_matrix(W, modulus.p)
    Y_wrong = to_int_matrix(Y_wrong, modulus.p)
    if matmul_mod(X, W, modulus.p) == Y_wrong:
        raise SpecError("Y equals X @ W; nothing to scan")
    return [z for z in range(1, modulus.p) if check_prop1(X, W, Y_wrong, FieldElement(z, modulus))]


def exhaustive_report(p, X, W, Y_wrong) -> SoundnessReport:
    modulus = as_modulus(p)
    passing = exhaustive_challenge_scan(modulus, X, W, Y_wrong)
    a, b = _shape(Y_wrong)
    trials = modulus.p - 1
    return SoundnessReport(a, b, modulus.p, trials, trials - len(passing), passing)


# -- rejected encodings ----------------------------------------------------


@dataclass
class SumIdentityReport:
    """Unweighted-sum check: complete, but blind to mass moved between entries."""

    sums_equal: bool
    counterexample: Optional[Matrix]
    counterexample_sums_equal: Optional[bool]
    counterexample_is_product: Optional[bool]


@dataclass
class OddPowerReport:
    """Single-product encoding with interleaved exponents."""

    total_products: int
    matching_products: int
    superfluous_products: int
    superfluous_exponents: int
    identity_holds: bool


def _sum_identity(X, W, Y, p) -> bool:
    a, n = _shape(X)
    lhs = sum(sum(r) for r in Y) % p
    rhs = sum(sum(X[i][k] for i in range(a)) * sum(W[k]) for k in range(n)) % p
    return lhs == rhs


def negative_fixture_transforms(X, W, Y, p=DEFAULT_MODULUS, Z: Optional[FieldElement] = None):
    """Run the two rejected encodings and report why each fails."""
    modulus = as_modulus(p)
    p = modulus.p
    X, W, Y = to_int_matrix(X, p), to_int_matrix(W, p), to_int_matrix(Y, p)
    a, n = _shape(X)
    _, b = _shape(W)
    if _shape(Y) != (a, b) or _shape(W)[0] != n:
        raise ShapeError("inconsistent shapes")

    # (1) sum of all outputs against the product of column sums and row sums
    if b >= 2:
        second = (0, 1)
    elif a >= 2:
        second = (1, 0)
    else:
        second = None
    if second is None:
        sum_report = SumIdentityReport(_sum_identity(X, W, Y, p), None, None, None)
    else:
        Yc = [row[:] for row in Y]
        Yc[0][0] = (Yc[0][0] + 1) % p
        Yc[second[0]][second[1]] = (Yc[second[0]][second[1]] - 1) % p
        sum_report = SumIdentityReport(
            _sum_identity(X, W, Y, p),
            Yc,
            _sum_identity(X, W, Yc, p),
            matmul_mod(X, W, p) == Yc,
        )

    # (2) one product of all x terms with all w terms; targets y_ij sit at
    # n*(i*b+j) + n-1, so only k == k' products land on them
    x_exp = {(i, k): n * b * i + (n - 1 - k) for i in range(a) for k in range(n)}
    w_exp = {(k, j): n * j + k for k in range(n) for j in range(b)}
    y_exp = {(i, j): n * (i * b + j) + (n - 1) for i in range(a) for j in range(b)}
    targets = set(y_exp.values())
    total = matching = 0
    stray = set()
    for (i, k), ex in x_exp.items():
        for (k2, j), ew in w_exp.items():
            total += 1
            if ex + ew in targets and k == k2:
                matching += 1
            else:
                stray.add(ex + ew)
    if Z is None:
        Z = commit_then_challenge(X, Y, modulus, domain=b"odd-power")
    z = Z.value
    lhs = sum(Y[i][j] * pow(z, e, p) for (i, j), e in y_exp.items()) % p
    xs = sum(X[i][k] * pow(z, e, p) for (i, k), e in x_exp.items())
    ws = sum(W[k][j] * pow(z, e, p) for (k, j), e in w_exp.items())
    odd = OddPowerReport(total, matching, total - matching, len(stray - targets), lhs == xs * ws % p)
    return sum_report, odd
