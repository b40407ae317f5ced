"""Rank-1 constraint systems: sparse A, B, C over F_p and assignments z.

Column 0 of every instance is the constant 1, columns ``1..n_public`` hold
the public inputs and the rest hold the private witness, i.e.
``z = (1, x, w)``. Coefficients are stored as canonical ints mod p.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

from .errors import ModulusMismatch, MalformedAssignment, ParseError, ShapeError, ValidationError
from .field import FieldElement, PrimeModulus, as_modulus


class SparseMatrix:
    """Row-major sparse matrix; each row is a ``{column: coefficient}`` dict."""

    __slots__ = ("n_rows", "n_cols", "rows")

    def __init__(self, n_rows: int, n_cols: int, rows: Optional[list[dict[int, int]]] = None):
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.rows = rows if rows is not None else [{} for _ in range(n_rows)]
        if len(self.rows) != n_rows:
            raise ShapeError(f"expected {n_rows} rows, got {len(self.rows)}")

    @classmethod
    def from_entries(cls, n_rows: int, n_cols: int, entries: Iterable[tuple[int, int, int]], p: int):
        rows: list[dict[int, int]] = [{} for _ in range(n_rows)]
        for r, c, v in entries:
            v = int(v)
            if not (0 <= r < n_rows and 0 <= c < n_cols):
                raise ValidationError(f"entry ({r}, {c}) outside {n_rows}x{n_cols}")
            if c in rows[r]:
                raise ValidationError(f"duplicate entry at ({r}, {c})")
            if not 0 < v < p:
                raise ValidationError(f"coefficient at ({r}, {c}) not a canonical nonzero residue")
            rows[r][c] = v
        return cls(n_rows, n_cols, rows)

    def entries(self):
        """Yield ``(row, col, coeff)`` sorted by (row, col)."""
        for r, row in enumerate(self.rows):
            for c in sorted(row):
                yield r, c, row[c]

    @property
    def nnz(self) -> int:
        return sum(len(row) for row in self.rows)

    def row_dot(self, i: int, z: Sequence[int], p: int) -> int:
        return sum(v * z[c] for c, v in self.rows[i].items()) % p

    def mul_vec(self, z: Sequence[int], p: int) -> list[int]:
        return [sum(v * z[c] for c, v in row.items()) % p for row in self.rows]

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (self.n_rows, self.n_cols, self.rows) == (other.n_rows, other.n_cols, other.rows)

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


@dataclass(eq=False)
class R1CSInstance:
    modulus: PrimeModulus
    a_mat: SparseMatrix
    b_mat: SparseMatrix
    c_mat: SparseMatrix
    n_constraints: int
    n_variables: int
    n_public: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n, m = self.n_constraints, self.n_variables
        for name, mat in (("A", self.a_mat), ("B", self.b_mat), ("C", self.c_mat)):
            if (mat.n_rows, mat.n_cols) != (n, m):
                raise ShapeError(f"matrix {name} is {mat.n_rows}x{mat.n_cols}, expected {n}x{m}")
        if self.n_public < 0 or m <= self.n_public:
            raise ValidationError(f"need n_variables > n_public, got m={m}, l={self.n_public}")

    @property
    def p(self) -> int:
        return self.modulus.p

    def __eq__(self, other):
        # metadata is descriptive and does not take part in equality
        if not isinstance(other, R1CSInstance):
            return NotImplemented
        return (
            self.modulus == other.modulus
            and self.n_constraints == other.n_constraints
            and self.n_variables == other.n_variables
            and self.n_public == other.n_public
            and self.a_mat == other.a_mat
            and self.b_mat == other.b_mat
            and self.c_mat == other.c_mat
        )


class Assignment:
    """Full assignment ``z = (1, x, w)`` as canonical ints mod p."""

    __slots__ = ("modulus", "values")

    def __init__(self, values: Sequence, modulus: PrimeModulus):
        p = modulus.p
        vals = tuple(v.value if isinstance(v, FieldElement) else int(v) % p for v in values)
        if not vals or vals[0] != 1:
            raise MalformedAssignment("assignment must start with the constant 1")
        self.values = vals
        self.modulus = modulus

    @property
    def z(self) -> list[FieldElement]:
        return [FieldElement(v, self.modulus) for v in self.values]

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def with_value(self, i: int, v: int) -> "Assignment":
        vals = list(self.values)
        vals[i] = v % self.modulus.p
        return Assignment(vals, self.modulus)

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return self.modulus == other.modulus and self.values == other.values

    def __repr__(self):
        return f"Assignment(m={len(self.values)}, p={self.modulus.p})"


class SatisfactionReport(NamedTuple):
    ok: bool
    failing_row: Optional[int]

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class InstanceStats:
    n_constraints: int
    n_variables: int
    n_public: int
    a_nonzeros: int
    b_nonzeros: int
    c_nonzeros: int
    left_wire_count: int
    # rows where both A and B touch a non-constant variable
    product_rows: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def is_satisfied(instance: R1CSInstance, assignment: Assignment) -> SatisfactionReport:
    """Check ``(A z) o (B z) = (C z)`` row by row; report the first failing row."""
    if assignment.modulus.p != instance.p:
        raise ModulusMismatch(f"assignment over F_{assignment.modulus.p}, instance over F_{instance.p}")
    z = assignment.values
    if len(z) != instance.n_variables:
        raise ShapeError(f"assignment has {len(z)} entries, instance has {instance.n_variables} variables")
    if z[0] != 1:
        raise MalformedAssignment("z[0] must be 1")
    p = instance.p
    a_rows, b_rows, c_rows = instance.a_mat.rows, instance.b_mat.rows, instance.c_mat.rows
    for i in range(instance.n_constraints):
        az = sum(v * z[c] for c, v in a_rows[i].items())
        bz = sum(v * z[c] for c, v in b_rows[i].items())
        cz = sum(v * z[c] for c, v in c_rows[i].items())
        if (az * bz - cz) % p:
            return SatisfactionReport(False, i)
    return SatisfactionReport(True, None)


def instance_stats(instance: R1CSInstance) -> InstanceStats:
    left = set()
    for row in instance.a_mat.rows:
        left.update(row)
    left.discard(0)
    product_rows = sum(
        1
        for ra, rb in zip(instance.a_mat.rows, instance.b_mat.rows)
        if len(ra.keys() - {0}) and len(rb.keys() - {0})
    )
    return InstanceStats(
        n_constraints=instance.n_constraints,
        n_variables=instance.n_variables,
        n_public=instance.n_public,
        a_nonzeros=instance.a_mat.nnz,
        b_nonzeros=instance.b_mat.nnz,
        c_nonzeros=instance.c_mat.nnz,
        left_wire_count=len(left),
        product_rows=product_rows,
    )


# -- serialization ---------------------------------------------------------


def _dump(doc: dict) -> bytes:
    return json.dumps(doc, separators=(",", ":")).encode()


def _matrix_doc(mat: SparseMatrix) -> list:
    return [[r, c, str(v)] for r, c, v in mat.entries()]


def serialize_instance(instance: R1CSInstance) -> bytes:
    doc = {
        "modulus": str(instance.p),
        "n_constraints": instance.n_constraints,
        "n_variables": instance.n_variables,
        "n_public": instance.n_public,
        "a": _matrix_doc(instance.a_mat),
        "b": _matrix_doc(instance.b_mat),
        "c": _matrix_doc(instance.c_mat),
    }
    if instance.metadata:
        doc["metadata"] = instance.metadata
    return _dump(doc)


def _load(data) -> dict:
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("document is not UTF-8", f"byte {exc.start}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise ParseError("top-level value must be an object", "$")
    return doc


def _get(doc: dict, key: str, kind, where: str = "$"):
    if key not in doc:
        raise ParseError(f"missing key {key!r}", where)
    v = doc[key]
    if kind is int and (not isinstance(v, int) or isinstance(v, bool)):
        raise ParseError(f"{key!r} must be an integer", f"{where}.{key}")
    if kind is not int and not isinstance(v, kind):
        raise ParseError(f"{key!r} has wrong type", f"{where}.{key}")
    return v


def _decimal(s, where: str) -> int:
    if not isinstance(s, str) or not s.isdigit():
        raise ParseError("expected a decimal string", where)
    return int(s)


def _parse_modulus(doc: dict) -> PrimeModulus:
    return as_modulus(_decimal(_get(doc, "modulus", str), "$.modulus"))


def deserialize_instance(data) -> R1CSInstance:
    doc = _load(data)
    modulus = _parse_modulus(doc)
    n = _get(doc, "n_constraints", int)
    m = _get(doc, "n_variables", int)
    l = _get(doc, "n_public", int)
    if n < 0 or m < 1:
        raise ValidationError(f"bad sizes n={n}, m={m}")
    mats = []
    for key in ("a", "b", "c"):
        raw = _get(doc, key, list)
        entries = []
        for idx, e in enumerate(raw):
            where = f"$.{key}[{idx}]"
            if not (isinstance(e, list) and len(e) == 3):
                raise ParseError("entry must be [row, col, coeff]", where)
            r, c, v = e
            if not all(isinstance(x, int) and not isinstance(x, bool) for x in (r, c)):
                raise ParseError("row and col must be integers", where)
            entries.append((r, c, _decimal(v, where + "[2]")))
        mats.append(SparseMatrix.from_entries(n, m, entries, modulus.p))
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise ParseError("metadata must be an object", "$.metadata")
    return R1CSInstance(modulus, *mats, n_constraints=n, n_variables=m, n_public=l, metadata=metadata)


def serialize_assignment(assignment: Assignment) -> bytes:
    return _dump({"modulus": str(assignment.modulus.p), "z": [str(v) for v in assignment.values]})


def deserialize_assignment(data) -> Assignment:
    doc = _load(data)
    modulus = _parse_modulus(doc)
    raw = _get(doc, "z", list)
    vals = [_decimal(s, f"$.z[{i}]") for i, s in enumerate(raw)]
    for i, v in enumerate(vals):
        if v >= modulus.p:
            raise ValidationError(f"z[{i}] is not reduced mod p")
    if not vals or vals[0] != 1:
        raise ValidationError("z[0] must be 1")
    return Assignment(vals, modulus)
