"""Incremental constraint synthesis.

A :class:`CircuitBuilder` hands out variables, records rank-1 constraints
between linear combinations of them and, when every variable was given a
value, doubles as the witness generator. ``finalize`` lays the columns out
as ``(1, publics..., privates...)`` in allocation order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Union

from .errors import ModulusMismatch, StateError, UnknownVariable
from .field import DEFAULT_MODULUS, FieldElement, PrimeModulus
from .r1cs import Assignment, R1CSInstance, SparseMatrix

_builder_ids = itertools.count(1)


class Visibility(Enum):
    PUBLIC = "public"
    PRIVATE = "private"


PUBLIC = Visibility.PUBLIC
PRIVATE = Visibility.PRIVATE


@dataclass(frozen=True)
class Variable:
    """Handle to an allocated variable.

    ``index`` is the allocation sequence number inside its builder (starting
    at 1); the final column comes from the layout returned by ``finalize``.
    """

    index: int
    visibility: Visibility
    owner: int
    label: str = field(default="", compare=False)
    p: int = field(default=DEFAULT_MODULUS.p, compare=False, repr=False)

    def lc(self) -> "LinearCombination":
        return LinearCombination(0, {self.index: 1}, self.p, self.owner)

    def __add__(self, other):
        return self.lc() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self.lc() - other

    def __rsub__(self, other):
        return (-self.lc()) + other

    def __neg__(self):
        return -self.lc()

    def __mul__(self, k):
        return self.lc() * k

    __rmul__ = __mul__


class LinearCombination:
    """``constant + sum(coeff * var)`` with canonical nonzero coefficients.

    ``terms`` maps variable allocation index to coefficient. ``owner`` tags
    the builder the variables came from (``None`` for pure constants).
    """

    __slots__ = ("constant", "terms", "p", "owner")

    def __init__(self, constant: int, terms: dict[int, int], p: int, owner: Optional[int] = None):
        self.constant = constant
        self.terms = terms
        self.p = p
        self.owner = owner

    @classmethod
    def const(cls, c, p: int) -> "LinearCombination":
        return cls(_scalar(c, p), {}, p)

    def _join_owner(self, other: "LinearCombination") -> Optional[int]:
        if self.owner is None:
            return other.owner
        if other.owner is not None and other.owner != self.owner:
            raise UnknownVariable("linear combination mixes variables from different builders")
        return self.owner

    def __add__(self, other):
        other = _coerce(other, self.p)
        if other is NotImplemented:
            return other
        p = self.p
        terms = dict(self.terms)
        for k, v in other.terms.items():
            s = (terms.get(k, 0) + v) % p
            if s:
                terms[k] = s
            else:
                terms.pop(k, None)
        return LinearCombination((self.constant + other.constant) % p, terms, p, self._join_owner(other))

    __radd__ = __add__

    def __neg__(self):
        p = self.p
        return LinearCombination(-self.constant % p, {k: p - v for k, v in self.terms.items()}, p, self.owner)

    def __sub__(self, other):
        other = _coerce(other, self.p)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, k):
        if isinstance(k, (LinearCombination, Variable)):
            raise TypeError("product of two linear combinations is not linear; use enforce()")
        p = self.p
        k = _scalar(k, p)
        if k == 0:
            return LinearCombination(0, {}, p, self.owner)
        return LinearCombination(self.constant * k % p, {i: v * k % p for i, v in self.terms.items()}, p, self.owner)

    __rmul__ = __mul__

    def is_constant(self) -> bool:
        return not self.terms

    def __repr__(self):
        parts = [f"{v}*v{k}" for k, v in sorted(self.terms.items())]
        if self.constant or not parts:
            parts.insert(0, str(self.constant))
        return "LC(" + " + ".join(parts) + ")"


Linear = Union[LinearCombination, Variable, FieldElement, int]


def _scalar(c, p: int) -> int:
    if isinstance(c, FieldElement):
        if c.modulus.p != p:
            raise ModulusMismatch(f"coefficient over F_{c.modulus.p} used in F_{p}")
        return c.value
    return int(c) % p


def _coerce(x, p: int):
    if isinstance(x, LinearCombination):
        return x
    if isinstance(x, Variable):
        return x.lc()
    if isinstance(x, (int, FieldElement)) and not isinstance(x, bool):
        return LinearCombination(_scalar(x, p), {}, p)
    return NotImplemented


class Layout:
    """Maps variables (or their allocation indices) to final columns."""

    __slots__ = ("columns", "owner")

    def __init__(self, columns: list[int], owner: int):
        self.columns = columns  # columns[index] for index >= 1; columns[0] == 0
        self.owner = owner

    def __getitem__(self, var: Union[Variable, int]) -> int:
        if isinstance(var, Variable):
            if var.owner != self.owner:
                raise UnknownVariable(f"variable {var.label or var.index} is not part of this layout")
            var = var.index
        if not 0 <= var < len(self.columns):
            raise UnknownVariable(f"variable index {var} is not part of this layout")
        return self.columns[var]

    column = __getitem__

    def __len__(self):
        return len(self.columns) - 1


class Synthesis(NamedTuple):
    instance: R1CSInstance
    layout: Layout
    assignment: Optional[Assignment]


class CircuitBuilder:
    def __init__(self, modulus: PrimeModulus = DEFAULT_MODULUS):
        self.modulus = modulus
        self.p = modulus.p
        self.owner = next(_builder_ids)
        self.finalized = False
        # index 0 is the constant column
        self.visibility: list[Optional[Visibility]] = [None]
        self.labels: list[str] = [""]
        self.values: list[Optional[int]] = [1]
        self.constraints: list[tuple[LinearCombination, LinearCombination, LinearCombination]] = []
        self.n_public = 0

    def _check_open(self):
        if self.finalized:
            raise StateError("builder already finalized")

    @property
    def n_variables(self) -> int:
        return len(self.values) - 1

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def alloc(self, visibility: Visibility = PRIVATE, label: str = "", value=None) -> Variable:
        self._check_open()
        idx = len(self.values)
        self.visibility.append(visibility)
        self.labels.append(label)
        self.values.append(None if value is None else _scalar(value, self.p))
        if visibility is PUBLIC:
            self.n_public += 1
        return Variable(idx, visibility, self.owner, label, self.p)

    alloc_variable = alloc

    def public(self, label: str = "", value=None) -> Variable:
        return self.alloc(PUBLIC, label, value)

    def private(self, label: str = "", value=None) -> Variable:
        return self.alloc(PRIVATE, label, value)

    def lc(self, x: Linear) -> LinearCombination:
        lc = _coerce(x, self.p)
        if lc is NotImplemented:
            raise TypeError(f"cannot use {type(x).__name__} as a linear combination")
        if lc.owner is not None and lc.owner != self.owner:
            raise UnknownVariable("linear combination refers to another builder's variables")
        if lc.p != self.p:
            raise ModulusMismatch(f"linear combination over F_{lc.p} used in F_{self.p}")
        return lc

    def enforce(self, a: Linear, b: Linear, c: Linear) -> int:
        """Append the row ``a * b = c``; returns its row index."""
        self._check_open()
        row = (self.lc(a), self.lc(b), self.lc(c))
        n = len(self.values)
        for lc in row:
            for k in lc.terms:
                if not 0 < k < n:
                    raise UnknownVariable(f"variable index {k} was never allocated")
        self.constraints.append(row)
        return len(self.constraints) - 1

    def _enforce_trusted(self, a: LinearCombination, b: LinearCombination, c: LinearCombination):
        # gadget fast path: operands were built from this builder's own variables
        self.constraints.append((a, b, c))

    def value(self, x: Linear) -> Optional[int]:
        """Witness value of ``x`` as a canonical int, or None if any input is unvalued."""
        lc = self.lc(x)
        total = lc.constant
        values = self.values
        for k, v in lc.terms.items():
            val = values[k]
            if val is None:
                return None
            total += v * val
        return total % self.p

    def field_value(self, x: Linear) -> Optional[FieldElement]:
        v = self.value(x)
        return None if v is None else FieldElement(v, self.modulus)

    def set_value(self, var: Variable, value) -> None:
        self._check_open()
        self.values[var.index] = _scalar(value, self.p)

    def finalize(self) -> Synthesis:
        self._check_open()
        self.finalized = True
        n_vars = len(self.values)
        columns = [0] * n_vars
        col = 1
        for i in range(1, n_vars):
            if self.visibility[i] is PUBLIC:
                columns[i] = col
                col += 1
        for i in range(1, n_vars):
            if self.visibility[i] is PRIVATE:
                columns[i] = col
                col += 1

        def row(lc: LinearCombination) -> dict[int, int]:
            r = {columns[k]: v for k, v in lc.terms.items()}
            if lc.constant:
                r[0] = lc.constant
            return r

        n = len(self.constraints)
        a_rows, b_rows, c_rows = [], [], []
        for la, lb, lcc in self.constraints:
            a_rows.append(row(la))
            b_rows.append(row(lb))
            c_rows.append(row(lcc))
        instance = R1CSInstance(
            self.modulus,
            SparseMatrix(n, n_vars, a_rows),
            SparseMatrix(n, n_vars, b_rows),
            SparseMatrix(n, n_vars, c_rows),
            n_constraints=n,
            n_variables=n_vars,
            n_public=self.n_public,
        )
        layout = Layout(columns, self.owner)
        assignment = None
        if all(v is not None for v in self.values):
            z = [0] * n_vars
            for i, v in enumerate(self.values):
                z[columns[i]] = v
            assignment = Assignment(z, self.modulus)
        return Synthesis(instance, layout, assignment)


def lc_eval(lc: Linear, assignment: Assignment, layout: Layout) -> FieldElement:
    """Evaluate ``lc`` against a finalized assignment."""
    p = assignment.modulus.p
    lc = _coerce(lc, p)
    if lc is NotImplemented:
        raise TypeError("not a linear combination")
    if lc.owner is not None and lc.owner != layout.owner:
        raise UnknownVariable("linear combination refers to variables outside this layout")
    z = assignment.values
    total = lc.constant
    for k, v in lc.terms.items():
        total += v * z[layout[k]]
    return FieldElement(total, assignment.modulus)
