"""Linear-arithmetic constraints over typed, annotated process variables.

Constraints are immutable trees.  Numbers are exact: integers stay ``int``
and rationals are :class:`fractions.Fraction`; nothing is ever converted to
floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterable, Mapping, Union

from .errors import CaptureError, SortMismatch, UnboundVariable


class Sort(Enum):
    BOOL = "bool"
    INT = "int"
    RAT = "rat"

    @property
    def numeric(self) -> bool:
        return self is not Sort.BOOL

    def zero(self):
        return False if self is Sort.BOOL else (0 if self is Sort.INT else Fraction(0))

    def coerce(self, value):
        """Convert ``value`` into the canonical Python type of this sort."""
        if self is Sort.BOOL:
            if isinstance(value, bool):
                return value
            if value in (0, 1):
                return bool(value)
            raise SortMismatch(f"{value!r} is not a boolean")
        if isinstance(value, bool):
            raise SortMismatch(f"{value!r} is not a number")
        q = Fraction(value)
        if self is Sort.INT:
            if q.denominator != 1:
                raise SortMismatch(f"{value!r} is not an integer")
            return int(q)
        return q


class Annotation(Enum):
    PLAIN = ""
    READ = "r"
    WRITTEN = "w"
    PLACEHOLDER = "0"


_ANN_ORDER = {a: i for i, a in enumerate(Annotation)}


@dataclass(frozen=True)
class Var:
    """A process variable, possibly annotated as read/written/placeholder copy.

    Identity is ``(name, annotation)``; the sort is carried along but not
    compared.
    """

    name: str
    sort: Sort = field(compare=False)
    annotation: Annotation = Annotation.PLAIN

    def _with(self, annotation: Annotation) -> "Var":
        return Var(self.name, self.sort, annotation)

    @property
    def plain(self) -> "Var":
        return self._with(Annotation.PLAIN)

    @property
    def read(self) -> "Var":
        return self._with(Annotation.READ)

    @property
    def written(self) -> "Var":
        return self._with(Annotation.WRITTEN)

    @property
    def placeholder(self) -> "Var":
        return self._with(Annotation.PLACEHOLDER)

    def copy(self, tag: str | int) -> "Var":
        """Fresh plain variable distinct from every user variable."""
        return Var(f"{self.name}~{tag}", self.sort)

    @property
    def symbol(self) -> str:
        if self.annotation is Annotation.PLAIN:
            return self.name
        return f"{self.name}^{self.annotation.value}"

    @property
    def order_key(self) -> tuple:
        return (self.name, _ANN_ORDER[self.annotation])

    def __lt__(self, other: "Var") -> bool:
        return self.order_key < other.order_key

    def __repr__(self) -> str:
        return f"Var({self.symbol}:{self.sort.value})"

    def __str__(self) -> str:
        if self.annotation is Annotation.WRITTEN:
            return self.name + "'"
        if self.annotation is Annotation.PLACEHOLDER:
            return self.name + "_0"
        return self.name


Value = Union[bool, int, Fraction]
Assignment = dict  # Var -> Value


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def fmt_number(q) -> str:
    q = _frac(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class LinTerm:
    """``const + sum(coef * var)`` with exact rational coefficients."""

    coeffs: tuple[tuple[Var, Fraction], ...] = ()
    const: Fraction = Fraction(0)

    @staticmethod
    def build(coeffs: Mapping[Var, Fraction] | Iterable[tuple[Var, Fraction]], const=0) -> "LinTerm":
        acc: dict[Var, Fraction] = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for v, c in items:
            if v.sort is Sort.BOOL:
                raise SortMismatch(f"boolean variable {v.symbol} in arithmetic term")
            acc[v] = acc.get(v, Fraction(0)) + _frac(c)
        pairs = tuple(sorted(((v, c) for v, c in acc.items() if c != 0), key=lambda p: p[0].order_key))
        return LinTerm(pairs, _frac(const))

    @staticmethod
    def of(x: "Var | LinTerm | int | Fraction") -> "LinTerm":
        if isinstance(x, LinTerm):
            return x
        if isinstance(x, Var):
            return LinTerm.build({x: Fraction(1)})
        if isinstance(x, bool):
            raise SortMismatch("boolean used as number")
        return LinTerm((), _frac(x))

    @property
    def vars(self) -> frozenset[Var]:
        return frozenset(v for v, _ in self.coeffs)

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    def coeff(self, v: Var) -> Fraction:
        for w, c in self.coeffs:
            if w == v:
                return c
        return Fraction(0)

    def __add__(self, other) -> "LinTerm":
        other = LinTerm.of(other)
        return LinTerm.build(self.coeffs + other.coeffs, self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> "LinTerm":
        return LinTerm(tuple((v, -c) for v, c in self.coeffs), -self.const)

    def __sub__(self, other) -> "LinTerm":
        return self + (-LinTerm.of(other))

    def __rsub__(self, other) -> "LinTerm":
        return LinTerm.of(other) - self

    def scale(self, k) -> "LinTerm":
        k = _frac(k)
        if k == 0:
            return LinTerm()
        return LinTerm(tuple((v, c * k) for v, c in self.coeffs), self.const * k)

    def __mul__(self, k) -> "LinTerm":
        if isinstance(k, (LinTerm, Var)):
            other = LinTerm.of(k)
            if other.is_constant:
                return self.scale(other.const)
            if self.is_constant:
                return other.scale(self.const)
            raise SortMismatch("non-linear product")
        return self.scale(k)

    __rmul__ = __mul__

    def evaluate(self, a: Mapping[Var, Value]) -> Fraction:
        total = self.const
        for v, c in self.coeffs:
            try:
                val = a[v]
            except KeyError:
                raise UnboundVariable(v.symbol) from None
            if isinstance(val, bool):
                raise SortMismatch(f"boolean value for numeric variable {v.symbol}")
            total += c * val
        return total

    def substitute(self, m: Mapping[Var, "Var | LinTerm"]) -> "LinTerm":
        out = LinTerm((), self.const)
        for v, c in self.coeffs:
            if v in m:
                tgt = m[v]
                if isinstance(tgt, Var):
                    if tgt.sort is not v.sort:
                        raise SortMismatch(f"cannot rename {v.symbol} to {tgt.symbol}")
                    tgt = LinTerm.of(tgt)
                else:
                    for w in tgt.vars:
                        if w.sort is not v.sort:
                            raise SortMismatch(f"cannot substitute {v.symbol} by a term over {w.symbol}")
                out = out + tgt.scale(c)
            else:
                out = out + LinTerm(((v, c),))
        return out

    def __str__(self) -> str:
        parts: list[str] = []
        for v, c in self.coeffs:
            mag = abs(c)
            body = str(v) if mag == 1 else f"{fmt_number(mag)}*{v}"
            if not parts:
                parts.append(body if c > 0 else "-" + body)
            else:
                parts.append(("+ " if c > 0 else "- ") + body)
        if self.const != 0 or not parts:
            if not parts:
                parts.append(fmt_number(self.const))
            else:
                parts.append(("+ " if self.const > 0 else "- ") + fmt_number(abs(self.const)))
        return " ".join(parts)


def _lcm_den(values: Iterable[Fraction]) -> int:
    out = 1
    for q in values:
        out = out * q.denominator // math.gcd(out, q.denominator)
    return out


OPS = ("=", "!=", ">=", ">", "<=", "<")
_NEG_OP = {"=": "!=", "!=": "=", ">=": "<", ">": "<=", "<=": ">", "<": ">="}
_MIRROR_OP = {"=": "=", "!=": "!=", ">=": "<=", ">": "<", "<=": ">=", "<": ">"}
_CMP = {
    "=": lambda x: x == 0,
    "!=": lambda x: x != 0,
    ">=": lambda x: x >= 0,
    ">": lambda x: x > 0,
    "<=": lambda x: x <= 0,
    "<": lambda x: x < 0,
}


class Constraint:
    """Base class of the constraint AST."""

    __slots__ = ()

    def free_vars(self) -> frozenset[Var]:
        raise NotImplementedError

    def evaluate(self, a: Mapping[Var, Value]) -> bool:
        raise NotImplementedError

    def substitute(self, m: Mapping[Var, "Var | LinTerm"]) -> "Constraint":
        raise NotImplementedError

    def negate(self) -> "Constraint":
        """Negation pushed towards the atoms where possible."""
        return Not(self)

    @property
    def key(self) -> str:
        """Canonical serialization; syntactically different but trivially equal
        constraints (reordered conjuncts, scaled atoms) share a key."""
        raise NotImplementedError

    def size(self) -> int:
        return 1

    def __and__(self, other: "Constraint") -> "Constraint":
        return conj(self, other)

    def __or__(self, other: "Constraint") -> "Constraint":
        return disj(self, other)

    def __invert__(self) -> "Constraint":
        return self.negate()


@dataclass(frozen=True)
class BoolConst(Constraint):
    value: bool

    def free_vars(self):
        return frozenset()

    def evaluate(self, a):
        return self.value

    def substitute(self, m):
        return self

    def negate(self):
        return FALSE if self.value else TRUE

    @property
    def key(self):
        return "true" if self.value else "false"

    def __str__(self):
        return self.key


TRUE = BoolConst(True)
FALSE = BoolConst(False)


@dataclass(frozen=True)
class BoolVar(Constraint):
    var: Var

    def __post_init__(self):
        if self.var.sort is not Sort.BOOL:
            raise SortMismatch(f"{self.var.symbol} is not boolean")

    def free_vars(self):
        return frozenset((self.var,))

    def evaluate(self, a):
        try:
            val = a[self.var]
        except KeyError:
            raise UnboundVariable(self.var.symbol) from None
        if not isinstance(val, bool):
            raise SortMismatch(f"non-boolean value for {self.var.symbol}")
        return val

    def substitute(self, m):
        tgt = m.get(self.var)
        if tgt is None:
            return self
        if not isinstance(tgt, Var) or tgt.sort is not Sort.BOOL:
            raise SortMismatch(f"boolean {self.var.symbol} must be renamed to a boolean variable")
        return BoolVar(tgt)

    @property
    def key(self):
        return self.var.symbol

    def __str__(self):
        return str(self.var)


@dataclass(frozen=True)
class Atom(Constraint):
    lhs: LinTerm
    op: str
    rhs: LinTerm

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown comparison {self.op!r}")
        sorts = {v.sort for v in self.lhs.vars | self.rhs.vars}
        if len(sorts) > 1:
            raise SortMismatch(f"comparison mixes sorts {sorted(s.value for s in sorts)}")

    @staticmethod
    def make(lhs, op: str, rhs) -> Constraint:
        atom = Atom(LinTerm.of(lhs), op, LinTerm.of(rhs))
        if not atom.normalized()[1].coeffs:
            return TRUE if atom.evaluate({}) else FALSE
        return atom

    def free_vars(self):
        return self.lhs.vars | self.rhs.vars

    @property
    def sort(self) -> Sort:
        sorts = {v.sort for v in self.free_vars()}
        return Sort.RAT if Sort.RAT in sorts else Sort.INT

    def evaluate(self, a):
        op, coeffs, const = self._int_form
        total = const
        try:
            for v, c in coeffs:
                val = a[v]
                if val is True or val is False:
                    raise SortMismatch(f"boolean value for numeric variable {v.symbol}")
                total += c * val
        except KeyError:
            raise UnboundVariable(v.symbol) from None
        return _CMP[op](total)

    @cached_property
    def _int_form(self):
        op, d = self.integral()
        return op, tuple((v, int(c)) for v, c in d.coeffs), int(d.const)

    def substitute(self, m):
        return Atom.make(self.lhs.substitute(m), self.op, self.rhs.substitute(m))

    def negate(self):
        return Atom(self.lhs, _NEG_OP[self.op], self.rhs)

    def normalized(self) -> tuple[str, LinTerm]:
        return self._normal

    @cached_property
    def _normal(self) -> tuple[str, LinTerm]:
        """``(op, d)`` with ``d op 0`` equivalent to this atom, ``op`` one of
        ``= != >= >``, integer coprime variable coefficients, and for ``=``/
        ``!=`` a positive leading coefficient."""
        d = self.lhs - self.rhs
        op = self.op
        if op in ("<=", "<"):
            d, op = -d, _MIRROR_OP[op]
        if not d.coeffs:
            return op, d
        den = _lcm_den([c for _, c in d.coeffs])
        g = 0
        for _, c in d.coeffs:
            g = math.gcd(g, int(c * den))
        k = Fraction(den, g)
        if op in ("=", "!=") and d.coeffs[0][1] < 0:
            k = -k
        return op, d.scale(k)

    def integral(self) -> tuple[str, LinTerm]:
        """Like :meth:`normalized` but scaled so the constant is integral too."""
        op, d = self.normalized()
        den = d.const.denominator
        return op, d.scale(den) if den != 1 else d

    @cached_property
    def key(self):
        op, d = self.normalized()
        body = " ".join(f"{fmt_number(c)}*{v.symbol}" for v, c in d.coeffs)
        return f"({op} {body} {fmt_number(d.const)})"

    def __str__(self):
        op, d = self.normalized()
        pos = LinTerm(tuple(p for p in d.coeffs if p[1] > 0))
        neg = LinTerm(tuple((v, -c) for v, c in d.coeffs if c < 0))
        c = d.const
        if not pos.coeffs:
            pos, neg, op = neg, pos, _MIRROR_OP[op]
            c = -c
        # now: pos + c  op  neg
        if c < 0:
            neg = neg + (-c)
        elif c > 0:
            if neg.coeffs:
                pos = pos + c
            else:
                neg = LinTerm((), -c)
        return f"{pos} {op} {neg}"


@dataclass(frozen=True)
class Divides(Constraint):
    """``modulus`` divides the integer-valued ``term``; produced by integer
    quantifier elimination."""

    modulus: int
    term: LinTerm

    def free_vars(self):
        return self.term.vars

    def evaluate(self, a):
        val = self.term.evaluate(a)
        if val.denominator != 1:
            raise SortMismatch("divisibility of a non-integer")
        return val.numerator % self.modulus == 0

    def substitute(self, m):
        return divides(self.modulus, self.term.substitute(m))

    @cached_property
    def key(self):
        body = " ".join(f"{fmt_number(c)}*{v.symbol}" for v, c in self.term.coeffs)
        return f"(divides {self.modulus} {body} {fmt_number(self.term.const % self.modulus)})"

    def __str__(self):
        return f"{self.modulus} | {self.term}"


def divides(modulus: int, term: LinTerm) -> Constraint:
    if modulus <= 0:
        raise ValueError("modulus must be positive")
    if modulus == 1:
        return TRUE
    term = LinTerm(
        tuple((v, Fraction(int(c) % modulus)) for v, c in term.coeffs if int(c) % modulus),
        Fraction(int(term.const) % modulus),
    ) if all(c.denominator == 1 for _, c in term.coeffs) and term.const.denominator == 1 else term
    if term.is_constant:
        return TRUE if term.const % modulus == 0 else FALSE
    return Divides(modulus, term)


@dataclass(frozen=True)
class And(Constraint):
    args: tuple[Constraint, ...]

    def free_vars(self):
        return frozenset().union(*(c.free_vars() for c in self.args))

    def evaluate(self, a):
        return all(c.evaluate(a) for c in self.args)

    def substitute(self, m):
        return conj(*(c.substitute(m) for c in self.args))

    def negate(self):
        return disj(*(c.negate() for c in self.args))

    @cached_property
    def key(self):
        return "(and " + " ".join(sorted({c.key for c in self.args})) + ")"

    def size(self):
        return 1 + sum(c.size() for c in self.args)

    def __str__(self):
        return " && ".join(_paren(c, Or) for c in self.args)


@dataclass(frozen=True)
class Or(Constraint):
    args: tuple[Constraint, ...]

    def free_vars(self):
        return frozenset().union(*(c.free_vars() for c in self.args))

    def evaluate(self, a):
        return any(c.evaluate(a) for c in self.args)

    def substitute(self, m):
        return disj(*(c.substitute(m) for c in self.args))

    def negate(self):
        return conj(*(c.negate() for c in self.args))

    @cached_property
    def key(self):
        return "(or " + " ".join(sorted({c.key for c in self.args})) + ")"

    def size(self):
        return 1 + sum(c.size() for c in self.args)

    def __str__(self):
        return " || ".join(_paren(c, And) for c in self.args)


@dataclass(frozen=True)
class Not(Constraint):
    arg: Constraint

    def free_vars(self):
        return self.arg.free_vars()

    def evaluate(self, a):
        return not self.arg.evaluate(a)

    def substitute(self, m):
        return neg(self.arg.substitute(m))

    def negate(self):
        return self.arg

    @cached_property
    def key(self):
        return f"(not {self.arg.key})"

    def size(self):
        return 1 + self.arg.size()

    def __str__(self):
        if isinstance(self.arg, (BoolVar, BoolConst)):
            return f"!{self.arg}"
        return f"!({self.arg})"


@dataclass(frozen=True)
class Exists(Constraint):
    vars: tuple[Var, ...]
    body: Constraint

    def free_vars(self):
        return self.body.free_vars() - frozenset(self.vars)

    def evaluate(self, a):
        # Only finite (boolean) quantification can be decided by evaluation.
        if any(v.sort is not Sort.BOOL for v in self.vars):
            raise SortMismatch("cannot evaluate a numeric existential; use the solver")
        for values in product((False, True), repeat=len(self.vars)):
            b = dict(a)
            b.update(zip(self.vars, values))
            if self.body.evaluate(b):
                return True
        return False

    def substitute(self, m):
        bound = set(self.vars)
        inner = {v: t for v, t in m.items() if v not in bound}
        for t in inner.values():
            tvars = {t} if isinstance(t, Var) else t.vars
            if tvars & bound:
                raise CaptureError(f"substitution captures a variable bound by {self}")
        return exists(self.vars, self.body.substitute(inner))

    @cached_property
    def key(self):
        vs = " ".join(sorted(v.symbol for v in self.vars))
        return f"(exists ({vs}) {self.body.key})"

    def size(self):
        return 1 + self.body.size()

    def __str__(self):
        return "exists " + " ".join(str(v) for v in self.vars) + f". ({self.body})"


def _paren(c: Constraint, kind: type) -> str:
    return f"({c})" if isinstance(c, kind) else str(c)


def conj(*cs: Constraint) -> Constraint:
    out: list[Constraint] = []
    seen: set[str] = set()
    for c in cs:
        parts = c.args if isinstance(c, And) else (c,)
        for p in parts:
            if p == TRUE:
                continue
            if p == FALSE:
                return FALSE
            if p.key not in seen:
                seen.add(p.key)
                out.append(p)
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(*cs: Constraint) -> Constraint:
    out: list[Constraint] = []
    seen: set[str] = set()
    for c in cs:
        parts = c.args if isinstance(c, Or) else (c,)
        for p in parts:
            if p == FALSE:
                continue
            if p == TRUE:
                return TRUE
            if p.key not in seen:
                seen.add(p.key)
                out.append(p)
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def neg(c: Constraint) -> Constraint:
    return c.negate()


def exists(vs: Iterable[Var], body: Constraint) -> Constraint:
    live = tuple(sorted(set(vs) & body.free_vars()))
    return Exists(live, body) if live else body


def iff(a: Constraint, b: Constraint) -> Constraint:
    return disj(conj(a, b), conj(neg(a), neg(b)))


def eq(x: Var, y: "Var | Value") -> Constraint:
    """``x = y`` for a variable and a variable or value of the same sort."""
    if x.sort is Sort.BOOL:
        if isinstance(y, Var):
            return iff(BoolVar(x), BoolVar(y))
        return BoolVar(x) if Sort.BOOL.coerce(y) else neg(BoolVar(x))
    return Atom.make(x, "=", y)


def sorted_conj(cs: Iterable[Constraint]) -> Constraint:
    """Conjunction with arguments in canonical (key) order."""
    return conj(*sorted(cs, key=lambda c: c.key))


def rename(c: Constraint, m: Mapping[Var, "Var | LinTerm"]) -> Constraint:
    """Simultaneous substitution of variables by variables or linear terms."""
    return c.substitute(m) if m else c


def read_vars(guard: Constraint) -> frozenset[Var]:
    """Plain variables whose read copy ``v^r`` occurs in ``guard``."""
    return frozenset(v.plain for v in guard.free_vars() if v.annotation is Annotation.READ)


def write_vars(guard: Constraint) -> frozenset[Var]:
    """Plain variables whose written copy ``v^w`` occurs in ``guard``."""
    return frozenset(v.plain for v in guard.free_vars() if v.annotation is Annotation.WRITTEN)


def transition_formula(guard: Constraint, all_vars: Iterable[Var]) -> Constraint:
    """The guard plus ``v^w = v^r`` for every variable the guard does not write."""
    written = write_vars(guard)
    frame = [eq(v.written, v.read) for v in sorted(all_vars) if v.plain not in written]
    return conj(guard, *frame)


def assignment_formula(alpha: Mapping[Var, Value]) -> Constraint:
    """``C_alpha``: each variable equals its assigned value."""
    return conj(*(eq(v, alpha[v]) for v in sorted(alpha)))


def placeholder_formula(variables: Iterable[Var]) -> Constraint:
    """Each variable equals its placeholder copy."""
    return conj(*(eq(v, v.placeholder) for v in sorted(variables)))


def evaluate(c: Constraint, a: Mapping[Var, Value]) -> bool:
    return c.evaluate(a)
