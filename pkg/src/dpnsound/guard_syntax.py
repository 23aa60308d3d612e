"""Concrete syntax for guards and formulas.

Grammar (whitespace insensitive)::

    formula    := conj ('||' conj)*
    conj       := unary ('&&' unary)*
    unary      := '!' unary | 'true' | 'false' | comparison
                | bool_ref (('=' | '==' | '!=') bool_ref)? | '(' formula ')'
    comparison := term op term          op in  = == != >= > <= <
    term       := ['-'] prod (('+' | '-') prod)*
    prod       := factor ('*' factor)*   -- at most one non-constant factor
    factor     := NUMBER | var_ref | '(' term ')' | '-' factor
    var_ref    := IDENT ["'"]
    NUMBER     := digits ['.' digits] ['/' digits]

In guards a bare identifier ``x`` is the value read before firing (``x^r``)
and ``x'`` the value written by the transition (``x^w``).  In plain formulas
(node labels) ``x`` is the variable itself and ``x_0`` its placeholder copy.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Mapping

from .constraints import (
    FALSE, TRUE, Atom, BoolVar, Constraint, LinTerm, Sort, Var, conj, disj, iff, neg,
)
from .errors import GuardParseError, SortMismatch, UndeclaredVariable

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:/\d+)?)|(?P<id>[A-Za-z_][A-Za-z0-9_]*'?)"
    r"|(?P<op>&&|\|\||==|!=|>=|<=|[=<>!()+\-*]))"
)
_CMP_OPS = {"=": "=", "==": "=", "!=": "!=", ">=": ">=", ">": ">", "<=": "<=", "<": "<"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise GuardParseError("unexpected character", text, pos)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


def _number(tok: str) -> Fraction:
    if "/" in tok:
        num, den = tok.split("/")
        if int(den) == 0:
            raise ZeroDivisionError(tok)
        return Fraction(num) / Fraction(den)
    return Fraction(tok)


class _Backtrack(Exception):
    pass


class _Parser:
    def __init__(self, text: str, sorts: Mapping[str, Sort], mode: str):
        self.text = text
        self.sorts = sorts
        self.mode = mode
        self.toks = _tokenize(text)
        self.i = 0
        self.err_pos = 0
        self.err_msg = "syntax error"

    # helpers
    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, msg: str):
        pos = self.peek()[2]
        if pos >= self.err_pos:
            self.err_pos, self.err_msg = pos, msg
        raise _Backtrack()

    def accept(self, value: str) -> bool:
        if self.peek()[1] == value and self.peek()[0] == "op":
            self.i += 1
            return True
        return False

    def expect(self, value: str):
        if not self.accept(value):
            self.fail(f"expected {value!r}")

    def resolve(self, ident: str) -> Var:
        primed = ident.endswith("'")
        name = ident[:-1] if primed else ident
        if self.mode == "guard":
            if name not in self.sorts:
                raise UndeclaredVariable(name)
            v = Var(name, self.sorts[name])
            return v.written if primed else v.read
        if primed:
            self.fail("primed variable outside a guard")
        if name in self.sorts:
            return Var(name, self.sorts[name])
        if name.endswith("_0") and name[:-2] in self.sorts:
            return Var(name[:-2], self.sorts[name[:-2]]).placeholder
        raise UndeclaredVariable(name)

    # grammar
    def parse(self) -> Constraint:
        try:
            out = self.formula()
            if self.peek()[0] != "eof":
                self.fail("trailing input")
            return out
        except _Backtrack:
            raise GuardParseError(self.err_msg, self.text, self.err_pos) from None

    def formula(self) -> Constraint:
        parts = [self.conjunction()]
        while self.accept("||"):
            parts.append(self.conjunction())
        return disj(*parts) if len(parts) > 1 else parts[0]

    def conjunction(self) -> Constraint:
        parts = [self.unary()]
        while self.accept("&&"):
            parts.append(self.unary())
        return conj(*parts) if len(parts) > 1 else parts[0]

    def unary(self) -> Constraint:
        if self.accept("!"):
            return neg(self.unary())
        kind, val, _ = self.peek()
        if kind == "id" and val in ("true", "false"):
            self.i += 1
            return TRUE if val == "true" else FALSE
        start = self.i
        try:
            return self.comparison()
        except _Backtrack:
            self.i = start
        try:
            return self.bool_atom()
        except _Backtrack:
            self.i = start
        if self.accept("("):
            inner = self.formula()
            self.expect(")")
            return inner
        self.fail("expected a constraint")

    def bool_ref(self) -> Constraint:
        kind, val, _ = self.peek()
        if kind != "id":
            self.fail("expected a boolean")
        if val in ("true", "false"):
            self.i += 1
            return TRUE if val == "true" else FALSE
        v = self.resolve(val)
        if v.sort is not Sort.BOOL:
            self.fail(f"{val} is not boolean")
        self.i += 1
        return BoolVar(v)

    def bool_atom(self) -> Constraint:
        left = self.bool_ref()
        kind, val, _ = self.peek()
        if kind == "op" and val in ("=", "==", "!="):
            self.i += 1
            right = self.bool_ref()
            same = iff(left, right)
            return same if val != "!=" else neg(same)
        return left

    def comparison(self) -> Constraint:
        lhs = self.term()
        kind, val, _ = self.peek()
        if kind != "op" or val not in _CMP_OPS:
            self.fail("expected a comparison operator")
        self.i += 1
        rhs = self.term()
        sorts = {v.sort for v in lhs.vars | rhs.vars}
        if len(sorts) > 1:
            self.fail("comparison mixes int and rat variables")
        return Atom.make(lhs, _CMP_OPS[val], rhs)

    def term(self) -> LinTerm:
        negate = False
        if self.accept("-"):
            negate = True
        elif self.accept("+"):
            pass
        acc = self.product()
        if negate:
            acc = -acc
        while True:
            if self.accept("+"):
                acc = acc + self.product()
            elif self.accept("-"):
                acc = acc - self.product()
            else:
                return acc

    def product(self) -> LinTerm:
        acc = self.factor()
        while self.accept("*"):
            rhs = self.factor()
            try:
                acc = acc * rhs
            except SortMismatch:
                self.fail("non-linear product")
        return acc

    def factor(self) -> LinTerm:
        kind, val, _ = self.peek()
        if kind == "num":
            self.i += 1
            return LinTerm.of(_number(val))
        if kind == "id" and val not in ("true", "false"):
            v = self.resolve(val)
            if v.sort is Sort.BOOL:
                self.fail(f"boolean {val} used as a number")
            self.i += 1
            return LinTerm.of(v)
        if self.accept("-"):
            return -self.factor()
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        self.fail("expected a term")


def parse_guard(text: str, sorts: Mapping[str, Sort]) -> Constraint:
    """Parse a transition guard over read (``x``) and written (``x'``) variables."""
    if text is None or not text.strip():
        return TRUE
    return _Parser(text, sorts, "guard").parse()


def parse_formula(text: str, sorts: Mapping[str, Sort]) -> Constraint:
    """Parse a state formula over plain variables and placeholders ``x_0``."""
    if text is None or not text.strip():
        return TRUE
    return _Parser(text, sorts, "plain").parse()


def format_constraint(c: Constraint) -> str:
    return str(c)
