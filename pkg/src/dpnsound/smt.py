"""SMT gateway: every logical question is answered by an external solver
process spoken to over the SMT-LIB2 text protocol.

Booleans are encoded as 0/1 integers so the solver only ever sees mixed
linear integer/real arithmetic.  Answers are cached by the canonical key of
the query.
"""

from __future__ import annotations

import logging
import os
import re
import select
import shutil
import subprocess
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence

from .constraints import (
    FALSE, TRUE, And, Atom, BoolConst, BoolVar, Constraint, Divides, Exists, LinTerm,
    Not, Or, Sort, Value, Var, conj, disj, divides, exists, neg,
)
from .errors import Inconclusive, QENotSupported, SolverError, SolverUnavailable

log = logging.getLogger(__name__)

SOLVER_ENV = "DPNSOUND_SOLVER"
QE_TACTIC = "(then qe simplify)"
SIMPLIFY_TACTIC = "(then simplify propagate-values ctx-simplify ctx-solver-simplify simplify)"
_SENTINEL = "@@dpnsound-done@@"


# ---------------------------------------------------------------------------
# s-expressions

_SEXP_TOKEN = re.compile(r'\s*(?:(;[^\n]*)|(\()|(\))|(\|[^|]*\|)|("(?:[^"]|"")*")|([^\s()|";]+))')


def parse_sexprs(text: str) -> list:
    """Parse SMT-LIB output into nested Python lists of string atoms."""
    stack: list[list] = [[]]
    pos = 0
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise SolverError(f"cannot parse solver output near {text[pos:pos + 40]!r}")
            break
        pos = m.end()
        comment, lpar, rpar, qsym, string, atom = m.groups()
        if comment:
            continue
        if lpar:
            stack.append([])
        elif rpar:
            if len(stack) == 1:
                raise SolverError("unbalanced parenthesis in solver output")
            done = stack.pop()
            stack[-1].append(done)
        elif qsym:
            stack[-1].append(qsym[1:-1])
        elif string:
            stack[-1].append(string)
        elif atom:
            stack[-1].append(atom)
    if len(stack) != 1:
        raise SolverError("truncated solver output")
    return stack[0]


# ---------------------------------------------------------------------------
# printing

def smt_symbol(v: Var) -> str:
    return f"|{v.symbol}|"


def smt_sort(v: Var) -> str:
    return "Real" if v.sort is Sort.RAT else "Int"


def _num(q: Fraction, real: bool) -> str:
    q = Fraction(q)
    if real:
        body = f"{abs(q.numerator)}.0" if q.denominator == 1 else f"(/ {abs(q.numerator)}.0 {q.denominator}.0)"
    else:
        if q.denominator != 1:
            raise SolverError("fractional constant in integer context")
        body = str(abs(q.numerator))
    return f"(- {body})" if q < 0 else body


def _sum(term: LinTerm, real: bool, with_const: bool = True) -> str:
    parts = []
    for v, c in term.coeffs:
        x = smt_symbol(v)
        if real and v.sort is not Sort.RAT:
            x = f"(to_real {x})"
        parts.append(x if c == 1 else f"(* {_num(c, real)} {x})")
    if with_const and term.const != 0:
        parts.append(_num(term.const, real))
    if not parts:
        return _num(Fraction(0), real)
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def to_smt(c: Constraint) -> str:
    if isinstance(c, BoolConst):
        return "true" if c.value else "false"
    if isinstance(c, BoolVar):
        return f"(= {smt_symbol(c.var)} 1)"
    if isinstance(c, Atom):
        text = c.__dict__.get("_smt_text")
        if text is None:
            real = c.sort is Sort.RAT
            op, d = c.integral()
            lhs = _sum(LinTerm(d.coeffs), real)
            rhs = _num(-d.const, real)
            text = f"(not (= {lhs} {rhs}))" if op == "!=" else f"({op} {lhs} {rhs})"
            c.__dict__["_smt_text"] = text
        return text
    if isinstance(c, Divides):
        return f"(= (mod {_sum(c.term, False)} {c.modulus}) 0)"
    if isinstance(c, And):
        return "(and " + " ".join(to_smt(a) for a in c.args) + ")"
    if isinstance(c, Or):
        return "(or " + " ".join(to_smt(a) for a in c.args) + ")"
    if isinstance(c, Not):
        return f"(not {to_smt(c.arg)})"
    if isinstance(c, Exists):
        binders = " ".join(f"({smt_symbol(v)} {smt_sort(v)})" for v in c.vars)
        body = to_smt(conj(*(_bool_bound(v) for v in c.vars if v.sort is Sort.BOOL), c.body))
        return f"(exists ({binders}) {body})"
    raise TypeError(f"cannot print {type(c).__name__}")


def _bool_bound(v: Var) -> Constraint:
    shadow = _shadow(v)
    return And((Atom(LinTerm.of(shadow), ">=", LinTerm()), Atom(LinTerm.of(shadow), "<=", LinTerm.of(1))))


def _shadow(v: Var) -> Var:
    """Integer stand-in for a 0/1-coded boolean variable."""
    return Var(v.name, Sort.INT, v.annotation)


def declarations(vs: Iterable[Var]) -> str:
    lines = []
    for v in sorted(vs):
        lines.append(f"(declare-const {smt_symbol(v)} {smt_sort(v)})")
        if v.sort is Sort.BOOL:
            lines.append(f"(assert (and (<= 0 {smt_symbol(v)}) (<= {smt_symbol(v)} 1)))")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# reading solver terms back

@dataclass
class _Mod:
    term: LinTerm
    modulus: int


class _Reader:
    def __init__(self, symbols: Mapping[str, Var]):
        self.symbols = symbols

    def var(self, name: str) -> Var:
        try:
            v = self.symbols[name]
        except KeyError:
            raise SolverError(f"solver mentioned unknown symbol {name!r}") from None
        return _shadow(v) if v.sort is Sort.BOOL else v

    # terms ------------------------------------------------------------
    def term(self, e, env) -> "LinTerm | _Mod":
        if isinstance(e, str):
            if e in env:
                return self.term(env[e], env)
            if e[0].isdigit():
                return LinTerm.of(Fraction(e))
            return LinTerm.of(self.var(e))
        if not e:
            raise SolverError("empty term")
        head, args = e[0], e[1:]
        if head == "let":
            return self.term(args[1], self._bind(args[0], env))
        if head == "to_real":
            return self.term(args[0], env)
        if head == "-":
            parts = [self.lin(a, env) for a in args]
            if len(parts) == 1:
                return -parts[0]
            out = parts[0]
            for p in parts[1:]:
                out = out - p
            return out
        if head == "+":
            out = LinTerm()
            for a in args:
                out = out + self.lin(a, env)
            return out
        if head == "*":
            out = LinTerm.of(1)
            for a in args:
                out = out * self.lin(a, env)
            return out
        if head == "/":
            num, den = (self.lin(a, env) for a in args)
            if not den.is_constant or den.const == 0:
                raise SolverError("non-constant division in solver output")
            return num.scale(1 / den.const)
        if head == "mod":
            t = self.lin(args[0], env)
            k = self.lin(args[1], env)
            if not k.is_constant or k.const.denominator != 1 or k.const <= 0:
                raise QENotSupported("mod by a non-constant")
            return _Mod(t, int(k.const))
        raise QENotSupported(f"unsupported term {head!r} in solver output")

    def lin(self, e, env) -> LinTerm:
        t = self.term(e, env)
        if isinstance(t, _Mod):
            raise QENotSupported("mod used inside arithmetic")
        return t

    def _bind(self, bindings, env):
        new = dict(env)
        for name, value in bindings:
            new[name] = value if not isinstance(value, str) or value not in env else env[value]
        return new

    # formulas ---------------------------------------------------------
    def formula(self, e, env) -> Constraint:
        if isinstance(e, str):
            if e in env:
                return self.formula(env[e], env)
            if e == "true":
                return TRUE
            if e == "false":
                return FALSE
            raise SolverError(f"unexpected boolean symbol {e!r}")
        head, args = e[0], e[1:]
        if isinstance(head, list) and len(head) == 3 and head[:2] == ["_", "divisible"]:
            return divides(int(head[2]), self.lin(args[0], env))
        if head == "let":
            return self.formula(args[1], self._bind(args[0], env))
        if head == "and":
            return conj(*(self.formula(a, env) for a in args))
        if head == "or":
            return disj(*(self.formula(a, env) for a in args))
        if head == "not":
            return neg(self.formula(args[0], env))
        if head == "=>":
            *ants, cons = args
            return disj(*(neg(self.formula(a, env)) for a in ants), self.formula(cons, env))
        if head == "xor":
            a, b = (self.formula(x, env) for x in args)
            return disj(conj(a, neg(b)), conj(neg(a), b))
        if head == "ite":
            c, a, b = (self.formula(x, env) for x in args)
            return disj(conj(c, a), conj(neg(c), b))
        if head in ("exists", "forall"):
            raise QENotSupported("quantifier left in solver output")
        if head in ("=", "distinct", "<=", "<", ">=", ">"):
            if head == "=" and self._is_formula(args[0], env):
                parts = [self.formula(a, env) for a in args]
                return conj(*(disj(conj(x, y), conj(neg(x), neg(y))) for x, y in zip(parts, parts[1:])))
            terms = [self.term(a, env) for a in args]
            if head == "distinct":
                if len(terms) != 2:
                    return conj(*(self._compare(x, "!=", y) for i, x in enumerate(terms) for y in terms[i + 1:]))
                return self._compare(terms[0], "!=", terms[1])
            op = "=" if head == "=" else head
            return conj(*(self._compare(x, op, y) for x, y in zip(terms, terms[1:])))
        raise QENotSupported(f"unsupported connective {head!r} in solver output")

    def _is_formula(self, e, env) -> bool:
        if isinstance(e, str):
            if e in env:
                return self._is_formula(env[e], env)
            return e in ("true", "false")
        head = e[0]
        return head in ("and", "or", "not", "=>", "xor", "<=", "<", ">=", ">", "distinct") or (
            head in ("=", "ite", "let") and self._is_formula(e[-1] if head != "=" else e[1], env)
        ) or isinstance(head, list)

    def _compare(self, x, op: str, y) -> Constraint:
        if isinstance(x, _Mod) or isinstance(y, _Mod):
            if isinstance(y, _Mod) and not isinstance(x, _Mod):
                x, y, op = y, x, {"=": "=", "!=": "!=", "<=": ">=", "<": ">", ">=": "<=", ">": "<"}[op]
            if isinstance(y, _Mod) or not y.is_constant:
                raise QENotSupported("mod compared against a non-constant")
            residues = [r for r in range(x.modulus) if Atom.make(LinTerm.of(r), op, y).evaluate({})]
            return disj(*(divides(x.modulus, x.term - r) for r in residues))
        atom = Atom.make(x, op, y)
        return self._decode_bools(atom)

    def _decode_bools(self, atom: Constraint) -> Constraint:
        if not isinstance(atom, Atom):
            return atom
        shadows = [v for v in atom.free_vars() if self.symbols.get(v.symbol, v).sort is Sort.BOOL]
        if not shadows:
            return atom
        if len(shadows) != len(atom.free_vars()):
            raise QENotSupported("boolean variable mixed with arithmetic in solver output")
        shadows.sort()
        real = [self.symbols[v.symbol] for v in shadows]
        combos = list(product((0, 1), repeat=len(shadows)))
        cases = []
        for bits in combos:
            if atom.evaluate(dict(zip(shadows, bits))):
                cases.append(conj(*(BoolVar(r) if b else neg(BoolVar(r)) for r, b in zip(real, bits))))
        if len(cases) == len(combos):
            return TRUE
        return disj(*cases)


def canonical_order(c: Constraint) -> Constraint:
    """Sort And/Or arguments by key so output is independent of solver term order."""
    if isinstance(c, And):
        args = _merge_bounds([canonical_order(a) for a in c.args])
        return conj(*sorted(args, key=lambda a: a.key))
    if isinstance(c, Or):
        return disj(*sorted((canonical_order(a) for a in c.args), key=lambda a: a.key))
    if isinstance(c, Not):
        return neg(canonical_order(c.arg))
    return c


def _merge_bounds(args: list[Constraint]) -> list[Constraint]:
    """Replace each pair ``d >= 0``, ``-d >= 0`` of conjuncts by ``d = 0``."""
    lower = {}
    for i, a in enumerate(args):
        if isinstance(a, Atom):
            op, d = a.normalized()
            if op == ">=":
                lower[d] = i
    drop, extra = set(), []
    for d, i in lower.items():
        j = lower.get(-d)
        if j is not None and i not in drop and j not in drop:
            drop |= {i, j}
            extra.append(Atom.make(d, "=", 0))
    if not drop:
        return args
    return [a for i, a in enumerate(args) if i not in drop] + extra


def from_smt(e, symbols: Mapping[str, Var]) -> Constraint:
    return canonical_order(_Reader(symbols).formula(e, {}))


def _value(e, env=None) -> Fraction:
    t = _Reader({}).lin(e, env or {})
    if not t.is_constant:
        raise SolverError(f"non-constant model value {e!r}")
    return t.const


# ---------------------------------------------------------------------------
# results and statistics

class SatStatus(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SatResult:
    status: SatStatus
    model: dict | None = None
    reason: str | None = None

    @property
    def sat(self) -> bool:
        return self.status is SatStatus.SAT

    @property
    def unsat(self) -> bool:
        return self.status is SatStatus.UNSAT


@dataclass
class SolverStats:
    sat_checks: int = 0
    qe_calls: int = 0
    equiv_checks: int = 0
    simplify_calls: int = 0
    cache_hits: int = 0
    elapsed: float = 0.0

    def as_dict(self) -> dict:
        return {
            "satChecks": self.sat_checks,
            "qeCalls": self.qe_calls,
            "equivChecks": self.equiv_checks,
            "simplifyCalls": self.simplify_calls,
            "cacheHits": self.cache_hits,
            "elapsed": round(self.elapsed, 6),
        }

    @property
    def checks(self) -> int:
        return self.sat_checks + self.qe_calls + self.equiv_checks

    def snapshot(self) -> "SolverStats":
        return replace(self)

    def since(self, before: "SolverStats") -> "SolverStats":
        """Counts accumulated after ``before`` was taken."""
        return SolverStats(*(getattr(self, f.name) - getattr(before, f.name) for f in fields(self)))

    def absorb(self, other: "SolverStats") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))


# ---------------------------------------------------------------------------
# solver process

def find_solver(path: str | None = None) -> str:
    candidate = path or os.environ.get(SOLVER_ENV) or shutil.which("z3")
    if not candidate:
        raise SolverUnavailable(f"no SMT solver found; install z3 or set {SOLVER_ENV}")
    resolved = shutil.which(candidate) or (candidate if os.path.exists(candidate) else None)
    if not resolved:
        raise SolverUnavailable(f"solver executable {candidate!r} not found")
    return resolved


class SolverProcess:
    """One interactive solver session over pipes."""

    def __init__(self, executable: str, args: Sequence[str] = (), timeout: float = 10.0):
        self.executable = executable
        self.args = list(args)
        self.timeout = timeout
        self.proc: subprocess.Popen | None = None
        self.generation = 0
        self._buf = b""

    def start(self):
        cmd = [self.executable, "-in", "-smt2", *self.args]
        try:
            self.proc = subprocess.Popen(cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                         stderr=subprocess.STDOUT, bufsize=0)
        except OSError as exc:
            raise SolverUnavailable(f"cannot start {self.executable}: {exc}") from exc
        self._buf = b""
        self.generation += 1
        self.run(
            "(set-option :print-success false)\n"
            "(set-option :produce-models true)\n"
            "(set-option :pp.max_depth 1000000000)\n"
            "(set-option :pp.min_alias_size 1000000000)\n"
            "(set-option :pp.decimal false)\n"
            f"(set-option :timeout {int(self.timeout * 1000)})"
        )

    @property
    def alive(self) -> bool:
        return self.proc is not None and self.proc.poll() is None

    def run(self, script: str) -> str:
        """Send commands and return everything the solver printed for them."""
        if not self.alive:
            self.close()
            self.start()
        assert self.proc and self.proc.stdin and self.proc.stdout
        payload = f'{script}\n(echo "{_SENTINEL}")\n'.encode()
        try:
            self.proc.stdin.write(payload)
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self.close()
            raise SolverUnavailable(f"solver pipe closed: {exc}") from exc
        deadline = time.monotonic() + self.timeout * 2 + 5
        fd = self.proc.stdout.fileno()
        marker = _SENTINEL.encode()
        while True:
            idx = self._buf.find(marker)
            if idx >= 0:
                out, self._buf = self._buf[:idx], self._buf[idx + len(marker):].lstrip(b'"\r\n')
                text = out.decode().rstrip().rstrip('"')
                if "(error" in text:
                    raise SolverError(text.strip())
                return text
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self.close()
                raise Inconclusive("solver did not answer in time")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                self.close()
                raise SolverUnavailable("solver process terminated unexpectedly")
            self._buf += chunk

    def ensure(self):
        if not self.alive:
            self.close()
            self.start()

    def close(self):
        if self.proc is None:
            return
        try:
            if self.proc.poll() is None:
                try:
                    self.proc.stdin.write(b"(exit)\n")
                    self.proc.stdin.flush()
                except OSError:
                    pass
                try:
                    self.proc.wait(timeout=1)
                except subprocess.TimeoutExpired:
                    self.proc.kill()
                    self.proc.wait()
        finally:
            for stream in (self.proc.stdin, self.proc.stdout):
                try:
                    stream.close()
                except Exception:
                    pass
            self.proc = None


# ---------------------------------------------------------------------------
# gateway

class SmtGateway:
    """Satisfiability, quantifier elimination and equivalence over constraints.

    Parameters
    ----------
    solver:
        Path of the solver executable (default: ``$DPNSOUND_SOLVER`` or ``z3``
        on ``PATH``).
    timeout:
        Per-query timeout in seconds; an exceeded timeout yields ``UNKNOWN``.
    cache:
        Reuse answers for queries with the same canonical key.
    """

    def __init__(self, solver: str | None = None, timeout: float = 10.0, cache: bool = True,
                 solver_args: Sequence[str] = ()):
        self.executable = find_solver(solver)
        self.timeout = timeout
        self.use_cache = cache
        self.stats = SolverStats()
        self._cache: dict = {}
        self._proc = SolverProcess(self.executable, solver_args, timeout)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        self._proc.close()

    def _run(self, script: str) -> str:
        t0 = time.perf_counter()
        try:
            return self._proc.run(script)
        finally:
            self.stats.elapsed += time.perf_counter() - t0

    @contextmanager
    def _scope(self, script: str):
        """Run ``script`` inside a push/pop frame; the frame is dropped with the
        process if the solver had to be restarted meanwhile."""
        self._proc.ensure()
        generation = self._proc.generation
        self._run("(push 1)\n" + script)
        try:
            yield
        finally:
            if self._proc.alive and self._proc.generation == generation:
                self._run("(pop 1)")

    def _cached(self, key):
        if self.use_cache and key in self._cache:
            self.stats.cache_hits += 1
            return True, self._cache[key]
        return False, None

    def _store(self, key, value):
        if self.use_cache:
            self._cache[key] = value
        return value

    @staticmethod
    def _sorts(*cs: Constraint) -> tuple:
        # constraint keys omit sorts; the same text over int and rat differs
        vs = set()
        for c in cs:
            vs |= c.free_vars()
            if isinstance(c, Exists):
                vs |= set(c.vars)
        return tuple(sorted((v.symbol, v.sort.value) for v in vs))

    @staticmethod
    def _symbols(vs: Iterable[Var]) -> dict[str, Var]:
        return {v.symbol: v for v in vs}

    # -- satisfiability ------------------------------------------------
    def is_sat(self, c: Constraint) -> SatResult:
        key = ("sat", c.key, self._sorts(c))
        hit, val = self._cached(key)
        if hit:
            return val
        self.stats.sat_checks += 1
        if c == TRUE or c == FALSE:
            res = SatResult(SatStatus.SAT, {}) if c == TRUE else SatResult(SatStatus.UNSAT)
            return self._store(key, res)
        fv = sorted(c.free_vars())
        with self._scope(declarations(fv) + f"\n(assert {to_smt(c)})"):
            res = self._check(fv)
        if res.status is SatStatus.UNKNOWN:
            return res
        return self._store(key, res)

    def _check(self, fv: Sequence[Var]) -> SatResult:
        status = self._run("(check-sat)").strip()
        if status == "unsat":
            return SatResult(SatStatus.UNSAT)
        if status == "unknown":
            reason = self._run("(get-info :reason-unknown)").strip()
            return SatResult(SatStatus.UNKNOWN, reason=reason)
        if status != "sat":
            raise SolverError(f"unexpected check-sat answer {status!r}")
        return SatResult(SatStatus.SAT, self._model(fv))

    def _model(self, fv: Sequence[Var]) -> dict:
        if not fv:
            return {}
        out = self._run("(get-value (" + " ".join(smt_symbol(v) for v in fv) + "))")
        pairs = parse_sexprs(out)[0]
        by_symbol = self._symbols(fv)
        model = {}
        for name, val in pairs:
            v = by_symbol[name.strip("|")]
            model[v] = v.sort.coerce(_value(val))
        return model

    def is_sat_preferring(self, c: Constraint, preferences: Sequence[tuple[Var, Value]]) -> SatResult:
        """Like :meth:`is_sat`, but greedily fixes variables to preferred values
        when this keeps the query satisfiable.  Later preferences for an already
        fixed variable are skipped.  Used for readable witnesses."""
        fv = sorted(c.free_vars() | {v for v, _ in preferences})
        self.stats.sat_checks += 1
        with self._scope(declarations(fv) + f"\n(assert {to_smt(c)})"):
            res = self._check(fv)
            if not res.sat:
                return res
            pins = []
            pinned = set()
            for v, value in preferences:
                if v in pinned:
                    continue
                self.stats.sat_checks += 1
                status = self._run(f"(push 1)\n(assert {to_smt(_pin(v, value))})\n(check-sat)").strip()
                self._run("(pop 1)")
                if status == "sat":
                    pinned.add(v)
                    pins.append(_pin(v, value))
                    self._run(f"(assert {to_smt(pins[-1])})")
            self._run("(check-sat)")
            return SatResult(SatStatus.SAT, self._model(fv))

    # -- quantifier elimination ------------------------------------------
    def qe(self, vs: Iterable[Var], c: Constraint) -> Constraint:
        """Quantifier-free equivalent of ``exists vs. c``."""
        q = exists(vs, c)
        if not isinstance(q, Exists):
            return c
        key = ("qe", q.key, self._sorts(q))
        hit, val = self._cached(key)
        if hit:
            return val
        self.stats.qe_calls += 1
        free = sorted(q.free_vars())
        symbols = self._symbols(list(q.free_vars()) + list(q.vars))
        tactic = f"(try-for {QE_TACTIC} {int(self.timeout * 1000)})"
        try:
            with self._scope(declarations(free) + f"\n(assert {to_smt(q)})"):
                out = self._run(f"(apply {tactic})")
        except SolverError as exc:
            if "tactic failed" in str(exc) or "timeout" in str(exc) or "canceled" in str(exc):
                raise Inconclusive(f"quantifier elimination did not finish: {exc}") from exc
            raise
        result = self._read_goals(out, symbols)
        if result.free_vars() - set(free):
            raise QENotSupported("eliminated variable survived quantifier elimination")
        return self._store(key, result)

    def _read_goals(self, out: str, symbols) -> Constraint:
        exprs = parse_sexprs(out)
        if not exprs or not isinstance(exprs[0], list) or exprs[0][:1] != ["goals"]:
            raise SolverError(f"unexpected tactic output: {out[:200]!r}")
        disjuncts = []
        for goal in exprs[0][1:]:
            if not goal or goal[0] != "goal":
                continue
            parts = []
            items = goal[1:]
            i = 0
            while i < len(items):
                item = items[i]
                if isinstance(item, str) and item.startswith(":"):
                    i += 2
                    continue
                parts.append(from_smt(item, symbols))
                i += 1
            disjuncts.append(conj(*parts))
        return canonical_order(disj(*disjuncts))

    # -- equivalence ----------------------------------------------------
    def equivalent(self, a: Constraint, b: Constraint) -> bool:
        return self.distinguish(a, b) is None

    def distinguish(self, a: Constraint, b: Constraint) -> dict | None:
        """``None`` if ``a`` and ``b`` are equivalent, else an assignment on
        which they differ."""
        if a.key == b.key:
            return None
        ka, kb = sorted((a.key, b.key))
        key = ("equiv", ka, kb, self._sorts(a, b))
        hit, val = self._cached(key)
        if hit:
            return val
        self.stats.equiv_checks += 1
        query = disj(conj(a, neg(b)), conj(neg(a), b))
        fv = sorted(query.free_vars())
        with self._scope(declarations(fv) + f"\n(assert {to_smt(query)})"):
            res = self._check(fv)
        if res.status is SatStatus.UNKNOWN:
            raise Inconclusive("equivalence check returned unknown")
        return self._store(key, res.model if res.sat else None)

    def implies(self, a: Constraint, b: Constraint) -> bool:
        res = self.is_sat(conj(a, neg(b)))
        if res.status is SatStatus.UNKNOWN:
            raise Inconclusive(f"implication check returned unknown: {res.reason}")
        return res.unsat

    # -- simplification -------------------------------------------------
    def simplify(self, c: Constraint) -> Constraint:
        """An equivalent, usually smaller constraint (falls back to ``c``)."""
        if isinstance(c, (BoolConst, BoolVar, Atom, Divides)):
            return c
        key = ("simplify", c.key, self._sorts(c))
        hit, val = self._cached(key)
        if hit:
            return val
        self.stats.simplify_calls += 1
        fv = sorted(c.free_vars())
        try:
            with self._scope(declarations(fv) + f"\n(assert {to_smt(c)})"):
                out = self._run(f"(apply (try-for {SIMPLIFY_TACTIC} {int(self.timeout * 1000)}))")
            result = self._read_goals(out, self._symbols(fv))
        except (SolverError, QENotSupported):
            result = c
        if result.size() > c.size() or (result.free_vars() - c.free_vars()):
            result = c
        return self._store(key, result)


def _pin(v: Var, value: Value) -> Constraint:
    if v.sort is Sort.BOOL:
        return BoolVar(v) if value else neg(BoolVar(v))
    return Atom.make(v, "=", value)
