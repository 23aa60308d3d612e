"""Brute-force soundness over finite variable domains.

Written values range over a user-given finite box, so the oracle decides the
box-restricted net.  This agrees with the symbolic checker whenever no run
can leave the box, and serves as an independent reference in tests.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping

from .constraints import Sort, Value, Var
from .dpn import DPN, DpnState, TransitionFiring
from .errors import BoundExceeded, ExplosionGuard

DEFAULT_CAP = 10**6
DEFAULT_INT_RANGE = range(-3, 4)
DEFAULT_RAT_GRID = tuple(Fraction(x) for x in ("-2", "-1", "-1/2", "0", "1/2", "1", "2"))


@dataclass(frozen=True)
class DomainBox:
    """Finite value list per variable name."""

    domains: Mapping[str, tuple[Value, ...]]

    @staticmethod
    def default(variables: Iterable[Var], overrides: Mapping[str, Iterable[Value]] | None = None) -> "DomainBox":
        out = {}
        for v in variables:
            if v.sort is Sort.BOOL:
                out[v.name] = (False, True)
            elif v.sort is Sort.INT:
                out[v.name] = tuple(DEFAULT_INT_RANGE)
            else:
                out[v.name] = DEFAULT_RAT_GRID
        for name, values in (overrides or {}).items():
            out[name] = tuple(values)
        return DomainBox(out)

    @staticmethod
    def grid(lo, hi, step=1) -> tuple[Fraction, ...]:
        lo, hi, step = Fraction(lo), Fraction(hi), Fraction(step)
        if step <= 0:
            raise ValueError("step must be positive")
        out, x = [], lo
        while x <= hi:
            out.append(x)
            x += step
        return tuple(out)

    @staticmethod
    def parse(spec: str, variables: Iterable[Var]) -> "DomainBox":
        """Parse ``VAR=LO..HI[:STEP]`` items separated by commas; unnamed
        variables keep their default domain."""
        variables = list(variables)
        sorts = {v.name: v.sort for v in variables}
        overrides = {}
        for item in filter(None, (s.strip() for s in spec.split(","))):
            m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(-?[\d/.]+)\s*\.\.\s*(-?[\d/.]+)(?:\s*:\s*([\d/.]+))?", item)
            if not m:
                raise ValueError(f"bad domain item {item!r} (expected VAR=LO..HI[:STEP])")
            name, lo, hi, step = m.groups()
            if name not in sorts:
                raise ValueError(f"unknown variable {name!r} in domain box")
            values = DomainBox.grid(lo, hi, step or 1)
            sort = sorts[name]
            overrides[name] = tuple(sort.coerce(x) for x in values if sort is not Sort.INT or x.denominator == 1)
        return DomainBox.default(variables, overrides)

    def values(self, v: Var) -> tuple[Value, ...]:
        return self.domains[v.name]

    def contains(self, alpha: Mapping[Var, Value]) -> bool:
        return all(alpha[v] in self.domains[v.name] for v in alpha)


@dataclass
class StateGraph:
    states: list[DpnState] = field(default_factory=list)
    index: dict[DpnState, int] = field(default_factory=dict)
    edges: list[tuple[int, TransitionFiring, int]] = field(default_factory=list)
    succ: dict[int, list[int]] = field(default_factory=dict)

    def add(self, s: DpnState) -> tuple[int, bool]:
        i = self.index.get(s)
        if i is not None:
            return i, False
        i = len(self.states)
        self.states.append(s)
        self.index[s] = i
        self.succ[i] = []
        return i, True


def box_firings(dpn: DPN, state: DpnState, tid: str, box: DomainBox):
    """All valid firings of ``tid`` in ``state`` with written values from the box."""
    if not dpn.token_enabled(state.marking, tid):
        return
    t = dpn.transition(tid)
    alpha = state.alpha
    reads = {v.read: alpha[v] for v in dpn.variables}
    written = sorted(t.written)
    for combo in product(*(box.values(v) for v in written)):
        env = dict(reads)
        for v, x in zip(written, combo):
            env[v.written] = x
        if t.guard.evaluate(env):
            yield TransitionFiring.of(tid, env)


def successor(dpn: DPN, state: DpnState, firing: TransitionFiring) -> DpnState:
    alpha = dict(state.alpha)
    alpha.update(firing.writes())
    return DpnState.of(dpn.successor_marking(state.marking, firing.transition), alpha)


def enumerate_state_space(dpn: DPN, box: DomainBox, k: int = 1, start: DpnState | None = None,
                          cap: int = DEFAULT_CAP) -> StateGraph:
    """Every state reachable from ``start`` (default: the initial state)."""
    start = start or dpn.initial_state
    if not box.contains(start.alpha):
        raise ValueError(f"start state {start} lies outside the domain box")
    g = StateGraph()
    g.add(start)
    queue = deque([0])
    while queue:
        i = queue.popleft()
        s = g.states[i]
        for t in dpn.transitions:
            for f in box_firings(dpn, s, t.id, box):
                s2 = successor(dpn, s, f)
                if s2.marking.max_tokens > k:
                    raise BoundExceeded(f"{t.id} yields {s2.marking}, exceeding bound {k}")
                j, new = g.add(s2)
                if new:
                    if len(g.states) > cap:
                        raise ExplosionGuard(f"more than {cap} states")
                    queue.append(j)
                g.edges.append((i, f, j))
                g.succ[i].append(j)
    return g


def coreachable(g: StateGraph, targets: Iterable[int]) -> set[int]:
    pred: dict[int, list[int]] = {i: [] for i in range(len(g.states))}
    for i, _, j in g.edges:
        pred[j].append(i)
    seen = set(targets)
    queue = deque(seen)
    while queue:
        j = queue.popleft()
        for i in pred[j]:
            if i not in seen:
                seen.add(i)
                queue.append(i)
    return seen


@dataclass
class OracleVerdict:
    sound: bool
    violated: str | None
    bad_states: list[DpnState] = field(default_factory=list)
    dead_transitions: list[str] = field(default_factory=list)
    blocked_states: list[DpnState] = field(default_factory=list)
    graph: StateGraph | None = field(default=None, repr=False)

    @property
    def violations(self) -> set[str]:
        out = set()
        if self.bad_states:
            out.add("P2")
        if self.dead_transitions:
            out.add("P3")
        if self.blocked_states:
            out.add("P1")
        return out


def oracle_soundness(dpn: DPN, box: DomainBox, k: int = 1, cap: int = DEFAULT_CAP) -> OracleVerdict:
    """Explicit-state soundness of the box-restricted net; the reported
    property is the first violated one in the order P2, P3, P1."""
    g = enumerate_state_space(dpn, box, k, cap=cap)
    mf = dpn.final_marking
    bad = [s for s in g.states if s.marking.covers(mf) and s.marking != mf]
    used = {f.transition for _, f, _ in g.edges}
    dead = [t.id for t in dpn.transitions if t.id not in used]
    good = coreachable(g, [i for i, s in enumerate(g.states) if s.marking == mf])
    blocked = [s for i, s in enumerate(g.states) if i not in good]
    violated = "P2" if bad else "P3" if dead else "P1" if blocked else None
    return OracleVerdict(violated is None, violated, bad, dead, blocked, g)


def can_complete(dpn: DPN, state: DpnState, box: DomainBox, k: int = 1, cap: int = DEFAULT_CAP) -> bool:
    """Whether some box-restricted run from ``state`` reaches the final marking."""
    g = enumerate_state_space(dpn, box, k, start=state, cap=cap)
    return any(s.marking == dpn.final_marking for s in g.states)
