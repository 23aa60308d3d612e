"""Data Petri nets: markings, enablement, firing and structural validation."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

from .constraints import (
    Annotation, Constraint, Sort, TRUE, Value, Var, conj, eq, write_vars,
)
from .errors import Inconclusive, InvalidNet, NotEnabled, UnboundVariable


class Marking:
    """Immutable multiset of places.  Places with zero tokens are dropped."""

    __slots__ = ("_items", "_hash")

    def __init__(self, tokens: Mapping[str, int] | Iterable[str] = ()):
        if isinstance(tokens, Mapping):
            counts = {p: int(n) for p, n in tokens.items()}
        else:
            counts = Counter(tokens)
        for p, n in counts.items():
            if n < 0:
                raise ValueError(f"negative token count for {p}")
        self._items = tuple(sorted((p, n) for p, n in counts.items() if n))
        self._hash = hash(self._items)

    def __getitem__(self, place: str) -> int:
        for p, n in self._items:
            if p == place:
                return n
        return 0

    def items(self):
        return self._items

    @property
    def places(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self._items)

    @property
    def total(self) -> int:
        return sum(n for _, n in self._items)

    @property
    def max_tokens(self) -> int:
        return max((n for _, n in self._items), default=0)

    def covers(self, other: "Marking") -> bool:
        """Pointwise ``self >= other``."""
        return all(self[p] >= n for p, n in other._items)

    def __add__(self, other: Mapping[str, int]) -> "Marking":
        out = dict(self._items)
        for p, n in (other.items() if not isinstance(other, Marking) else other._items):
            out[p] = out.get(p, 0) + n
        return Marking(out)

    def __sub__(self, other: Mapping[str, int]) -> "Marking":
        out = dict(self._items)
        for p, n in (other.items() if not isinstance(other, Marking) else other._items):
            out[p] = out.get(p, 0) - n
        return Marking(out)

    def __eq__(self, other):
        return isinstance(other, Marking) and self._items == other._items

    def __lt__(self, other: "Marking") -> bool:
        return self._items < other._items

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Marking({dict(self._items)!r})"

    def __str__(self):
        parts = [p if n == 1 else f"{p}*{n}" for p, n in self._items]
        return "{" + ",".join(parts) + "}"

    @property
    def name(self) -> str:
        """Compact state name, e.g. ``p1,p2``; empty marking is ``{}``."""
        return ",".join(p if n == 1 else f"{p}*{n}" for p, n in self._items) or "{}"


@dataclass(frozen=True)
class Transition:
    id: str
    guard: Constraint = TRUE
    label: str = ""

    @property
    def action(self) -> str:
        return self.label or self.id

    @cached_property
    def written(self) -> frozenset[Var]:
        return write_vars(self.guard)


@dataclass(frozen=True)
class Arc:
    source: str
    target: str
    weight: int = 1


@dataclass(frozen=True)
class DpnState:
    marking: Marking
    values: tuple[tuple[Var, Value], ...]

    @staticmethod
    def of(marking: Marking, alpha: Mapping[Var, Value]) -> "DpnState":
        return DpnState(marking, tuple(sorted(alpha.items(), key=lambda kv: kv[0].order_key)))

    @cached_property
    def alpha(self) -> dict[Var, Value]:
        return dict(self.values)

    def __str__(self):
        vals = ", ".join(f"{v}={_fmt(x)}" for v, x in self.values)
        return f"({self.marking}, {vals})"


@dataclass(frozen=True)
class TransitionFiring:
    """A transition together with its read/written values ``beta``."""

    transition: str
    beta: tuple[tuple[Var, Value], ...]

    @staticmethod
    def of(transition: str, beta: Mapping[Var, Value]) -> "TransitionFiring":
        return TransitionFiring(transition, tuple(sorted(beta.items(), key=lambda kv: kv[0].order_key)))

    @cached_property
    def beta_map(self) -> dict[Var, Value]:
        return dict(self.beta)

    def writes(self) -> dict[Var, Value]:
        return {v.plain: x for v, x in self.beta if v.annotation is Annotation.WRITTEN}


def _fmt(x: Value) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    element: str
    message: str

    def __str__(self):
        return f"{self.kind}({self.element}): {self.message}"


@dataclass(frozen=True)
class DPN:
    """A data Petri net with one initial and one final marking."""

    places: tuple[str, ...]
    transitions: tuple[Transition, ...]
    arcs: tuple[Arc, ...]
    variables: tuple[Var, ...]
    initial_marking: Marking
    final_marking: Marking
    initial_values: tuple[tuple[Var, Value], ...] = ()
    id: str = "net"

    @staticmethod
    def build(places: Iterable[str], transitions: Iterable[Transition], arcs: Iterable[Arc],
              variables: Iterable[Var], initial_marking: Marking, final_marking: Marking,
              initial_values: Mapping[Var, Value] | None = None, id: str = "net",
              check: bool = True) -> "DPN":
        """Construct a net, filling unset initial values with sort defaults.

        Raises :class:`InvalidNet` when ``check`` is set and validation fails.
        """
        variables = tuple(sorted(variables))
        init = dict(initial_values or {})
        for v in variables:
            init.setdefault(v, v.sort.zero())
        net = DPN(tuple(places), tuple(transitions), tuple(arcs), variables, initial_marking,
                  final_marking, tuple(sorted(init.items(), key=lambda kv: kv[0].order_key)), id)
        if check:
            diags = validate(net)
            if diags:
                raise InvalidNet(diags)
        return net

    @cached_property
    def alpha_i(self) -> dict[Var, Value]:
        return dict(self.initial_values)

    @cached_property
    def sorts(self) -> dict[str, Sort]:
        return {v.name: v.sort for v in self.variables}

    @cached_property
    def transition_map(self) -> dict[str, Transition]:
        return {t.id: t for t in self.transitions}

    def transition(self, tid: str) -> Transition:
        return self.transition_map[tid]

    @cached_property
    def _pre(self) -> dict[str, dict[str, int]]:
        pre: dict[str, dict[str, int]] = {t.id: {} for t in self.transitions}
        for a in self.arcs:
            if a.target in pre:
                pre[a.target][a.source] = pre[a.target].get(a.source, 0) + a.weight
        return pre

    @cached_property
    def _post(self) -> dict[str, dict[str, int]]:
        post: dict[str, dict[str, int]] = {t.id: {} for t in self.transitions}
        for a in self.arcs:
            if a.source in post:
                post[a.source][a.target] = post[a.source].get(a.target, 0) + a.weight
        return post

    def pre(self, tid: str) -> dict[str, int]:
        return self._pre[tid]

    def post(self, tid: str) -> dict[str, int]:
        return self._post[tid]

    @property
    def initial_state(self) -> DpnState:
        return DpnState(self.initial_marking, self.initial_values)

    def token_enabled(self, marking: Marking, tid: str) -> bool:
        return all(marking[p] >= n for p, n in self.pre(tid).items() if n > 0)

    def successor_marking(self, marking: Marking, tid: str) -> Marking:
        return (marking - self.pre(tid)) + self.post(tid)

    def signature(self) -> tuple:
        """Structural identity with guards compared by canonical key."""
        return (self.id, tuple(sorted(self.places)),
                tuple(sorted((t.id, t.action, t.guard.key) for t in self.transitions)),
                tuple(sorted((a.source, a.target, a.weight) for a in self.arcs)),
                tuple((v.symbol, v.sort.value) for v in self.variables),
                self.initial_marking, self.final_marking, self.initial_values)

    def replace(self, **changes) -> "DPN":
        """Copy with some fields replaced (validated)."""
        fields = dict(places=self.places, transitions=self.transitions, arcs=self.arcs,
                      variables=self.variables, initial_marking=self.initial_marking,
                      final_marking=self.final_marking, initial_values=self.alpha_i, id=self.id)
        fields.update(changes)
        return DPN.build(**fields)


def validate(dpn: DPN) -> list[Diagnostic]:
    """Structural and typing problems of ``dpn``; empty when the net is valid."""
    out: list[Diagnostic] = []
    places, tids = set(), set()
    if not dpn.places:
        out.append(Diagnostic("EmptyPlaces", dpn.id, "net has no places"))
    if not dpn.transitions:
        out.append(Diagnostic("EmptyTransitions", dpn.id, "net has no transitions"))
    for p in dpn.places:
        if p in places:
            out.append(Diagnostic("IdClash", p, "duplicate place id"))
        places.add(p)
    for t in dpn.transitions:
        if t.id in tids or t.id in places:
            out.append(Diagnostic("IdClash", t.id, "id used more than once"))
        tids.add(t.id)
    names = {}
    for v in dpn.variables:
        if v.annotation is not Annotation.PLAIN:
            out.append(Diagnostic("BadVariable", v.symbol, "declared variables must be plain"))
        if v.name in names:
            out.append(Diagnostic("IdClash", v.name, "duplicate variable"))
        names[v.name] = v.sort
    for a in dpn.arcs:
        where = f"{a.source}->{a.target}"
        if a.weight < 0:
            out.append(Diagnostic("NegativeWeight", where, "arc multiplicity must be >= 0"))
        ok = (a.source in places and a.target in tids) or (a.source in tids and a.target in places)
        if not ok:
            missing = [x for x in (a.source, a.target) if x not in places and x not in tids]
            if missing:
                out.append(Diagnostic("UnknownReference", missing[0], f"arc {where} references it"))
            else:
                out.append(Diagnostic("BadArc", where, "arcs must connect a place and a transition"))
    for t in dpn.transitions:
        for v in sorted(t.guard.free_vars()):
            if v.name not in names:
                out.append(Diagnostic("UndeclaredVariable", v.name, f"used in guard of {t.id}"))
            elif names[v.name] is not v.sort:
                out.append(Diagnostic("SortMismatch", v.name, f"guard of {t.id} uses a different sort"))
            if v.annotation not in (Annotation.READ, Annotation.WRITTEN):
                out.append(Diagnostic("BadVariable", v.symbol, f"guard of {t.id} must use read/written copies"))
    for what, m in (("initial", dpn.initial_marking), ("final", dpn.final_marking)):
        for p in m.places:
            if p not in places:
                out.append(Diagnostic("UnknownReference", p, f"{what} marking references it"))
    alpha = dpn.alpha_i
    for v in dpn.variables:
        if v not in alpha:
            out.append(Diagnostic("PartialAssignment", v.name, "no initial value"))
            continue
        try:
            v.sort.coerce(alpha[v])
        except Exception:
            out.append(Diagnostic("SortMismatch", v.name, f"initial value {alpha[v]!r} has the wrong sort"))
    return out


def read_constraint(dpn: DPN, alpha: Mapping[Var, Value]) -> Constraint:
    """Fix every read copy ``v^r`` to the current value ``alpha(v)``."""
    return conj(*(eq(v.read, alpha[v]) for v in dpn.variables))


def enabled_firing(dpn: DPN, state: DpnState, tid: str, gateway) -> TransitionFiring | None:
    """A valid firing of ``tid`` in ``state`` or ``None`` if it is not enabled.

    The written values come from a solver model of the guard with all read
    copies fixed to the current assignment.
    """
    t = dpn.transition(tid)
    if not dpn.token_enabled(state.marking, tid):
        return None
    query = conj(t.guard, read_constraint(dpn, state.alpha))
    res = gateway.is_sat(query)
    if res.status.name == "UNKNOWN":
        raise Inconclusive(f"enablement of {tid}: {res.reason}")
    if not res.sat:
        return None
    beta = {v.read: state.alpha[v] for v in dpn.variables}
    for v in t.written:
        beta[v.written] = res.model.get(v.written, v.sort.zero())
    return TransitionFiring.of(tid, beta)


def check_firing(dpn: DPN, state: DpnState, firing: TransitionFiring) -> None:
    """Raise :class:`NotEnabled` unless ``firing`` is valid in ``state``."""
    if firing.transition not in dpn.transition_map:
        raise NotEnabled(f"unknown transition {firing.transition}")
    t = dpn.transition(firing.transition)
    if not dpn.token_enabled(state.marking, t.id):
        raise NotEnabled(f"{t.id}: not enough tokens in {state.marking}")
    beta = firing.beta_map
    alpha = state.alpha
    for v in dpn.variables:
        if v.read in beta and beta[v.read] != alpha[v]:
            raise NotEnabled(f"{t.id}: read value of {v.name} differs from the current value")
    env = {v.read: alpha[v] for v in dpn.variables}
    env.update(beta)
    try:
        ok = t.guard.evaluate(env)
    except UnboundVariable as exc:
        raise NotEnabled(f"{t.id}: firing leaves {exc.args[0]} unassigned") from None
    if not ok:
        raise NotEnabled(f"{t.id}: guard is false for the given values")


def fire(dpn: DPN, state: DpnState, firing: TransitionFiring) -> DpnState:
    """Successor state of a valid firing; raises :class:`NotEnabled` otherwise."""
    check_firing(dpn, state, firing)
    alpha = dict(state.alpha)
    for v, x in firing.writes().items():
        alpha[v] = v.sort.coerce(x)
    return DpnState.of(dpn.successor_marking(state.marking, firing.transition), alpha)
