"""Unfolding a bounded net into a data-aware dynamic system (DDS).

States of the DDS are markings reachable through the flow relation alone;
data is left symbolic and handled by the constraint graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

from .constraints import Constraint, Value, Var, transition_formula
from .dpn import DPN, Marking, TransitionFiring
from .errors import BoundExceeded, NotEnabled, UnboundVariable


@dataclass(frozen=True)
class DdsEdge:
    source: Marking
    action: str
    transition: str
    target: Marking


@dataclass(frozen=True)
class DDS:
    states: tuple[Marking, ...]
    initial: Marking
    edges: tuple[DdsEdge, ...]
    final: frozenset[Marking]
    variables: tuple[Var, ...]
    initial_values: tuple[tuple[Var, Value], ...]
    guards: Mapping[str, Constraint] = field(compare=False, hash=False)

    @cached_property
    def alpha_i(self) -> dict[Var, Value]:
        return dict(self.initial_values)

    @cached_property
    def _out(self) -> dict[Marking, list[DdsEdge]]:
        out: dict[Marking, list[DdsEdge]] = {b: [] for b in self.states}
        for e in self.edges:
            out[e.source].append(e)
        return out

    def out_edges(self, b: Marking) -> list[DdsEdge]:
        return self._out.get(b, [])

    @cached_property
    def _deltas(self) -> dict[str, Constraint]:
        return {tid: transition_formula(g, self.variables) for tid, g in self.guards.items()}

    def delta(self, transition: str) -> Constraint:
        """Transition formula: guard plus frame equalities for unwritten variables."""
        return self._deltas[transition]

    @property
    def size(self) -> tuple[int, int]:
        return len(self.states), len(self.edges)

    def is_final(self, b: Marking) -> bool:
        return b in self.final


def dpn_to_dds(dpn: DPN, k: int = 1) -> DDS:
    """Markings reachable from the initial one via the flow relation, with one
    edge per enabled transition.  Raises :class:`BoundExceeded` once some place
    would hold more than ``k`` tokens."""
    if k < 1:
        raise ValueError("bound must be positive")
    for what, m in (("initial", dpn.initial_marking), ("final", dpn.final_marking)):
        if m.max_tokens > k:
            raise BoundExceeded(f"{what} marking {m} exceeds bound {k}")
    seen = {dpn.initial_marking}
    order = [dpn.initial_marking]
    edges = []
    queue = deque(order)
    while queue:
        m = queue.popleft()
        for t in dpn.transitions:
            if not dpn.token_enabled(m, t.id):
                continue
            m2 = dpn.successor_marking(m, t.id)
            if m2.max_tokens > k:
                raise BoundExceeded(f"firing {t.id} in {m} yields {m2}, exceeding bound {k}")
            edges.append(DdsEdge(m, t.action, t.id, m2))
            if m2 not in seen:
                seen.add(m2)
                order.append(m2)
                queue.append(m2)
    final = frozenset({dpn.final_marking}) & seen
    return DDS(tuple(order), dpn.initial_marking, tuple(edges), final,
               dpn.variables, dpn.initial_values, {t.id: t.guard for t in dpn.transitions})


def dds_step(dds: DDS, state: Marking, alpha: Mapping[Var, Value],
             firing: TransitionFiring) -> tuple[Marking, dict[Var, Value]]:
    """One concrete DDS step; raises :class:`NotEnabled` if it is not admitted."""
    edge = next((e for e in dds.out_edges(state) if e.transition == firing.transition), None)
    if edge is None:
        raise NotEnabled(f"no edge for {firing.transition} from {state}")
    beta = firing.beta_map
    env = {v.read: alpha[v] for v in dds.variables}
    for v in dds.variables:
        if v.read in beta and beta[v.read] != alpha[v]:
            raise NotEnabled(f"{firing.transition}: read value of {v.name} differs from the current value")
    env.update(beta)
    try:
        ok = dds.guards[firing.transition].evaluate(env)
    except UnboundVariable as exc:
        raise NotEnabled(f"{firing.transition}: firing leaves {exc.args[0]} unassigned") from None
    if not ok:
        raise NotEnabled(f"{firing.transition}: guard is false for the given values")
    new_alpha = dict(alpha)
    for v, x in firing.writes().items():
        new_alpha[v] = v.sort.coerce(x)
    return edge.target, new_alpha
