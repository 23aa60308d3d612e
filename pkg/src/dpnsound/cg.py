"""Constraint graphs: symbolic reachability over a DDS.

A node pairs a DDS state with a quantifier-free formula describing the
variable values possible there.  Successors are images of the formula under
the transition formula of an edge; a successor equivalent to an existing
formula at the same state is merged into that node.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .constraints import (
    Constraint, Var, assignment_formula, conj, disj, placeholder_formula, rename,
)
from .dds import DDS
from .dpn import Marking
from .errors import BudgetExceeded, Inconclusive
from .smt import SatStatus, SmtGateway

DEFAULT_BUDGET = 10_000


class Mode(Enum):
    MAIN = "main"
    PLACEHOLDER = "placeholder"


@dataclass(frozen=True)
class CGNode:
    id: int
    state: Marking
    formula: Constraint
    depth: int = 0

    def __str__(self):
        return f"({self.state.name}, {self.formula})"


@dataclass(frozen=True)
class CGEdge:
    source: int
    action: str
    transition: str
    target: int


@dataclass
class ConstraintGraph:
    mode: Mode
    start: Marking
    nodes: list[CGNode] = field(default_factory=list)
    edges: list[CGEdge] = field(default_factory=list)
    parent: dict[int, CGEdge] = field(default_factory=dict)

    @property
    def initial(self) -> CGNode:
        return self.nodes[0]

    @property
    def size(self) -> tuple[int, int]:
        return len(self.nodes), len(self.edges)

    def node(self, nid: int) -> CGNode:
        return self.nodes[nid]

    def at(self, state: Marking) -> list[CGNode]:
        return [n for n in self.nodes if n.state == state]

    def transitions_used(self) -> set[str]:
        return {e.transition for e in self.edges}

    def path_to(self, node: CGNode | int) -> list[CGEdge]:
        """Edges of the BFS-tree path from the initial node to ``node``."""
        nid = node.id if isinstance(node, CGNode) else node
        path = []
        while nid in self.parent:
            e = self.parent[nid]
            path.append(e)
            nid = e.source
        path.reverse()
        return path


def _ucopies(variables) -> dict[Var, Var]:
    return {v: v.copy("u") for v in variables}


class Explorer:
    """Builds constraint graphs over one DDS and memoizes ``final(b)``.

    ``order`` is ``"bfs"`` (default, shortest witnesses) or ``"dfs"``.
    """

    def __init__(self, dds: DDS, gateway: SmtGateway, budget: int = DEFAULT_BUDGET,
                 order: str = "bfs", simplify: bool = True):
        if budget <= 0:
            raise ValueError("budget must be positive")
        if order not in ("bfs", "dfs"):
            raise ValueError("order must be 'bfs' or 'dfs'")
        self.dds = dds
        self.gw = gateway
        self.budget = budget
        self.order = order
        self.simplify = simplify
        self._u = _ucopies(dds.variables)
        self._frames = {}
        self._updates: dict[tuple[str, str], Constraint] = {}
        self._final: dict[Marking, list[Constraint]] = {}
        self._psi: dict[Marking, Constraint] = {}
        self.placeholder_graphs: dict[Marking, ConstraintGraph] = {}

    # -- symbolic step ---------------------------------------------------
    def _renamed_delta(self, transition: str) -> Constraint:
        if transition not in self._frames:
            m = {}
            for v in self.dds.variables:
                m[v.read] = self._u[v]
                m[v.written] = v
            self._frames[transition] = rename(self.dds.delta(transition), m)
        return self._frames[transition]

    def update(self, phi: Constraint, transition: str) -> Constraint:
        """Quantifier-free image of ``phi`` under the transition formula."""
        delta = self._renamed_delta(transition)
        memo = (phi.key, delta.key)
        out = self._updates.get(memo)
        if out is None:
            body = conj(rename(phi, self._u), delta)
            out = self._updates[memo] = self.gw.qe(self._u.values(), body)
        return out

    # -- graph construction ------------------------------------------------
    def build(self, start: Marking, mode: Mode = Mode.MAIN) -> ConstraintGraph:
        if mode is Mode.MAIN:
            phi0 = assignment_formula(self.dds.alpha_i)
        else:
            phi0 = placeholder_formula(self.dds.variables)
        scope = list(self.dds.variables)
        if mode is Mode.PLACEHOLDER:
            scope += [v.placeholder for v in self.dds.variables]
        # models seen per state; two formulas differing on one are not equivalent
        samples = {start: [self._complete(self.gw.is_sat(phi0).model, scope)]}
        truth = [[True]]  # per node: its value on each sample of its state
        cg = ConstraintGraph(mode, start)
        cg.nodes.append(CGNode(0, start, phi0, 0))
        by_key: dict[tuple[Marking, str], int] = {(start, phi0.key): 0}
        by_state: dict[Marking, list[int]] = {start: [0]}
        work = deque([0])
        while work:
            nid = work.popleft() if self.order == "bfs" else work.pop()
            node = cg.nodes[nid]
            for e in self.dds.out_edges(node.state):
                psi = self.update(node.formula, e.transition)
                target = by_key.get((e.target, psi.key))
                if target is None:
                    res = self.gw.is_sat(psi)
                    if res.status is SatStatus.UNKNOWN:
                        raise Inconclusive(f"satisfiability of an update at {e.target.name}: {res.reason}")
                    if res.unsat:
                        continue
                    pool = samples.setdefault(e.target, [])
                    pool.append(self._complete(res.model, scope))
                    mine = [psi.evaluate(p) for p in pool]
                    for other in reversed(by_state.get(e.target, [])):
                        phi = cg.nodes[other].formula
                        seen = truth[other]
                        seen.extend(phi.evaluate(p) for p in pool[len(seen):])
                        if seen != mine:
                            continue
                        diff = self.gw.distinguish(phi, psi)
                        if diff is None:
                            target = other
                            break
                        pool.append(self._complete(diff, scope))
                        mine.append(psi.evaluate(pool[-1]))
                    if target is not None:
                        by_key[(e.target, psi.key)] = target
                if target is None:
                    if len(cg.nodes) >= self.budget:
                        raise BudgetExceeded(self.budget, f"from {start.name}")
                    shown = self.gw.simplify(psi) if self.simplify else psi
                    target = len(cg.nodes)
                    truth.append(mine)
                    cg.nodes.append(CGNode(target, e.target, shown, node.depth + 1))
                    by_key[(e.target, psi.key)] = target
                    by_key[(e.target, shown.key)] = target
                    by_state.setdefault(e.target, []).append(target)
                    work.append(target)
                edge = CGEdge(nid, e.action, e.transition, target)
                cg.edges.append(edge)
                if target not in cg.parent and target != 0:
                    cg.parent[target] = edge
        return cg

    @staticmethod
    def _complete(model, scope) -> dict:
        return {v: model.get(v, v.sort.zero()) for v in scope}

    def main_graph(self) -> ConstraintGraph:
        return self.build(self.dds.initial, Mode.MAIN)

    # -- continuability ------------------------------------------------------
    def final_formulas(self, b: Marking) -> list[Constraint]:
        """Formulas at final-state nodes of the placeholder graph from ``b``."""
        if b not in self._final:
            cg = self.build(b, Mode.PLACEHOLDER)
            self.placeholder_graphs[b] = cg
            self._final[b] = [n.formula for n in cg.nodes if self.dds.is_final(n.state)]
        return self._final[b]

    def reachable_final(self, b: Marking) -> Constraint:
        """Formula over placeholders: initial values from which a final state is
        reachable starting in ``b``."""
        if b not in self._psi:
            # exists distributes over the disjunction; per-disjunct calls stay small
            parts = [self.gw.qe(self.dds.variables, f) for f in self.final_formulas(b)]
            self._psi[b] = disj(*parts)
        return self._psi[b]


def build_cg(dds: DDS, gateway: SmtGateway, start: Marking | None = None, mode: Mode = Mode.MAIN,
             budget: int = DEFAULT_BUDGET, order: str = "bfs") -> ConstraintGraph:
    return Explorer(dds, gateway, budget, order).build(start if start is not None else dds.initial, mode)


def final_formulas(dds: DDS, gateway: SmtGateway, b: Marking, budget: int = DEFAULT_BUDGET) -> list[Constraint]:
    return Explorer(dds, gateway, budget).final_formulas(b)
