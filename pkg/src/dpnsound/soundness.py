"""Data-aware soundness via constraint graphs, with concrete witnesses.

The net is unfolded into a DDS, its constraint graph is built, and three
checks run in order of cost: clean termination (P2), dead transitions (P3)
and blocked states (P1).  Violations of P1 and P2 come with a concrete run
that is replayed through the net's firing rule before it is reported.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .cg import DEFAULT_BUDGET, CGNode, ConstraintGraph, Explorer
from .constraints import (
    Constraint, Value, Var, assignment_formula, conj, neg, rename,
)
from .dds import DDS, dpn_to_dds
from .dpn import DPN, DpnState, TransitionFiring, fire
from .errors import Inconclusive, NotEnabled, WitnessReplayFailed
from .smt import SatStatus, SmtGateway, SolverStats

P1, P2, P3 = "P1", "P2", "P3"


@dataclass
class CheckConfig:
    bound: int = 1
    budget: int = DEFAULT_BUDGET
    order: str = "bfs"
    short_circuit: bool = True
    jobs: int = 1
    solver: str | None = None
    timeout: float = 10.0


@dataclass(frozen=True)
class WitnessStep:
    firing: TransitionFiring
    action: str
    state: DpnState


@dataclass(frozen=True)
class Witness:
    """A concrete run from the initial state."""

    initial: DpnState
    steps: tuple[WitnessStep, ...] = ()

    @property
    def final_state(self) -> DpnState:
        return self.steps[-1].state if self.steps else self.initial

    @property
    def transitions(self) -> list[str]:
        return [s.firing.transition for s in self.steps]

    def __len__(self):
        return len(self.steps)


@dataclass(frozen=True)
class BlockedNode:
    node: CGNode
    formula: Constraint
    model: dict


@dataclass
class SoundnessReport:
    net: str
    sound: bool
    violated: str | None = None
    witness: Witness | None = None
    dead_transitions: list[str] | None = None
    bad_node: CGNode | None = None
    blocked: BlockedNode | None = None
    checked: list[str] = field(default_factory=list)
    violations: dict[str, object] = field(default_factory=dict)
    stats: SolverStats = field(default_factory=SolverStats)
    sizes: dict[str, tuple[int, int]] = field(default_factory=dict)
    elapsed: float = 0.0
    dds: DDS | None = field(default=None, repr=False)
    cg: ConstraintGraph | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# the three checks

def bad_termination(cg: ConstraintGraph, dpn: DPN) -> CGNode | None:
    """First node whose marking strictly covers the final marking."""
    mf = dpn.final_marking
    for node in cg.nodes:
        if node.state.covers(mf) and node.state != mf:
            return node
    return None


def dead_transitions(cg: ConstraintGraph, dpn: DPN) -> list[str]:
    """Transitions (in net order) that label no edge of the graph."""
    used = cg.transitions_used()
    return [t.id for t in dpn.transitions if t.id not in used]


def blocked_formula(explorer: Explorer, node: CGNode, psi: Constraint | None = None) -> Constraint:
    """``phi[V0/V]`` and not ``exists V. final(b)``: initial values at ``node``
    from which no final state can be reached."""
    to_placeholder = {v: v.placeholder for v in explorer.dds.variables}
    if psi is None:
        psi = explorer.reachable_final(node.state)
    return conj(rename(node.formula, to_placeholder), neg(psi))


def blocked_states(cg: ConstraintGraph, explorer: Explorer, first_only: bool = True,
                   psis: dict | None = None) -> list[BlockedNode]:
    """Non-final nodes with a satisfiable blocked formula, shallowest first."""
    out = []
    for node in cg.nodes:
        if explorer.dds.is_final(node.state):
            continue
        psi = psis.get(node.state) if psis else None
        formula = blocked_formula(explorer, node, psi)
        res = explorer.gw.is_sat(formula)
        if res.status is SatStatus.UNKNOWN:
            raise Inconclusive(f"blocked formula at {node}: {res.reason}")
        if res.sat:
            out.append(BlockedNode(node, explorer.gw.simplify(formula), res.model))
            if first_only:
                break
    return out


def _parallel_psis(dds: DDS, states, config: CheckConfig) -> tuple[dict, list[SolverStats]]:
    """Reachable-final formulas for ``states`` computed by independent workers."""
    def work(chunk):
        with SmtGateway(config.solver, config.timeout) as gw:
            ex = Explorer(dds, gw, config.budget, config.order)
            return {b: ex.reachable_final(b) for b in chunk}, gw.stats

    chunks = [states[i::config.jobs] for i in range(config.jobs)]
    psis, stats = {}, []
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        for part, st in pool.map(work, [c for c in chunks if c]):
            psis.update(part)
            stats.append(st)
    return psis, stats


# ---------------------------------------------------------------------------
# witnesses

def extract_witness(dpn: DPN, dds: DDS, cg: ConstraintGraph, node: CGNode, gw: SmtGateway,
                    end: Constraint | None = None) -> Witness:
    """A concrete run along the graph path to ``node``.

    ``end`` constrains the last assignment; it may use plain variables or
    placeholders (both denote the values after the last step).  Written
    values are pinned to 0, then 1, whenever this keeps the run feasible.
    """
    path = cg.path_to(node)
    variables = dds.variables
    copies = [{v: v.copy(i) for v in variables} for i in range(len(path) + 1)]
    parts = [rename(assignment_formula(dds.alpha_i), copies[0])]
    prefs: list[tuple[Var, Value]] = []
    for i, e in enumerate(path, 1):
        m = {}
        for v in variables:
            m[v.read] = copies[i - 1][v]
            m[v.written] = copies[i][v]
        parts.append(rename(dds.delta(e.transition), m))
        for v in sorted(dpn.transition(e.transition).written):
            prefs += [(copies[i][v], v.sort.zero()), (copies[i][v], v.sort.coerce(1))]
    if end is not None:
        last = dict(copies[-1])
        last.update({v.placeholder: c for v, c in copies[-1].items()})
        parts.append(rename(end, last))
    res = gw.is_sat_preferring(conj(*parts), prefs)
    if res.status is SatStatus.UNKNOWN:
        raise Inconclusive(f"witness query: {res.reason}")
    if not res.sat:
        raise WitnessReplayFailed(f"no concrete run along the path to {node}")
    model = res.model

    def val(i, v):
        return model.get(copies[i][v], v.sort.zero())

    state = dpn.initial_state
    steps = []
    for i, e in enumerate(path, 1):
        beta = {v.read: val(i - 1, v) for v in variables}
        for v in dpn.transition(e.transition).written:
            beta[v.written] = val(i, v)
        firing = TransitionFiring.of(e.transition, beta)
        try:
            state = fire(dpn, state, firing)
        except NotEnabled as exc:
            raise WitnessReplayFailed(f"step {i} ({e.transition}) does not replay: {exc}") from None
        expected = {v: val(i, v) for v in variables}
        if state.marking != cg.node(e.target).state or state.alpha != expected:
            raise WitnessReplayFailed(f"step {i} ({e.transition}) reaches {state}, not the model state")
        steps.append(WitnessStep(firing, e.action, state))
    return Witness(dpn.initial_state, tuple(steps))


# ---------------------------------------------------------------------------
# driver

class SoundnessChecker:
    """Runs the full check; a gateway may be shared across calls."""

    def __init__(self, config: CheckConfig | None = None, gateway: SmtGateway | None = None):
        self.config = config or CheckConfig()
        self._own = gateway is None
        self.gw = gateway or SmtGateway(self.config.solver, self.config.timeout)

    def close(self):
        if self._own:
            self.gw.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def check(self, dpn: DPN) -> SoundnessReport:
        cfg = self.config
        t0 = time.perf_counter()
        before = self.gw.stats.snapshot()
        dds = dpn_to_dds(dpn, cfg.bound)
        explorer = Explorer(dds, self.gw, cfg.budget, cfg.order)
        cg = explorer.main_graph()
        report = SoundnessReport(dpn.id, True, dds=dds, cg=cg)
        report.sizes = {"dds": dds.size, "cg": cg.size}

        def record(prop: str) -> bool:
            if report.violated is None:
                report.violated = prop
                report.sound = False
            return cfg.short_circuit

        report.checked.append(P2)
        bad = bad_termination(cg, dpn)
        if bad is not None:
            report.violations[P2] = bad
            if report.violated is None:
                report.bad_node = bad
                report.witness = extract_witness(dpn, dds, cg, bad, self.gw, bad.formula)
            if record(P2):
                return self._finish(report, before, t0)

        report.checked.append(P3)
        dead = dead_transitions(cg, dpn)
        if dead:
            report.violations[P3] = dead
            if report.violated is None:
                report.dead_transitions = dead
            if record(P3):
                return self._finish(report, before, t0)

        report.checked.append(P1)
        extra = []
        psis = None
        if cfg.jobs > 1:
            states = [b for b in dds.states if not dds.is_final(b) and cg.at(b)]
            psis, extra = _parallel_psis(dds, states, cfg)
        blocked = blocked_states(cg, explorer, first_only=cfg.short_circuit, psis=psis)
        if blocked:
            report.violations[P1] = blocked
            if report.violated is None:
                report.blocked = blocked[0]
                report.witness = extract_witness(dpn, dds, cg, blocked[0].node, self.gw, blocked[0].formula)
            record(P1)
        for st in extra:
            self.gw.stats.absorb(st)
        return self._finish(report, before, t0)

    def _finish(self, report: SoundnessReport, before: SolverStats, t0: float) -> SoundnessReport:
        report.stats = self.gw.stats.since(before)
        report.elapsed = time.perf_counter() - t0
        return report


def check_sound(dpn: DPN, config: CheckConfig | None = None, gateway: SmtGateway | None = None) -> SoundnessReport:
    with SoundnessChecker(config, gateway) as checker:
        return checker.check(dpn)
