"""One test per acceptance criterion; each prints a PASS/FAIL line."""

import itertools
import json
import random
import statistics
import time
from collections import Counter, deque

from dpnsound.bench import add_sequential_states
from dpnsound.cg import Explorer, build_cg
from dpnsound.cli import main
from dpnsound.constraints import Atom, Sort, Var, conj
from dpnsound.dds import dpn_to_dds
from dpnsound.dpn import DpnState, Marking, fire
from dpnsound.guard_syntax import parse_formula
from dpnsound.oracle import DomainBox, can_complete, enumerate_state_space, oracle_soundness
from dpnsound.report import strip_timing
from dpnsound.soundness import CheckConfig, check_sound

from conftest import ACCEPTANCE, FIXTURES, model_path
from netgen import box_for, random_net

SORTS = {"o": Sort.RAT, "t": Sort.RAT}
P0, P12, P3 = Marking({"p0": 1}), Marking({"p1": 1, "p2": 1}), Marking({"p3": 1})

# reference constraint graph of the auction, as stated by the criterion
REFERENCE_NODES = [
    (P0, "o = 0 && t = 0"),
    (P12, "o = 0 && t > 0"),
    (P12, "o = 0"),
    (P12, "o > 0 && t > 0"),
    (P12, "o > 0"),
    (P3, "o > 0 && t >= 0"),
]
REFERENCE_EDGES = 8
REFERENCE_FINALS = [
    "o = o_0 && o_0 > 0 && t = t_0 && t_0 > 0",
    "o = o_0 && o_0 > 0 && t_0 > t && t <= 0 && t_0 > 0",
    "o > o_0 && o > 0 && t_0 > t && t <= 0 && t_0 > 0",
]


def verdict(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def f(text):
    return parse_formula(text, SORTS)


def test_criterion_01_auction_verdicts(gw, nets):
    start = time.perf_counter()
    got = {name: check_sound(nets[name], gateway=gw) for name in ("auction", "auction_reset", "auction_thresh")}
    elapsed = time.perf_counter() - start
    ok = (got["auction"].violated == "P1"
          and got["auction_reset"].violated == "P3" and got["auction_reset"].dead_transitions == ["reset"]
          and got["auction_thresh"].violated == "P2"
          and elapsed < 10)
    verdict(1, ok, f"{ {k: (v.violated, v.dead_transitions) for k, v in got.items()} } in {elapsed:.2f}s")


def test_criterion_02_cg_shape(gw, auction):
    cg = build_cg(dpn_to_dds(auction), gw)
    distinct = all(not gw.equivalent(a.formula, b.formula)
                   for a, b in itertools.combinations(cg.nodes, 2) if a.state == b.state)
    unmatched = []
    used = set()
    for node in cg.nodes:
        hits = [i for i, (b, text) in enumerate(REFERENCE_NODES) if b == node.state and gw.equivalent(node.formula, f(text))]
        if len(hits) != 1 or hits[0] in used:
            unmatched.append(f"{node.state}:{node.formula}")
        used.update(hits)
    ok = cg.size == (len(REFERENCE_NODES), REFERENCE_EDGES) and distinct and not unmatched
    verdict(2, ok, f"size {cg.size} vs {(len(REFERENCE_NODES), REFERENCE_EDGES)}; unmatched nodes {unmatched}")


def test_criterion_03_final_formulas(gw, auction):
    finals = Explorer(dpn_to_dds(auction), gw).final_formulas(P12)
    missing = [i + 1 for i, text in enumerate(REFERENCE_FINALS) if sum(gw.equivalent(x, f(text)) for x in finals) != 1]
    ok = len(finals) == 3 and not missing
    verdict(3, ok, f"{len(finals)} formulas; reference phi{missing} have no equivalent")


def test_criterion_04_blocked_formula(gw, auction):
    r = check_sound(auction, gateway=gw)
    b = r.blocked
    o0, t0 = Var("o", Sort.RAT).placeholder, Var("t", Sort.RAT).placeholder
    ok = (b.node.state == P12 and gw.equivalent(b.node.formula, f("o = 0"))
          and gw.equivalent(b.formula, f("o_0 = 0 && t_0 <= 0"))
          and b.formula.evaluate({o0: 0, t0: 0}) and b.model == {o0: 0, t0: 0})
    verdict(4, ok, f"blocked {b.formula} model {', '.join(f'{v}={x}' for v, x in b.model.items())}")


def test_criterion_05_road_fines(gw, nets):
    net = nets["road_fines"]
    r = check_sound(net, gateway=gw)
    d = Var("d", Sort.INT)
    end = r.witness.final_state
    verdict_ok = r.violated == "P1"
    witness_ok = end.marking == Marking({"p7": 1}) and end.alpha[d] > 1
    # the p7 dead end with d > 1 exists; the exhaustive check reports it alongside the earlier one
    full = check_sound(net, CheckConfig(short_circuit=False), gateway=gw)
    p7 = [b for b in full.violations["P1"] if b.node.state == Marking({"p7": 1})
          and gw.is_sat(conj(b.formula, Atom.make(d.placeholder, ">", 1))).sat]
    verdict(5, verdict_ok and witness_ok,
            f"violated {r.violated}; witness {r.witness.transitions} ends {end}; "
            f"p7 blocked with d>1 found exhaustively: {bool(p7)}")


def test_criterion_06_oracle_equivalence(gw):
    start = time.perf_counter()
    disagree, kinds = [], Counter()
    n = 120
    for seed in range(n):
        net = random_net(random.Random(seed))
        o = oracle_soundness(net, box_for(net))
        r = check_sound(net, gateway=gw)
        full = check_sound(net, CheckConfig(short_circuit=False), gateway=gw)
        kinds["+".join(sorted(full.violations)) or "sound"] += 1
        # the short-circuited verdict is the criterion; full violation sets are compared as well
        if (o.sound, o.violated) != (r.sound, r.violated) or o.violations != set(full.violations):
            disagree.append(seed)
    elapsed = time.perf_counter() - start
    verdict(6, not disagree and elapsed < 300, f"{n - len(disagree)}/{n} agree in {elapsed:.1f}s; verdicts {dict(sorted(kinds.items()))}; "
                                                 f"disagreeing seeds {disagree}")


def test_criterion_07_small_scope(gw, auction):
    # models come from [-3, 3]; runs may pass through [-4, 4] since a timer step
    # into t = 3 starts above the model box
    box = DomainBox.default(auction.variables, {v.name: DomainBox.grid(-3, 3, "1/2") for v in auction.variables})
    wide = DomainBox.default(auction.variables, {v.name: DomainBox.grid(-4, 4, "1/2") for v in auction.variables})
    g = enumerate_state_space(auction, wide)
    cg = build_cg(dpn_to_dds(auction), gw)
    out = {}
    for i, firing, j in g.edges:
        out.setdefault(i, []).append((firing.transition, j))
    cg_out = {}
    for e in cg.edges:
        cg_out.setdefault(e.source, []).append(e)
    # product of concrete runs and graph paths
    start = (0, cg.initial.id)
    assert cg.initial.formula.evaluate(g.states[0].alpha)
    seen, queue = {start}, deque([start])
    while queue:
        i, n = queue.popleft()
        for tid, j in out.get(i, []):
            s = g.states[j]
            for e in cg_out.get(n, []):
                tgt = cg.node(e.target)
                if e.transition == tid and tgt.state == s.marking and tgt.formula.evaluate(s.alpha):
                    if (j, tgt.id) not in seen:
                        seen.add((j, tgt.id))
                        queue.append((j, tgt.id))
    variables = list(auction.variables)
    forward_missing = 0
    checked = 0
    for node in cg.nodes:
        for values in itertools.product(*(box.values(v) for v in variables)):
            alpha = dict(zip(variables, values))
            if not node.formula.evaluate(alpha):
                continue
            checked += 1
            idx = g.index.get(DpnState.of(node.state, alpha))
            if idx is None or (idx, node.id) not in seen:
                forward_missing += 1
    covered = {i for i, _ in seen}
    backward_missing = [s for i, s in enumerate(g.states) if i not in covered]
    ok = forward_missing == 0 and not backward_missing
    verdict(7, ok, f"{checked} node models realised (missing {forward_missing}); "
                   f"{len(g.states)} oracle states abstracted (missing {len(backward_missing)})")


def _box_with(net, state):
    over = {}
    for v in net.variables:
        base = DomainBox.default([v]).values(v)
        over[v.name] = tuple(sorted(set(base) | {state.alpha[v]}, key=lambda x: (str(type(x)), x)))
    return DomainBox.default(net.variables, over)


def test_criterion_08_witness_replay(gw, nets):
    total, failures = 0, []
    for name in FIXTURES:
        for cfg in (CheckConfig(), CheckConfig(short_circuit=False), CheckConfig(order="dfs")):
            r = check_sound(nets[name], cfg, gateway=gw)
            if r.witness is None:
                continue
            total += 1
            state = nets[name].initial_state
            try:
                for step in r.witness.steps:
                    state = fire(nets[name], state, step.firing)
                    if state != step.state:
                        raise AssertionError("state mismatch")
            except Exception as e:  # noqa: BLE001 - recorded as a failure below
                failures.append((name, repr(e)))
                continue
            if r.violated == "P1" and can_complete(nets[name], state, _box_with(nets[name], state)):
                failures.append((name, "P1 witness continuable"))
    verdict(8, total > 0 and not failures, f"{total} witnesses replayed; failures {failures}")


def test_criterion_09_scalability(gw, auction):
    ns = [0, 25, 50, 100]
    times, verdicts = [], []
    for n in ns:
        net = add_sequential_states(auction, n)
        best = float("inf")
        for _ in range(3):
            start = time.perf_counter()
            r = check_sound(net)
            best = min(best, time.perf_counter() - start)
        times.append(best)
        verdicts.append(r.violated)
    fit = statistics.linear_regression(ns, times)
    pred = [fit.slope * x + fit.intercept for x in ns]
    mean = statistics.fmean(times)
    ss_res = sum((y - p) ** 2 for y, p in zip(times, pred))
    ss_tot = sum((y - mean) ** 2 for y in times)
    r2 = 1 - ss_res / ss_tot if ss_tot else 1.0
    ok = r2 >= 0.9 and set(verdicts) == {"P1"}
    verdict(9, ok, f"times {[round(t, 3) for t in times]}s, R^2 = {r2:.3f}, verdicts {verdicts}")


def test_criterion_10_determinism(capsys):
    diffs = []
    for name in FIXTURES:
        runs = []
        for _ in range(2):
            main(["check", str(model_path(name)), "--json", "-"])
            runs.append(json.dumps(strip_timing(json.loads(capsys.readouterr().out)), sort_keys=True, indent=2))
        if runs[0] != runs[1]:
            diffs.append(name)
    verdict(10, not diffs, f"{len(FIXTURES)} fixtures, differing: {diffs}")
