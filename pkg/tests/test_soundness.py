import random

import pytest
from hypothesis import HealthCheck, given, reject, settings
from hypothesis import strategies as st

from dpnsound.cg import Explorer
from dpnsound.constraints import FALSE, Atom, Sort, Var, conj
from dpnsound.dds import dpn_to_dds
from dpnsound.dpn import DPN, Arc, Marking, Transition, fire
from dpnsound.errors import BudgetExceeded
from dpnsound.guard_syntax import parse_formula
from dpnsound.oracle import can_complete, oracle_soundness
from dpnsound.soundness import (
    CheckConfig, SoundnessChecker, bad_termination, blocked_states, check_sound, dead_transitions,
    extract_witness,
)

from netgen import box_for, random_net

O, T = Var("o", Sort.RAT), Var("t", Sort.RAT)
P12, P23 = Marking({"p1": 1, "p2": 1}), Marking({"p2": 1, "p3": 1})
EXPECTED = {"auction": "P1", "auction_reset": "P3", "auction_thresh": "P2",
            "road_fines": "P1", "sound_trivial": None}


@pytest.fixture(scope="module")
def reports(gw, nets):
    return {name: check_sound(net, gateway=gw) for name, net in nets.items()}


@pytest.fixture(scope="module")
def full_reports(gw, nets):
    cfg = CheckConfig(short_circuit=False)
    return {name: check_sound(net, cfg, gateway=gw) for name, net in nets.items()}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_fixture_verdicts(reports, name):
    r = reports[name]
    assert r.violated == EXPECTED[name]
    assert r.sound == (EXPECTED[name] is None)


def test_report_invariants(reports, nets):
    for name, r in reports.items():
        if r.violated in ("P1", "P2"):
            assert r.witness is not None
            state = nets[name].initial_state
            for st_ in r.witness.steps:
                state = fire(nets[name], state, st_.firing)
                assert state == st_.state
        if r.violated == "P3":
            assert r.dead_transitions
        if r.sound:
            assert r.witness is None and r.violated is None


def test_auction_blocked_formula(gw, reports):
    b = reports["auction"].blocked
    assert b.node.state == P12 and gw.equivalent(b.node.formula, parse_formula("o = 0", {"o": Sort.RAT}))
    sorts = {"o": Sort.RAT, "t": Sort.RAT}
    assert gw.equivalent(b.formula, parse_formula("o_0 = 0 && t_0 <= 0", sorts))
    assert b.model == {O.placeholder: 0, T.placeholder: 0}


def test_auction_witness(reports):
    w = reports["auction"].witness
    assert w.transitions == ["init", "timer"]
    assert [dict(s.firing.writes()) for s in w.steps] == [{O: 0, T: 1}, {T: 0}]
    assert w.final_state.marking == P12 and w.final_state.alpha == {O: 0, T: 0}


def test_thresh_bad_termination(reports):
    r = reports["auction_thresh"]
    assert r.bad_node.state == P23
    assert r.witness.transitions == ["init", "bid", "thresh"]
    assert r.witness.final_state.marking == P23
    assert r.witness.final_state.alpha[O] > 1000


def test_reset_dead(reports):
    assert reports["auction_reset"].dead_transitions == ["reset"]


def test_checks_are_individually_correct(gw, nets):
    dds = dpn_to_dds(nets["auction"])
    ex = Explorer(dds, gw)
    cg = ex.main_graph()
    assert bad_termination(cg, nets["auction"]) is None
    assert dead_transitions(cg, nets["auction"]) == []
    thresh_cg = Explorer(dpn_to_dds(nets["auction_thresh"]), gw).main_graph()
    assert bad_termination(thresh_cg, nets["auction_thresh"]).state == P23
    tex = Explorer(dpn_to_dds(nets["auction_thresh"]), gw)
    assert blocked_states(tex.main_graph(), tex)


def test_guard_false_is_dead(gw):
    net = DPN.build(["a", "b"], [Transition("go"), Transition("never", FALSE)],
                    [Arc("a", "go"), Arc("go", "b"), Arc("a", "never"), Arc("never", "b")],
                    [], Marking({"a": 1}), Marking({"b": 1}))
    r = check_sound(net, gateway=gw)
    assert r.violated == "P3" and r.dead_transitions == ["never"]


def test_sound_one_step(gw, nets):
    r = check_sound(nets["sound_trivial"], CheckConfig(short_circuit=False), gateway=gw)
    assert r.sound and r.blocked is None and r.violations == {}


def test_initial_final_no_transitions(gw):
    net = DPN.build(["p"], [], [], [], Marking({"p": 1}), Marking({"p": 1}), check=False)
    r = check_sound(net, gateway=gw)
    assert r.sound


def test_empty_witness_at_initial(gw, nets):
    net = nets["auction"]
    dds = dpn_to_dds(net)
    cg = Explorer(dds, gw).main_graph()
    w = extract_witness(net, dds, cg, cg.initial, gw)
    assert len(w) == 0 and w.final_state == net.initial_state


def test_road_fines_first_blocked_node(reports):
    r = reports["road_fines"]
    assert r.violated == "P1"
    assert r.witness.transitions == ["create_fine", "send_fine", "insert_notification", "appeal_to_judge"]
    d = Var("d", Sort.INT)
    assert r.witness.final_state.marking == Marking({"p5": 1})
    assert r.witness.final_state.alpha[d] not in (0, 2)


def test_road_fines_p7_block_detected(gw, full_reports):
    d0 = Var("d", Sort.INT).placeholder
    blocked = full_reports["road_fines"].violations["P1"]
    at_p7 = [b for b in blocked if b.node.state == Marking({"p7": 1})]
    assert at_p7
    assert any(gw.is_sat(conj(b.formula, Atom.make(d0, ">", 1))).sat for b in at_p7)
    assert all(not gw.is_sat(conj(b.formula, Atom.make(d0, "<=", 1))).sat for b in at_p7)


def test_superset_consistency(reports, full_reports):
    for name in reports:
        short, full = reports[name], full_reports[name]
        assert short.sound == full.sound
        assert short.violated == full.violated
        if short.violated:
            assert short.violated in full.violations
        assert full.checked == ["P2", "P3", "P1"]


def test_thresh_all_properties(full_reports):
    assert set(full_reports["auction_thresh"].violations) == {"P1", "P2"}
    # reset inherits the auction's dead end, which the short-circuit hides behind P3
    assert set(full_reports["auction_reset"].violations) == {"P1", "P3"}


def test_parallel_jobs_agree(reports, nets):
    for name in ("auction",):
        r = check_sound(nets[name], CheckConfig(jobs=2))
        assert r.violated == reports[name].violated
        assert r.blocked.node.id == reports[name].blocked.node.id
        assert r.witness == reports[name].witness


def test_dfs_agrees(gw, reports, nets):
    for name in EXPECTED:
        assert check_sound(nets[name], CheckConfig(order="dfs"), gateway=gw).violated == reports[name].violated


def test_budget_propagates(gw, nets):
    with pytest.raises(BudgetExceeded):
        check_sound(nets["road_fines"], CheckConfig(budget=5), gateway=gw)


def test_checker_reuse(gw, nets):
    with SoundnessChecker(gateway=gw) as c:
        a = c.check(nets["auction"])
        b = c.check(nets["auction"])
    assert a.violated == b.violated and a.sizes == b.sizes
    assert b.stats.cache_hits > 0


# -- agreement with the brute-force oracle ---------------------------------------------------

def _check(net, gw, **kw):
    try:
        return check_sound(net, CheckConfig(budget=150, **kw), gateway=gw)
    except BudgetExceeded:
        reject()  # inconclusive: no finite history set within the budget


SLOW = settings(max_examples=60, deadline=None,
                suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])


@SLOW
@given(st.integers(0, 2**32 - 1))
def test_oracle_agreement_all_properties(gw, seed):
    net = random_net(random.Random(seed))
    box = box_for(net)
    oracle = oracle_soundness(net, box)
    full = _check(net, gw, short_circuit=False)
    assert set(full.violations) == oracle.violations
    assert full.violations.get("P3", []) == oracle.dead_transitions
    # every blocked concrete state is captured by a satisfiable blocked formula at its marking
    blocked = full.violations.get("P1", [])
    for s in oracle.blocked_states:
        env = {v.placeholder: x for v, x in s.alpha.items()}
        assert any(b.node.state == s.marking and b.formula.evaluate(env) for b in blocked)


@SLOW
@given(st.integers(0, 2**32 - 1))
def test_witnesses_replay_and_block(gw, seed):
    net = random_net(random.Random(seed))
    r = _check(net, gw)
    if r.witness is None:
        return
    state = net.initial_state
    for step in r.witness.steps:
        state = fire(net, state, step.firing)
        assert state == step.state
    if r.violated == "P1":
        assert not can_complete(net, state, box_for(net))
    if r.violated == "P2":
        assert state.marking.covers(net.final_marking) and state.marking != net.final_marking
