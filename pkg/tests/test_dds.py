import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from dpnsound.constraints import Sort, Var
from dpnsound.dds import dds_step, dpn_to_dds
from dpnsound.dpn import DPN, Arc, Marking, Transition, TransitionFiring, fire
from dpnsound.errors import BoundExceeded, NotEnabled
from dpnsound.oracle import box_firings

from netgen import box_for, random_net

O, T = Var("o", Sort.RAT), Var("t", Sort.RAT)
P0, P12, P3, P23 = (Marking(x) for x in ({"p0": 1}, {"p1": 1, "p2": 1}, {"p3": 1}, {"p2": 1, "p3": 1}))


def edge_set(dds):
    return {(e.source, e.transition, e.target) for e in dds.edges}


def test_auction_dds(auction):
    dds = dpn_to_dds(auction, 1)
    assert set(dds.states) == {P0, P12, P3}
    assert dds.initial == P0 and dds.final == {P3}
    assert edge_set(dds) == {(P0, "init", P12), (P12, "bid", P12), (P12, "timer", P12), (P12, "hammer", P3)}


def test_thresh_dds(nets):
    dds = dpn_to_dds(nets["auction_thresh"], 1)
    assert P23 in dds.states
    assert (P12, "thresh", P23) in edge_set(dds)
    assert (P23, "timer", P23) in edge_set(dds)


def test_reset_dds(nets):
    dds = dpn_to_dds(nets["auction_reset"], 1)
    assert (P3, "reset", P0) in edge_set(dds)


def test_no_transitions():
    net = DPN.build(["p"], [], [], [], Marking({"p": 1}), Marking({"p": 1}), check=False)
    dds = dpn_to_dds(net)
    assert list(dds.states) == [Marking({"p": 1})] and not dds.edges and dds.is_final(dds.initial)


def test_bound_exceeded():
    net = DPN.build(["p", "q"], [Transition("t")], [Arc("p", "t"), Arc("t", "p"), Arc("t", "q")],
                    [], Marking({"p": 1}), Marking({"q": 1}))
    with pytest.raises(BoundExceeded):
        dpn_to_dds(net, 1)
    with pytest.raises(BoundExceeded):
        dpn_to_dds(net, 3)


def test_steps(auction):
    dds = dpn_to_dds(auction)
    alpha = {O: Fraction(0), T: Fraction(0)}
    b, a = dds_step(dds, P0, alpha, TransitionFiring.of("init", {O.written: 0, T.written: 1}))
    assert (b, a) == (P12, {O: 0, T: 1})
    b, a = dds_step(dds, b, a, TransitionFiring.of("timer", {T.read: 1, T.written: 0}))
    assert (b, a) == (P12, {O: 0, T: 0})
    with pytest.raises(NotEnabled):
        dds_step(dds, b, a, TransitionFiring.of("hammer", {}))
    with pytest.raises(NotEnabled):
        dds_step(dds, P0, alpha, TransitionFiring.of("bid", {O.written: 1}))


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**16))
def test_bisimulation_random_runs(seed, run_seed):
    """DPN firings and DDS steps co-simulate: same enabled firings, same successors."""
    net = random_net(random.Random(seed))
    dds = dpn_to_dds(net, 1)
    assert len(dds.states) <= 2 ** len(net.places)
    assert all(dds.is_final(b) == (b == net.final_marking) for b in dds.states)
    box = box_for(net)
    rng = random.Random(run_seed)
    s = net.initial_state
    for _ in range(10):
        options = [f for t in net.transitions for f in box_firings(net, s, t.id, box)]
        # every DDS edge from the marking that admits a box firing is matched by a DPN firing
        dds_options = []
        for e in dds.out_edges(s.marking):
            for f in box_firings(net, s, e.transition, box):
                dds_options.append(f)
        assert sorted(map(repr, options)) == sorted(map(repr, dds_options))
        if not options:
            break
        f = rng.choice(options)
        s2 = fire(net, s, f)
        b, alpha = dds_step(dds, s.marking, s.alpha, f)
        assert (b, alpha) == (s2.marking, s2.alpha)
        s = s2
