import pytest

from dpnsound.bench import CHAIN_OPS, add_chained_vars, add_sequential_states, chain_atom
from dpnsound.constraints import Sort, Var
from dpnsound.dds import dpn_to_dds
from dpnsound.guard_syntax import parse_guard
from dpnsound.soundness import check_sound

from conftest import FIXTURES


def test_identities(auction):
    assert add_sequential_states(auction, 0) is auction
    assert add_chained_vars(auction, 0) is auction


def test_chain_rewrite(gw):
    o = Var("o", Sort.RAT)
    atom = parse_guard("o' > o", {"o": Sort.RAT})
    zs = [Var("z1", Sort.RAT), Var("z2", Sort.RAT)]
    out = chain_atom(atom, zs, "=")
    sorts = {"o": Sort.RAT, "z1": Sort.RAT, "z2": Sort.RAT}
    assert gw.equivalent(out, parse_guard("z1' = o' && z1' = z2' && z2' > o", sorts))
    assert o.written in out.free_vars()


def test_chained_auction_keeps_verdict(gw, auction):
    net = add_chained_vars(auction, 3)
    assert len(net.variables) >= len(auction.variables) + 3
    assert check_sound(net, gateway=gw).violated == "P1"


def test_sequential_sizes(gw, auction):
    base = len(dpn_to_dds(auction).states)
    one = add_sequential_states(auction, 1)
    assert check_sound(one, gateway=gw).violated == "P1"
    big = add_sequential_states(auction, 100)
    assert len(dpn_to_dds(big).states) == base + 100


def test_composition(auction):
    net = add_sequential_states(add_sequential_states(auction, 3), 4)
    assert len(net.places) == len(auction.places) + 7
    assert len({t.id for t in net.transitions}) == len(net.transitions)


@pytest.mark.parametrize("name", FIXTURES)
@pytest.mark.parametrize("op", CHAIN_OPS)
def test_mutations_preserve_verdicts(gw, nets, name, op):
    expected = check_sound(nets[name], gateway=gw).violated
    assert check_sound(add_chained_vars(nets[name], 1, op), gateway=gw).violated == expected
    assert check_sound(add_sequential_states(nets[name], 2), gateway=gw).violated == expected


def test_invalid_arguments(auction):
    with pytest.raises(ValueError):
        add_sequential_states(auction, -1)
    with pytest.raises(ValueError):
        add_chained_vars(auction, -1)
    with pytest.raises(ValueError):
        add_chained_vars(auction, 1, "<")
