import pytest
from hypothesis import HealthCheck, given, settings

from dpnsound.constraints import TRUE, Sort, Var
from dpnsound.errors import (
    GuardParseError, InvalidNet, MissingFinalMarking, PnmlError, UndeclaredVariable, UnknownReference,
    XmlError,
)
from dpnsound.pnml import load_pnml, parse_pnml, to_pnml

from conftest import FIXTURES, model_path
from netgen import random_nets


def doc(body: str, finals: str = '<finalmarkings><marking><place idref="b"><text>1</text></place></marking></finalmarkings>') -> str:
    return f"""<pnml><net id="n">
      <place id="a"><initialMarking><text>1</text></initialMarking></place>
      <place id="b"/>
      {body}
      {finals}
    </net></pnml>"""


SIMPLE = '<transition id="t"/><arc id="1" source="a" target="t"/><arc id="2" source="t" target="b"/>'


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_parses_and_roundtrips(name):
    net = load_pnml(model_path(name))
    again = parse_pnml(to_pnml(net))
    assert again.signature() == net.signature()
    assert to_pnml(again) == to_pnml(net)


def test_defaults():
    net = parse_pnml(doc('<variable name="x" sort="int"/><variable name="f" sort="bool"/>' + SIMPLE))
    t = net.transition("t")
    assert t.guard == TRUE and t.action == "t"
    assert all(a.weight == 1 for a in net.arcs)
    assert net.alpha_i == {Var("x", Sort.INT): 0, Var("f", Sort.BOOL): False}


def test_page_wrapper_and_weights():
    body = '<page id="pg"><transition id="t"><name><text>go</text></name><guard>x\' &gt;= 1</guard></transition>' \
           '<arc id="1" source="a" target="t"><inscription><text>1</text></inscription></arc>' \
           '<arc id="2" source="t" target="b"/></page><variable name="x" sort="rat" initial="1/2"/>'
    net = parse_pnml(doc(body))
    assert net.transition("t").action == "go"
    assert net.alpha_i[Var("x", Sort.RAT)] == 0.5


def test_unknown_reference():
    with pytest.raises(UnknownReference) as info:
        parse_pnml(doc('<transition id="t"/><arc id="1" source="nowhere" target="t"/>'))
    assert "nowhere" in str(info.value)


def test_missing_final_marking():
    with pytest.raises(MissingFinalMarking):
        parse_pnml(doc(SIMPLE, finals=""))


def test_multiple_final_markings():
    two = '<finalmarkings><marking><place idref="b"><text>1</text></place></marking>' \
          '<marking><place idref="a"><text>1</text></place></marking></finalmarkings>'
    with pytest.raises(PnmlError):
        parse_pnml(doc(SIMPLE, finals=two))


def test_bad_xml():
    with pytest.raises(XmlError):
        parse_pnml("<pnml><net>")


def test_guard_errors():
    with pytest.raises(GuardParseError) as info:
        parse_pnml(doc('<variable name="x"/><transition id="t"><guard>x &gt;&gt; 1</guard></transition>'))
    assert info.value.position == 3
    with pytest.raises(UndeclaredVariable):
        parse_pnml(doc('<transition id="t"><guard>y &gt; 1</guard></transition>'))


def test_structural_error():
    with pytest.raises(InvalidNet) as info:
        parse_pnml(doc('<transition id="t"/><arc id="1" source="a" target="b"/>'))
    assert [d.kind for d in info.value.diagnostics] == ["BadArc"]


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(random_nets)
def test_roundtrip_random(net):
    assert parse_pnml(to_pnml(net)).signature() == net.signature()
