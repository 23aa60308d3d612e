"""Reading and writing nets in a small PNML dialect.

Layout (elements may sit directly under ``<net>`` or inside ``<page>``)::

    <pnml>
      <net id="auction">
        <variable name="o" sort="rat" initial="0"/>
        <place id="p0"><initialMarking><text>1</text></initialMarking></place>
        <transition id="bid">
          <name><text>bid</text></name>
          <guard>t &gt; 0 &amp;&amp; o' &gt; o</guard>
        </transition>
        <arc id="a1" source="p1" target="bid"><inscription><text>1</text></inscription></arc>
        <finalmarkings>
          <marking><place idref="p3"><text>1</text></place></marking>
        </finalmarkings>
      </net>
    </pnml>

``sort`` is one of ``bool``, ``int``, ``rat``.  Missing pieces default to:
guard ``true``, arc multiplicity 1, initial value zero / ``false``, label
equal to the transition id.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from fractions import Fraction
from pathlib import Path

from .constraints import Sort, Var, fmt_number
from .dpn import DPN, Arc, Marking, Transition, validate
from .errors import InvalidNet, MissingFinalMarking, PnmlError, UnknownReference, XmlError
from .guard_syntax import parse_guard


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _children(el: ET.Element, name: str):
    return [c for c in el if _local(c.tag) == name]


def _text(el: ET.Element | None) -> str | None:
    """Content of a ``<text>`` child, or the element's own text."""
    if el is None:
        return None
    for c in el:
        if _local(c.tag) == "text":
            return (c.text or "").strip()
    return (el.text or "").strip() or None


def _count(raw: str | None, where: str) -> int:
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise PnmlError(f"{where}: {raw!r} is not a token count") from None
    if n < 0:
        raise PnmlError(f"{where}: negative count {n}")
    return n


def _value(sort: Sort, raw: str | None):
    if raw is None or raw.strip() == "":
        return sort.zero()
    raw = raw.strip()
    if sort is Sort.BOOL:
        if raw.lower() in ("true", "1"):
            return True
        if raw.lower() in ("false", "0"):
            return False
        raise PnmlError(f"bad boolean value {raw!r}")
    return sort.coerce(Fraction(raw))


def _net_items(net: ET.Element, name: str):
    out = _children(net, name)
    for page in _children(net, "page"):
        out.extend(_net_items(page, name))
    return out


def parse_pnml(data: bytes | str) -> DPN:
    """Parse and validate a net from PNML text."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise XmlError(str(exc)) from None
    nets = [root] if _local(root.tag) == "net" else _children(root, "net")
    if len(nets) != 1:
        raise PnmlError(f"expected exactly one <net>, found {len(nets)}")
    net = nets[0]

    variables = []
    initial = {}
    for el in _net_items(net, "variable"):
        name = el.get("name")
        if not name:
            raise PnmlError("<variable> without a name")
        try:
            sort = Sort(el.get("sort", "int"))
        except ValueError:
            raise PnmlError(f"variable {name}: unknown sort {el.get('sort')!r}") from None
        v = Var(name, sort)
        variables.append(v)
        initial[v] = _value(sort, el.get("initial"))
    sorts = {v.name: v.sort for v in variables}

    places = []
    m_init = {}
    for el in _net_items(net, "place"):
        pid = el.get("id")
        if not pid:
            raise PnmlError("<place> without an id")
        places.append(pid)
        im = _children(el, "initialMarking")
        if im:
            n = _count(_text(im[0]), f"place {pid}")
            if n:
                m_init[pid] = n

    transitions = []
    for el in _net_items(net, "transition"):
        tid = el.get("id")
        if not tid:
            raise PnmlError("<transition> without an id")
        names = _children(el, "name")
        label = _text(names[0]) if names else None
        guards = _children(el, "guard")
        text = _text(guards[0]) if guards else None
        guard = parse_guard(text, sorts)
        transitions.append(Transition(tid, guard, label or tid))

    nodes = set(places) | {t.id for t in transitions}
    arcs = []
    for el in _net_items(net, "arc"):
        src, tgt = el.get("source"), el.get("target")
        for ref in (src, tgt):
            if ref not in nodes:
                raise UnknownReference(ref or "", f"arc {el.get('id', '')}".strip())
        ins = _children(el, "inscription")
        arcs.append(Arc(src, tgt, _count(_text(ins[0]) if ins else None, f"arc {src}->{tgt}")))

    finals = []
    for fm in _net_items(net, "finalmarkings"):
        finals.extend(_children(fm, "marking"))
    if not finals:
        raise MissingFinalMarking("net declares no <finalmarkings>")
    if len(finals) > 1:
        raise PnmlError("only a single final marking is supported")
    m_final = {}
    for el in _children(finals[0], "place"):
        ref = el.get("idref")
        if ref not in places:
            raise UnknownReference(ref or "", "final marking")
        n = _count(_text(el), f"final marking {ref}")
        if n:
            m_final[ref] = n

    net_obj = DPN.build(places, transitions, arcs, variables, Marking(m_init), Marking(m_final),
                        initial, id=net.get("id", "net"), check=False)
    diags = validate(net_obj)
    if diags:
        raise InvalidNet(diags)
    return net_obj


def load_pnml(path: str | Path) -> DPN:
    return parse_pnml(Path(path).read_bytes())


def _format_value(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    return fmt_number(x)


def to_pnml(dpn: DPN) -> str:
    """Serialize ``dpn`` in the dialect read by :func:`parse_pnml`."""
    root = ET.Element("pnml")
    net = ET.SubElement(root, "net", id=dpn.id, type="dpn")
    for v in dpn.variables:
        ET.SubElement(net, "variable", name=v.name, sort=v.sort.value,
                      initial=_format_value(dpn.alpha_i[v]))
    for p in dpn.places:
        el = ET.SubElement(net, "place", id=p)
        ET.SubElement(ET.SubElement(el, "name"), "text").text = p
        n = dpn.initial_marking[p]
        if n:
            ET.SubElement(ET.SubElement(el, "initialMarking"), "text").text = str(n)
    for t in dpn.transitions:
        el = ET.SubElement(net, "transition", id=t.id)
        ET.SubElement(ET.SubElement(el, "name"), "text").text = t.action
        ET.SubElement(el, "guard").text = str(t.guard)
    for i, a in enumerate(dpn.arcs):
        el = ET.SubElement(net, "arc", id=f"a{i}", source=a.source, target=a.target)
        if a.weight != 1:
            ET.SubElement(ET.SubElement(el, "inscription"), "text").text = str(a.weight)
    marking = ET.SubElement(ET.SubElement(net, "finalmarkings"), "marking")
    for p, n in dpn.final_marking.items():
        ET.SubElement(ET.SubElement(marking, "place", idref=p), "text").text = str(n)
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def save_pnml(dpn: DPN, path: str | Path) -> None:
    Path(path).write_text(to_pnml(dpn), encoding="utf-8")
