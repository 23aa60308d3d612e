"""Graphviz DOT rendering of DDSs and constraint graphs."""

from __future__ import annotations

from typing import Iterable

from .cg import CGEdge, ConstraintGraph
from .dds import DDS


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def dds_to_dot(dds: DDS, name: str = "dds") -> str:
    ids = {b: f"s{i}" for i, b in enumerate(dds.states)}
    lines = [f"digraph {_quote(name)} {{", "  rankdir=TB;", "  node [shape=ellipse];"]
    for b in dds.states:
        attrs = [f"label={_quote(b.name)}"]
        if dds.is_final(b):
            attrs.append("peripheries=2")
        if b == dds.initial:
            attrs.append("style=bold")
        lines.append(f"  {ids[b]} [{', '.join(attrs)}];")
    for e in dds.edges:
        label = e.action if e.action == e.transition else f"{e.action} ({e.transition})"
        lines.append(f"  {ids[e.source]} -> {ids[e.target]} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cg_to_dot(cg: ConstraintGraph, final_states: Iterable = (), witness: Iterable[CGEdge] = (),
              violating: Iterable[int] = (), name: str = "cg") -> str:
    """Nodes are labelled ``state | formula``; final-state nodes get a double
    border, ``violating`` nodes are filled red and ``witness`` edges drawn red."""
    finals = set(final_states)
    bad = set(violating)
    path = set(witness)
    on_path = {e.source for e in path} | {e.target for e in path}
    lines = [f"digraph {_quote(name)} {{", "  rankdir=TB;", "  node [shape=box];"]
    for n in cg.nodes:
        attrs = [f"label={_quote(f'{n.state.name} | {n.formula}')}"]
        if n.state in finals:
            attrs.append("peripheries=2")
        if n.id == 0:
            attrs.append("style=bold")
        if n.id in bad:
            attrs += ["style=filled", "fillcolor=red"]
        elif n.id in on_path:
            attrs.append("color=red")
        lines.append(f"  n{n.id} [{', '.join(attrs)}];")
    for e in cg.edges:
        attrs = [f"label={_quote(e.action)}"]
        if e in path:
            attrs += ["color=red", "fontcolor=red"]
        lines.append(f"  n{e.source} -> n{e.target} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
