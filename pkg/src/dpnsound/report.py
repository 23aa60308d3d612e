"""JSON and text renderings of soundness reports."""

from __future__ import annotations

import json
from fractions import Fraction

from .cg import CGNode
from .dpn import DpnState
from .soundness import P2, SoundnessReport

SCHEMA_VERSION = 1

_VALUE = {"oneOf": [{"type": "integer"}, {"type": "boolean"}, {"type": "string", "pattern": r"^-?\d+/\d+$"}]}
_VALUES = {"type": "object", "additionalProperties": _VALUE}
_PAIR = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2}
_NODE = {
    "type": ["object", "null"],
    "required": ["marking", "formula"],
    "properties": {"marking": {"type": "object"}, "formula": {"type": "string"}},
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema", "net", "sound", "violated", "witness", "deadTransitions", "stats", "sizes"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "net": {"type": "string"},
        "sound": {"type": "boolean"},
        "violated": {"enum": [None, "P1", "P2", "P3"]},
        "checked": {"type": "array", "items": {"enum": ["P1", "P2", "P3"]}},
        "initial": {"type": ["object", "null"]},
        "witness": {
            "type": ["array", "null"],
            "items": {
                "type": "object",
                "required": ["transition", "action", "writes", "marking", "values"],
                "properties": {
                    "transition": {"type": "string"},
                    "action": {"type": "string"},
                    "writes": _VALUES,
                    "marking": {"type": "object", "additionalProperties": {"type": "integer"}},
                    "values": _VALUES,
                },
            },
        },
        "deadTransitions": {"type": ["array", "null"], "items": {"type": "string"}},
        "badNode": _NODE,
        "blocked": {
            "type": ["object", "null"],
            "required": ["marking", "formula", "blockedFormula", "model"],
        },
        "stats": {
            "type": "object",
            "required": ["satChecks", "qeCalls", "equivChecks", "elapsed"],
        },
        "sizes": {
            "type": "object",
            "required": ["dds", "cg"],
            "properties": {"dds": _PAIR, "cg": _PAIR},
        },
        "elapsed": {"type": "number"},
    },
}


def json_value(x):
    if isinstance(x, bool) or isinstance(x, int):
        return x
    q = Fraction(x)
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _values(mapping) -> dict:
    return {v.name if hasattr(v, "name") else str(v): json_value(x) for v, x in mapping.items()}


def _state(s: DpnState) -> dict:
    return {"marking": dict(s.marking.items()), "values": _values(s.alpha)}


def _node(n: CGNode | None) -> dict | None:
    if n is None:
        return None
    return {"marking": dict(n.state.items()), "formula": str(n.formula)}


def report_to_dict(report: SoundnessReport) -> dict:
    witness = None
    initial = None
    if report.witness is not None:
        initial = _state(report.witness.initial)
        witness = [
            {"transition": st.firing.transition, "action": st.action,
             "writes": _values(st.firing.writes()), **_state(st.state)}
            for st in report.witness.steps
        ]
    blocked = None
    if report.blocked is not None:
        b = report.blocked
        blocked = {**_node(b.node), "blockedFormula": str(b.formula),
                   "model": {v.name: json_value(x) for v, x in sorted(b.model.items())}}
    return {
        "schema": SCHEMA_VERSION,
        "net": report.net,
        "sound": report.sound,
        "violated": report.violated,
        "checked": list(report.checked),
        "initial": initial,
        "witness": witness,
        "deadTransitions": list(report.dead_transitions) if report.dead_transitions else None,
        "badNode": _node(report.bad_node),
        "blocked": blocked,
        "stats": report.stats.as_dict(),
        "sizes": {k: list(v) for k, v in report.sizes.items()},
        "elapsed": round(report.elapsed, 6),
    }


def report_to_json(report: SoundnessReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def strip_timing(data):
    """Copy of a report dict without wall-clock fields."""
    if isinstance(data, dict):
        return {k: strip_timing(v) for k, v in data.items() if k != "elapsed"}
    if isinstance(data, list):
        return [strip_timing(v) for v in data]
    return data


def violating_nodes(report: SoundnessReport) -> list[int]:
    """Graph nodes to highlight: all nodes at a badly terminating marking for
    P2, the blocked node for P1."""
    if report.cg is None:
        return []
    if report.violated == P2 and report.bad_node is not None:
        return [n.id for n in report.cg.nodes if n.state == report.bad_node.state]
    if report.blocked is not None:
        return [report.blocked.node.id]
    return []


def format_text(report: SoundnessReport) -> str:
    lines = [f"net: {report.net}",
             f"verdict: {'sound' if report.sound else 'unsound'}"]
    if report.violated:
        lines.append(f"violated: {report.violated}")
    lines.append(f"|B|: {report.sizes['dds'][0]} states, {report.sizes['dds'][1]} edges")
    lines.append(f"|CG|: {report.sizes['cg'][0]} nodes, {report.sizes['cg'][1]} edges")
    lines.append(f"SMT checks: {report.stats.checks}")
    lines.append(f"time: {report.elapsed:.3f}s")
    if report.dead_transitions:
        lines.append("dead transitions: " + ", ".join(report.dead_transitions))
    if report.blocked is not None:
        lines.append(f"blocked node: {report.blocked.node}")
        lines.append(f"blocked formula: {report.blocked.formula}")
    if report.bad_node is not None:
        lines.append(f"bad termination at: {report.bad_node}")
    if report.witness is not None:
        lines.append("witness:")
        lines.append(f"  {report.witness.initial}")
        for st in report.witness.steps:
            writes = ", ".join(f"{v}'={x}" for v, x in sorted(st.firing.writes().items()))
            lines.append(f"  --{st.action}[{writes}]--> {st.state}")
    return "\n".join(lines) + "\n"
