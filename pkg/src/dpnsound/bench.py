"""Scalability mutations: sequential padding and chained-variable guards."""

from __future__ import annotations

from .constraints import And, Atom, Constraint, LinTerm, Var, conj
from .dpn import DPN, Arc, Marking, Transition

CHAIN_OPS = ("=", ">=", "<=")


def _fresh(base: str, taken: set[str]) -> str:
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def add_sequential_states(dpn: DPN, n: int) -> DPN:
    """Prefix the net with a chain of ``n`` places linked by unguarded
    transitions; the last one produces the original initial marking."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return dpn
    taken = set(dpn.places) | {t.id for t in dpn.transitions}
    places, transitions, arcs = [], [], []
    for _ in range(n):
        p = _fresh("seq_p", taken)
        taken.add(p)
        places.append(p)
    for i, p in enumerate(places):
        tid = _fresh("seq_t", taken)
        taken.add(tid)
        transitions.append(Transition(tid, label=tid))
        arcs.append(Arc(p, tid))
        if i + 1 < n:
            arcs.append(Arc(tid, places[i + 1]))
        else:
            arcs.extend(Arc(tid, q, w) for q, w in dpn.initial_marking.items())
    return dpn.replace(places=dpn.places + tuple(places),
                       transitions=dpn.transitions + tuple(transitions),
                       arcs=dpn.arcs + tuple(arcs),
                       initial_marking=Marking({places[0]: 1}))


def chain_atom(atom: Atom, zs: list[Var], op: str = "=") -> Constraint:
    """``lhs op' rhs`` becomes ``z1' = lhs, z1' op z2', ..., zk' op' rhs``."""
    if not zs:
        return atom
    ws = [z.written for z in zs]
    links = [Atom(LinTerm.of(ws[0]), "=", atom.lhs)]
    links += [Atom(LinTerm.of(a), op, LinTerm.of(b)) for a, b in zip(ws, ws[1:])]
    links.append(Atom(LinTerm.of(ws[-1]), atom.op, atom.rhs))
    return conj(*links)


def add_chained_vars(dpn: DPN, k: int, op: str = "=") -> DPN:
    """Route every top-level comparison of every guard through ``k`` fresh
    written variables.  Each comparison within one guard gets its own chain
    so that chains never constrain each other."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if op not in CHAIN_OPS:
        raise ValueError(f"chain operator must be one of {CHAIN_OPS}")
    if k == 0:
        return dpn
    names = {v.name for v in dpn.variables}
    fresh: dict[tuple, Var] = {}

    def z(sort, i, j):
        key = (sort, i, j)
        if key not in fresh:
            base = f"z_{sort.value}_{i}" + (f"_{j}" if j > 1 else "")
            name = base
            while name in names:
                name += "_"
            names.add(name)
            fresh[key] = Var(name, sort)
        return fresh[key]

    transitions = []
    for t in dpn.transitions:
        parts = t.guard.args if isinstance(t.guard, And) else (t.guard,)
        counter: dict = {}
        out = []
        for p in parts:
            if isinstance(p, Atom):
                sort = p.sort
                counter[sort] = counter.get(sort, 0) + 1
                out.append(chain_atom(p, [z(sort, i, counter[sort]) for i in range(1, k + 1)], op))
            else:
                out.append(p)
        transitions.append(Transition(t.id, conj(*out), t.label))
    variables = dpn.variables + tuple(sorted(fresh.values()))
    return dpn.replace(transitions=tuple(transitions), variables=variables)
