"""Evaluation state: the reachable and granted relations.

Both relations map an actor to the set of elements the relation holds for.
They only ever grow (entries flip false to true), which bounds every fixpoint
here and in the synthesis layer.  States are immutable snapshots; updates
produce new snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownElementError
from .model import EdgeKind, Kind, Model, local_policy

Relation = dict[str, frozenset[str]]


@dataclass(frozen=True)
class State:
    reachable: Relation
    granted: Relation

    def reach(self, actor: str) -> frozenset[str]:
        return self.reachable.get(actor, frozenset())


def init_reachable(model: Model) -> Relation:
    """Base reachability: own placements, co-located objects, co-located actors."""
    placements: dict[str, set[str]] = {a: set() for a in model.actors}
    at_location: dict[str, set[str]] = {}
    for edge in model.edges:
        if edge.kind == EdgeKind.ACTOR_AT:
            placements[edge.source].add(edge.target)
        if edge.kind in (EdgeKind.ACTOR_AT, EdgeKind.OBJECT_AT):
            at_location.setdefault(edge.target, set()).add(edge.source)

    rows: dict[str, set[str]] = {a: set() for a in model.actors}
    for edge in model.edges:
        if edge.source in rows:
            rows[edge.source].add(edge.target)
    for actor, locs in placements.items():
        for l in locs:
            for other in at_location.get(l, ()):
                if other == actor:
                    continue
                rows[actor].add(other)
                if model.elements[other].kind == Kind.ACTOR:
                    rows[other].add(actor)
    return {a: frozenset(row) for a, row in rows.items()}


def compute_granted(model: Model, reachable: Relation) -> Relation:
    """granted(a, n): no policy on n, or some configuration's credentials all
    lie in the actor's reachable objects."""
    objects = set(model.objects)
    out: Relation = {}
    for actor in model.actors:
        held = set(reachable.get(actor, frozenset())) & objects
        granted = set()
        for n in model.elements:
            policy = local_policy(model, n)
            if not policy.configs or any(c.credentials <= held for c in policy.configs):
                granted.add(n)
        out[actor] = frozenset(granted)
    return out


def accessible(state: State, a: str, n: str) -> bool:
    return n in state.reachable.get(a, frozenset()) and n in state.granted.get(a, frozenset())


def close_reachable(model: Model, reachable: Relation, granted: Relation,
                    actors: list[str] | None = None) -> Relation:
    """Transitive closure: extend each actor's row across any edge incident to
    an element that is both reachable and granted.  ``granted`` is held fixed
    while closing."""
    incident: dict[str, set[str]] = {}
    for edge in model.edges:
        incident.setdefault(edge.source, set()).add(edge.target)
        incident.setdefault(edge.target, set()).add(edge.source)

    out = dict(reachable)
    for actor in actors if actors is not None else model.actors:
        row = set(out.get(actor, frozenset()))
        allowed = granted.get(actor, frozenset())
        frontier = [n for n in row if n in allowed]
        while frontier:
            l = frontier.pop()
            for n in incident.get(l, ()):
                if n not in row:
                    row.add(n)
                    if n in allowed:
                        frontier.append(n)
        out[actor] = frozenset(row)
    return out


def bootstrap(model: Model) -> State:
    """Initial state: base reachability, granted computed once on it, then the
    reachability closure with granted frozen (granted is deliberately not
    recomputed here)."""
    base = init_reachable(model)
    granted = compute_granted(model, base)
    return State(reachable=close_reachable(model, base, granted), granted=granted)


def check_actor(model: Model, a: str) -> None:
    element = model.element(a)
    if element.kind != Kind.ACTOR:
        raise UnknownElementError(f"{a!r} is not an actor")


def dump(model: Model, state: State) -> dict:
    """Stable, sorted form of a state for golden output."""
    return {
        "reachable": {a: sorted(state.reachable.get(a, frozenset())) for a in model.actors},
        "granted": {a: sorted(state.granted.get(a, frozenset())) for a in model.actors},
    }
