"""Brute-force oracle: simulate attacker action sequences on the raw model.

Completely independent of the bundle/tree/state machinery: plain set worklist
over the model's edges and policies.  The attacker repeats three actions to a
fixpoint over (reached, entered):

* move: anything edge-incident to an entered base becomes reached;
* acquire: reached objects count as credentials for unlocking elements
  (a policy is satisfied by any configuration whose credentials are all
  reachable objects);
* enter: a reached element is entered once its policy is unlocked, or when
  an entered base connects to it through an approach with no configuration
  (an unguarded connection is a free door) or one whose credentials are all
  entered objects.

The attacker's own placements are the initial bases; objects and actors
co-located with the attacker start reached.  The asset is compromised when it
is entered.
"""

from __future__ import annotations

from stadt.model import EdgeKind, Kind, Model


def oracle_decides(model: Model, attacker: str, asset: str) -> bool:
    objects = {e.id for e in model.elements.values() if e.kind == Kind.OBJECT}
    configs = {guarded: list(policy.configs) for guarded, policy in model.policies.items()}

    incident: dict[str, set[str]] = {eid: set() for eid in model.elements}
    approaches: dict[str, set[str]] = {eid: set() for eid in model.elements}
    for edge in model.edges:
        incident[edge.source].add(edge.target)
        incident[edge.target].add(edge.source)
        approaches[edge.source].add(edge.target)

    placements = {
        edge.target for edge in model.edges
        if edge.kind == EdgeKind.ACTOR_AT and edge.source == attacker
    }
    reached = set(placements)
    for edge in model.edges:
        if edge.kind in (EdgeKind.OBJECT_AT, EdgeKind.ACTOR_AT) and edge.target in placements:
            if edge.source != attacker:
                reached.add(edge.source)
    entered: set[str] = set()

    def unlocked(n: str, credentials: set[str]) -> bool:
        cfgs = configs.get(n)
        if not cfgs:
            return True
        return any(c.credentials <= credentials for c in cfgs)

    changed = True
    while changed:
        changed = False
        acquired = reached & objects
        entered_objects = entered & objects

        for n in list(reached - entered):
            if unlocked(n, acquired):
                entered.add(n)
                changed = True

        for n in model.elements:
            if n in entered:
                continue
            for base in approaches[n]:
                if base != attacker and base not in entered:
                    continue
                at_base = [c for c in configs.get(n, []) if c.at_location == base]
                if not at_base or any(c.credentials <= entered_objects for c in at_base):
                    entered.add(n)
                    reached.add(n)
                    changed = True
                    break

        for base in list(entered):
            fresh = incident[base] - reached
            if fresh:
                reached |= fresh
                changed = True

    return asset in entered
