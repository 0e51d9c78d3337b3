"""Bottom-up attribute evaluation on synthesized trees.

Each attribute domain fixes how alternatives and conjunctions combine, how a
node's value merges with the price of getting past its counter, and which
control categories are allowed to influence the result at all.  Controls of
an irrelevant category are skipped entirely, so attaching them cannot move
any value by a single bit.

The walk prices the attacker's view.  At a defender node the attacker must
defeat every alternative defence but only one conjunct, so the defender's
combiners flip: AND of defences combines like an attacker OR and vice versa.
Assigned terms cut the walk; unassigned ground access leaves can default from
their propositional value when one is supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .bundle import AdNode, Refinement, TermKind
from .defences import Category, Control
from .errors import EvaluationError
from .synthesis import AdTree

LeafAssignment = dict[str, float]

INFEASIBLE = math.inf


def _noisy_or(a: float, b: float) -> float:
    return 1.0 - (1.0 - a) * (1.0 - b)


@dataclass(frozen=True)
class AttributeDomain:
    """Numeric semantics for one attribute."""

    name: str
    or_combine: Callable[[list[float]], float]
    and_combine: Callable[[list[float]], float]
    # Merges a node's own value with the contribution of its counter (and a
    # control's annotation into a defence contribution).
    seq_combine: Callable[[float, float], float]
    true_leaf: float
    false_leaf: float
    relevant_categories: frozenset[Category]
    unit_interval: bool = False  # values and annotations live in [0, 1]

    def check_range(self, value: float, where: str) -> float:
        if self.unit_interval and not (0.0 <= value <= 1.0):
            raise EvaluationError(
                f"{self.name}: value {value} out of [0, 1] range for {where}"
            )
        return value


ATTRIBUTE_DOMAINS: dict[str, AttributeDomain] = {
    "attacker-cost": AttributeDomain(
        name="attacker-cost",
        or_combine=lambda vs: min(vs, default=INFEASIBLE),
        and_combine=lambda vs: sum(vs),
        seq_combine=lambda a, b: a + b,
        true_leaf=0.0,
        false_leaf=INFEASIBLE,
        relevant_categories=frozenset({Category.PREVENTIVE}),
    ),
    "attack-time": AttributeDomain(
        name="attack-time",
        or_combine=lambda vs: min(vs, default=INFEASIBLE),
        and_combine=lambda vs: sum(vs),
        seq_combine=lambda a, b: a + b,
        true_leaf=0.0,
        false_leaf=INFEASIBLE,
        relevant_categories=frozenset({Category.PREVENTIVE}),
    ),
    "success-probability": AttributeDomain(
        name="success-probability",
        or_combine=lambda vs: max(vs, default=0.0),
        and_combine=lambda vs: math.prod(vs),
        seq_combine=lambda a, b: a * b,
        true_leaf=1.0,
        false_leaf=0.0,
        relevant_categories=frozenset({Category.PREVENTIVE}),
        unit_interval=True,
    ),
    "detection-risk": AttributeDomain(
        name="detection-risk",
        or_combine=lambda vs: max(vs, default=0.0),
        and_combine=lambda vs: 1.0 - math.prod(1.0 - v for v in vs),
        seq_combine=_noisy_or,
        true_leaf=0.0,
        false_leaf=0.0,
        relevant_categories=frozenset({Category.DETECTIVE}),
        unit_interval=True,
    ),
    "impact": AttributeDomain(
        name="impact",
        or_combine=lambda vs: max(vs, default=0.0),
        and_combine=lambda vs: max(vs, default=0.0),
        seq_combine=lambda a, b: max(a, b),
        true_leaf=0.0,
        false_leaf=0.0,
        relevant_categories=frozenset(
            {Category.PREVENTIVE, Category.DETECTIVE, Category.CORRECTIVE}
        ),
    ),
}


def relevant_controls(attribute: str) -> set[Category]:
    """Control categories that may influence the given attribute."""
    domain = ATTRIBUTE_DOMAINS.get(attribute)
    if domain is None:
        raise EvaluationError(f"unknown attribute {attribute!r}")
    return set(domain.relevant_categories)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def evaluate_attribute(tree: AdTree, domain: AttributeDomain, leaves: LeafAssignment,
                       controls: dict[str, Control] | None = None,
                       props: dict[str, bool] | None = None) -> dict[str, float]:
    """Node id -> attribute value.

    ``leaves`` is keyed by term key and cuts the walk wherever its term
    appears.  ``props`` (propositional node values, same tree) lets ground
    access terms default to the domain's true/false leaf values; without it
    an uncovered ground leaf is an error.
    """
    controls = controls or {}
    values: dict[str, float] = {}
    in_progress: set[str] = set()
    nodes_by_id = tree.nodes_by_id()

    for key, value in leaves.items():
        domain.check_range(value, f"leaf assignment {key!r}")

    def control_modifier(node: AdNode) -> float:
        mod = domain.true_leaf  # neutral for seq_combine
        for control_id in node.controls:
            control = controls.get(control_id)
            if control is None or control.category not in domain.relevant_categories:
                continue
            annotation = control.annotations.get(domain.name)
            if annotation is None:
                continue  # neutral element when the analyst supplied nothing
            domain.check_range(float(annotation), f"annotation on control {control_id!r}")
            mod = domain.seq_combine(mod, float(annotation))
        return mod

    def attack(node: AdNode) -> float:
        if node.id in values:
            return values[node.id]
        if node.id in in_progress:
            return domain.false_leaf  # cycles price as infeasible, like the LFP
        in_progress.add(node.id)
        value = attack_value(node)
        in_progress.discard(node.id)
        values[node.id] = value
        return value

    def attack_value(node: AdNode) -> float:
        key = node.term.key()
        if key in leaves:
            return leaves[key]
        kind = node.term.kind
        if kind == TermKind.BREAK:
            return domain.false_leaf
        if kind == TermKind.ACCESS and node.ref is not None:
            referent = nodes_by_id[node.ref]
            if referent.id in in_progress:
                return domain.false_leaf
            return attack(referent)
        if node.refinement == Refinement.LEAF:
            base = ground_default(node)
        else:
            child_values = [attack(c) for c in node.children]
            combine = domain.or_combine if node.refinement == Refinement.OR else domain.and_combine
            base = combine(child_values)
            if kind == TermKind.ACCESS and props is not None:
                # Ground accessibility is an alternative route, as in the
                # propositional semantics.
                base = domain.or_combine([base, _from_prop(node)])
        if node.counter is not None:
            base = domain.seq_combine(base, defeat(node.counter))
        return base

    def ground_default(node: AdNode) -> float:
        if props is None:
            raise EvaluationError(
                f"no value assigned for leaf {node.term.key()!r} and no "
                f"propositional defaults supplied"
            )
        return _from_prop(node)

    def _from_prop(node: AdNode) -> float:
        assert props is not None
        return domain.true_leaf if props.get(node.id) else domain.false_leaf

    def defeat(node: AdNode) -> float:
        """Price of getting past a defender node, attacker's view."""
        if node.id in values:
            return values[node.id]
        if node.id in in_progress:
            return domain.false_leaf  # defence on a cycle: route priced infeasible
        in_progress.add(node.id)
        if node.children:
            parts = [defeat(c) for c in node.children]
            # Breaking an AND of defences needs one part; an OR needs all.
            combine = domain.or_combine if node.refinement == Refinement.AND else domain.and_combine
            value = combine(parts)
        elif node.counter is not None:
            value = attack(node.counter)
        else:
            value = domain.true_leaf  # nothing formal to defeat
        value = domain.seq_combine(value, control_modifier(node))
        in_progress.discard(node.id)
        values[node.id] = value
        return value

    for node in tree.root.walk():
        if node.term.is_attacker:
            attack(node)
        else:
            defeat(node)
    return values


@dataclass
class WhatIfResult:
    attribute: str
    before: float
    after: float
    _rollback: Callable[[], None] = field(repr=False, default=lambda: None)

    def rollback(self) -> None:
        self._rollback()


def what_if(session, action: str, control_id: str, attribute: str,
            attacker: str, asset: str, leaves: LeafAssignment | None = None,
            slot=None) -> WhatIfResult:
    """Apply an attach/detach transactionally and report the attribute value
    on the affected tree before and after.  The returned handle can roll the
    action back; failures roll back automatically."""
    domain = ATTRIBUTE_DOMAINS.get(attribute)
    if domain is None:
        raise EvaluationError(f"unknown attribute {attribute!r}")
    leaves = leaves or {}

    def measure() -> float:
        result = session.evaluate(attacker, asset)
        node_values = evaluate_attribute(
            result.tree, domain, leaves, controls=session.controls, props=result.values,
        )
        return node_values[result.tree.root.id]

    before = measure()
    if action == "attach":
        if slot is None:
            raise EvaluationError("attach action needs a slot")
        session.attach(control_id, slot)
        undo: Callable[[], None] = lambda: session.detach(control_id)
    elif action == "detach":
        attachment = session.detach(control_id)
        undo = lambda: session.attach(control_id, attachment.slot)
    else:
        raise EvaluationError(f"unknown what-if action {action!r}")

    try:
        after = measure()
    except Exception:
        undo()
        raise
    return WhatIfResult(attribute=attribute, before=before, after=after, _rollback=undo)
