"""Attack-defence tree synthesis and evaluation.

Synthesis glues bundles: starting from the asset's bundle, every access leaf
is substituted with the bundle of the referenced element.  Two guards keep
the tree finite: an access term already under expansion on the current path
becomes a back-reference leaf (cycle cut), and a bundle already expanded
elsewhere is referenced instead of duplicated.  Access terms with no adjacent
elements, and the attacker's own term, stay ground leaves.

Evaluation is propositional.  An access node is true when the element is
accessible in the current state, or when some refinement branch carries the
attacker through: an unguarded approach from a true access child, or a
guarded one whose defence is defeated (a configuration satisfied credential
by credential, break nodes being constantly false).  Reference leaves read
their referent, falling back to the previous round's value inside the
fixpoint loop, so cycles settle to the least fixpoint rather than assuming
themselves true.

The fixpoint loop alternates evaluation with monotone state updates: every
access term that evaluated true becomes reachable for the attacker, granted
is recomputed from the grown row, the row is re-closed, and the tree is
re-evaluated, until nothing changes.  Only the chosen attacker's rows move;
other actors stay frozen at bootstrap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .bundle import (
    AdNode,
    Bundle,
    Refinement,
    TermKind,
    build_bundle,
    copy_node,
    node_to_dict,
)
from .errors import UnknownElementError
from .model import Kind, Model, local_policy
from .state import State, accessible, bootstrap, close_reachable


@dataclass
class AdTree:
    attacker: str
    asset: str
    root: AdNode
    bundle_index: dict[str, Bundle]
    ref_marks: set[str] = field(default_factory=set)
    # Access term subject -> node id of its expansion; reference leaves point here.
    expansion_of: dict[str, str] = field(default_factory=dict)

    def nodes_by_id(self) -> dict[str, AdNode]:
        return {node.id: node for node in self.root.walk()}


@dataclass(frozen=True)
class Round:
    number: int
    newly_true: tuple[str, ...]
    granted_flips: tuple[str, ...]


@dataclass
class EvalTrace:
    rounds: list[Round] = field(default_factory=list)

    def true_terms(self) -> set[str]:
        out: set[str] = set()
        for r in self.rounds:
            out.update(r.newly_true)
        return out


def synthesize(model: Model, attacker: str, asset: str,
               bundles: Callable[[str], Bundle] | None = None) -> AdTree:
    """Build the attack-defence tree for one attacker and one target asset.

    ``bundles`` lets an analyst session supply its control-decorated bundles;
    by default pristine bundles are built from the model.
    """
    if model.element(attacker).kind != Kind.ACTOR:
        raise UnknownElementError(f"attacker {attacker!r} is not an actor")
    if model.element(asset).kind != Kind.OBJECT:
        raise UnknownElementError(f"asset {asset!r} is not an object")
    provider = bundles if bundles is not None else (lambda n: build_bundle(model, n))

    bundle_index: dict[str, Bundle] = {}
    ref_marks: set[str] = set()
    expansion_of: dict[str, str] = {}
    back_refs: list[AdNode] = []
    counter = 0

    def next_id() -> str:
        nonlocal counter
        counter += 1
        return f"n{counter - 1}"

    def expand(element: str, path: frozenset[str]) -> AdNode:
        bundle = provider(element)
        bundle_index.setdefault(element, bundle)
        node = copy_node(bundle.root)
        for sub in node.walk():
            sub.id = next_id()
        if node.refinement == Refinement.LEAF and node.counter is None:
            return node  # no adjacent elements: stays a ground leaf at the call site
        expansion_of[element] = node.id
        for leaf in list(node.walk()):
            if leaf is node:
                continue
            if leaf.term.kind != TermKind.ACCESS or leaf.refinement != Refinement.LEAF:
                continue
            target = leaf.term.subject
            assert target is not None
            if target == attacker:
                continue  # an actor trivially reaches itself: ground leaf
            if target in path:
                ref_marks.add(leaf.id)
                back_refs.append(leaf)
                continue
            if target in expansion_of:
                leaf.ref = expansion_of[target]
                continue
            expansion = expand(target, path | {target})
            if expansion.refinement == Refinement.LEAF and expansion.counter is None:
                continue  # ground leaf, evaluated via the state
            leaf.refinement = expansion.refinement
            leaf.children = expansion.children
            leaf.counter = expansion.counter
            leaf.controls = expansion.controls
            expansion_of[target] = leaf.id
        return node

    root = expand(asset, frozenset({asset}))
    for leaf in back_refs:
        leaf.ref = expansion_of[leaf.term.subject]
    return AdTree(
        attacker=attacker,
        asset=asset,
        root=root,
        bundle_index=bundle_index,
        ref_marks=ref_marks,
        expansion_of=expansion_of,
    )


# ---------------------------------------------------------------------------
# Propositional evaluation
# ---------------------------------------------------------------------------

def evaluate_propositional(tree: AdTree, state: State,
                           previous: dict[str, bool] | None = None) -> dict[str, bool]:
    """Node id -> truth value under the given state.

    ``previous`` supplies last-round values for reference leaves whose
    referent is still being computed (cycle cuts); without it such leaves
    read false.
    """
    values: dict[str, bool] = {}
    in_progress: set[str] = set()
    nodes_by_id = tree.nodes_by_id()

    def ground(subject: str) -> bool:
        if subject == tree.attacker:
            return True
        return accessible(state, tree.attacker, subject)

    def eval_node(node: AdNode) -> bool:
        if node.id in values:
            return values[node.id]
        if node.id in in_progress:
            return bool(previous and previous.get(node.id, False))
        in_progress.add(node.id)
        value = node_value(node)
        in_progress.discard(node.id)
        values[node.id] = value
        return value

    def node_value(node: AdNode) -> bool:
        kind = node.term.kind
        if kind == TermKind.BREAK:
            return False
        if kind == TermKind.ACCESS and node.ref is not None:
            referent = nodes_by_id[node.ref]
            if referent.id in values:
                return values[referent.id]
            if referent.id in in_progress:
                return bool(previous and previous.get(referent.id, False))
            return eval_node(referent)
        if node.refinement == Refinement.OR:
            child_values = [eval_node(c) for c in node.children]
            base = any(child_values)
        elif node.refinement == Refinement.AND:
            child_values = [eval_node(c) for c in node.children]
            base = all(child_values)
        else:
            base = ground(node.term.subject) if kind == TermKind.ACCESS else False
        if kind == TermKind.ACCESS and not base:
            # State and structure are alternative routes to the same goal.
            base = ground(node.term.subject)
        if node.counter is not None:
            base = base and not eval_node(node.counter)
        return base

    for node in tree.root.walk():
        eval_node(node)
    return values


def root_value(tree: AdTree, values: dict[str, bool]) -> bool:
    return values[tree.root.id]


# ---------------------------------------------------------------------------
# Fixpoint evaluation
# ---------------------------------------------------------------------------

@dataclass
class FixpointResult:
    value: bool
    trace: EvalTrace
    state: State
    values: dict[str, bool]
    tree: AdTree


def run_fixpoint(model: Model, attacker: str, asset: str,
                 bundles: Callable[[str], Bundle] | None = None,
                 tree: AdTree | None = None) -> FixpointResult:
    """Evaluate to the least fixpoint of state and tree values."""
    if tree is None:
        tree = synthesize(model, attacker, asset, bundles=bundles)
    access_nodes = [n for n in tree.root.walk() if n.term.kind == TermKind.ACCESS]

    state = bootstrap(model)
    values = evaluate_propositional(tree, state)
    true_terms = {n.term.key() for n in access_nodes if values[n.id]}
    trace = EvalTrace()
    trace.rounds.append(Round(0, tuple(sorted(true_terms)), ()))

    round_no = 1
    pending_granted: set[str] = set()
    # Monotone flips bound every phase; the cap is a defensive invariant.
    iteration_cap = 4 * (len(model.elements) + len(access_nodes) + 2)
    for _ in range(iteration_cap):
        row = set(state.reach(attacker))
        before_row = frozenset(row)
        row.update(n.term.subject for n in access_nodes if values[n.id])

        granted_row = _granted_row(model, frozenset(row))
        granted_flips = granted_row - state.granted.get(attacker, frozenset())

        reachable = dict(state.reachable)
        reachable[attacker] = frozenset(row)
        granted = dict(state.granted)
        granted[attacker] = granted_row
        reachable = close_reachable(model, reachable, granted, actors=[attacker])
        state_changed = reachable[attacker] != before_row or bool(granted_flips)
        state = State(reachable=reachable, granted=granted)

        values = evaluate_propositional(tree, state, previous=values)
        now_true = {n.term.key() for n in access_nodes if values[n.id]}
        newly = sorted(now_true - true_terms)

        pending_granted.update(granted_flips)
        if newly:
            trace.rounds.append(Round(round_no, tuple(newly), tuple(sorted(pending_granted))))
            round_no += 1
            pending_granted = set()
            true_terms = now_true
        elif not state_changed:
            break
    else:
        raise AssertionError("fixpoint evaluation failed to converge (monotonicity bug)")

    return FixpointResult(
        value=root_value(tree, values), trace=trace, state=state, values=values, tree=tree,
    )


def fixpoint_evaluate(model: Model, attacker: str, asset: str) -> tuple[bool, EvalTrace]:
    result = run_fixpoint(model, attacker, asset)
    return result.value, result.trace


def _granted_row(model: Model, reach: frozenset[str]) -> frozenset[str]:
    objects = set(model.objects)
    held = set(reach) & objects
    row = set()
    for n in model.elements:
        policy = local_policy(model, n)
        if not policy.configs or any(c.credentials <= held for c in policy.configs):
            row.add(n)
    return frozenset(row)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def tree_to_dict(tree: AdTree, values: dict[str, bool] | None = None,
                 trace: EvalTrace | None = None) -> dict:
    out: dict = {
        "attacker": tree.attacker,
        "asset": tree.asset,
        "root": node_to_dict(tree.root),
        "refMarks": sorted(tree.ref_marks),
    }
    if values is not None:
        out["values"] = {nid: values[nid] for nid in sorted(values)}
    if trace is not None:
        out["trace"] = [
            {
                "round": r.number,
                "newlyTrue": list(r.newly_true),
                "grantedFlips": list(r.granted_flips),
            }
            for r in trace.rounds
        ]
    return out
