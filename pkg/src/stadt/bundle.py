"""Attack-defence bundle construction.

A bundle is a small attack-defence tree rooted at the goal of accessing one
model element.  The grammar is fixed:

* the root ``access(n)`` is an OR over ``accfrom(n, l)`` for each ``l`` the
  element is placed at or connected to;
* an unguarded approach collapses to ``access(l)``;
* a guarded approach keeps ``access(l)`` as its child and gains a defence
  counter, an AND over one ``defpolicy`` per configuration, each countered in
  turn by ``breakpol`` = OR(``satpol``, ``break``);
* ``satpol`` is an AND over accessing every credential; ``break`` nodes are
  never refined.

Bundles are attacker-agnostic: access leaves stay symbolic references that
the synthesis stage resolves.  Children follow a fixed lexicographic order so
regeneration is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .model import AccessConfig, Model, configs_at, loc


class TermKind(str, Enum):
    # Attacker-side terms.
    ACCESS = "access"
    ACCESS_FROM = "accfrom"
    BREAK = "break"
    BREAK_POL = "breakpol"
    SAT_POL = "satpol"
    # Defender-side terms.
    DEFENCE = "defence"
    DEF_POLICY = "defpolicy"
    # Defender-side terms introduced by control attachment, not by the grammar.
    PREVENTIVE = "preventive"
    RESPONSE = "response"


_ATTACKER_KINDS = {
    TermKind.ACCESS, TermKind.ACCESS_FROM, TermKind.BREAK,
    TermKind.BREAK_POL, TermKind.SAT_POL,
}


class Refinement(str, Enum):
    OR = "or"
    AND = "and"
    LEAF = "leaf"


@dataclass(frozen=True)
class PolicyRef:
    """Stable reference to one configuration of the policy guarding an element.

    ``index`` is the position in the canonical per-(guarded, at_location)
    ordering, so the reference survives serialization round-trips.
    """

    guarded: str
    at_location: str
    index: int
    config: AccessConfig

    def key(self) -> str:
        return f"{self.guarded}@{self.at_location}#{self.index}"


@dataclass(frozen=True)
class AdTerm:
    kind: TermKind
    subject: str | None = None      # n for access/break/defence..., control-group owner
    via: str | None = None          # l for accfrom/defence/preventive
    policy: PolicyRef | None = None  # p for breakpol/satpol/defpolicy

    @property
    def is_attacker(self) -> bool:
        return self.kind in _ATTACKER_KINDS

    def key(self) -> str:
        """Canonical string form, used in JSON output and leaf assignments."""
        if self.kind in (TermKind.ACCESS, TermKind.BREAK, TermKind.RESPONSE):
            return f"{self.kind.value}:{self.subject}"
        if self.kind in (TermKind.ACCESS_FROM, TermKind.DEFENCE, TermKind.PREVENTIVE):
            return f"{self.kind.value}:{self.subject}@{self.via}"
        assert self.policy is not None
        return f"{self.kind.value}:{self.policy.key()}"


def access(n: str) -> AdTerm:
    return AdTerm(TermKind.ACCESS, subject=n)


def access_from(n: str, l: str) -> AdTerm:
    return AdTerm(TermKind.ACCESS_FROM, subject=n, via=l)


@dataclass
class AdNode:
    """One attack-defence tree node.

    ``children`` always share the node's player type; ``counter`` is the at
    most one child of the opposite type.  ``controls`` holds ids of analyst
    controls attached at this node.  ``ref`` marks reference leaves: the node
    id of the expansion this leaf stands for (shared bundle or cycle cut).
    """

    term: AdTerm
    refinement: Refinement = Refinement.LEAF
    children: list["AdNode"] = field(default_factory=list)
    counter: "AdNode | None" = None
    controls: list[str] = field(default_factory=list)
    id: str = ""
    ref: str | None = None

    def walk(self):
        """Depth-first walk: the node, its children left to right, then the counter."""
        yield self
        for child in self.children:
            yield from child.walk()
        if self.counter is not None:
            yield from self.counter.walk()


@dataclass
class Bundle:
    asset: str
    root: AdNode


def build_bundle(model: Model, n: str) -> Bundle:
    """Construct the attack-defence bundle for element ``n``."""
    adjacent = sorted(loc(model, n))
    root = AdNode(term=access(n))
    if not adjacent:
        return Bundle(asset=n, root=root)

    root.refinement = Refinement.OR
    for l in adjacent:
        configs = configs_at(model, n, l)
        accfrom = AdNode(
            term=access_from(n, l),
            refinement=Refinement.OR,
            children=[AdNode(term=access(l))],
        )
        if configs:
            accfrom.counter = _defence_node(n, l, configs)
        root.children.append(accfrom)
    return Bundle(asset=n, root=root)


def _defence_node(n: str, l: str, configs: list[AccessConfig]) -> AdNode:
    defence = AdNode(
        term=AdTerm(TermKind.DEFENCE, subject=n, via=l),
        refinement=Refinement.AND,
    )
    for index, config in enumerate(configs):
        ref = PolicyRef(guarded=n, at_location=l, index=index, config=config)
        sat_pol = AdNode(
            term=AdTerm(TermKind.SAT_POL, policy=ref),
            refinement=Refinement.AND,
            children=[AdNode(term=access(c)) for c in sorted(config.credentials)],
        )
        break_pol = AdNode(
            term=AdTerm(TermKind.BREAK_POL, policy=ref),
            refinement=Refinement.OR,
            children=[sat_pol, AdNode(term=AdTerm(TermKind.BREAK, subject=config.enforcement))],
        )
        # defpolicy has no defender children of its own: it only flips the
        # view back to the attacker through its counter.
        def_policy = AdNode(
            term=AdTerm(TermKind.DEF_POLICY, policy=ref),
            refinement=Refinement.AND,
            counter=break_pol,
        )
        defence.children.append(def_policy)
    return defence


def bundle_leaves(bundle: Bundle) -> list[AdTerm]:
    """Leaf terms in left-to-right order; always access or break terms."""
    return [node.term for node in bundle.root.walk() if node.refinement == Refinement.LEAF]


def node_count(bundle: Bundle) -> int:
    return sum(1 for _ in bundle.root.walk())


def expected_node_count(model: Model, n: str) -> int:
    """Exact node count of ``build_bundle(model, n)``, derived from the grammar.

    Linear in the policy size: 1 for the root, 2 per adjacent element, and
    for each guarded approach 1 defence node plus 4 nodes and one access leaf
    per credential for every configuration.
    """
    total = 1
    for l in loc(model, n):
        total += 2
        configs = configs_at(model, n, l)
        if configs:
            total += 1 + sum(4 + len(c.credentials) for c in configs)
    return total


# ---------------------------------------------------------------------------
# Structural checks
# ---------------------------------------------------------------------------

def structural_violations(root: AdNode) -> list[str]:
    """Violations of the node invariants, empty for well-formed trees."""
    problems: list[str] = []
    for node in root.walk():
        name = node.term.key()
        for child in node.children:
            if child.term.is_attacker != node.term.is_attacker:
                problems.append(f"{name}: child {child.term.key()} has opposite player type")
        if node.counter is not None and node.counter.term.is_attacker == node.term.is_attacker:
            problems.append(f"{name}: counter {node.counter.term.key()} has same player type")
        if node.refinement == Refinement.LEAF and node.children:
            problems.append(f"{name}: leaf with children")
        if node.term.kind == TermKind.BREAK and node.children:
            problems.append(f"{name}: break node refined")
    return problems


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def assign_node_ids(root: AdNode, prefix: str = "n") -> None:
    """Number nodes in walk order; stable across regenerations."""
    for i, node in enumerate(root.walk()):
        node.id = f"{prefix}{i}"


def node_to_dict(node: AdNode) -> dict:
    term = node.term
    out: dict = {
        "term": {
            "kind": term.kind.value,
            "key": term.key(),
        },
        "refinement": node.refinement.value,
        "children": [node_to_dict(c) for c in node.children],
        "counter": node_to_dict(node.counter) if node.counter else None,
        "controls": list(node.controls),
    }
    if term.subject is not None:
        out["term"]["subject"] = term.subject
    if term.via is not None:
        out["term"]["via"] = term.via
    if term.policy is not None:
        out["term"]["policy"] = {
            "guarded": term.policy.guarded,
            "atLocation": term.policy.at_location,
            "index": term.policy.index,
            "credentials": sorted(term.policy.config.credentials),
            "enforcementMechanism": term.policy.config.enforcement,
        }
    if node.id:
        out["id"] = node.id
    if node.ref is not None:
        out["ref"] = node.ref
    return out


def bundle_to_dict(bundle: Bundle) -> dict:
    return {"asset": bundle.asset, "root": node_to_dict(bundle.root)}


def to_dot(root: AdNode, title: str = "bundle", values: dict[str, bool] | None = None) -> str:
    """Graphviz form: attack nodes as ellipses, defence nodes as boxes,
    counter edges dashed.  ``values`` colors true nodes."""
    assign_node_ids(root)
    lines = [f'digraph "{title}" {{']
    for node in root.walk():
        shape = "ellipse" if node.term.is_attacker else "box"
        label = node.term.key()
        if node.controls:
            label += "\\n[" + ", ".join(node.controls) + "]"
        attrs = f'label="{label}", shape={shape}'
        if values is not None and values.get(node.id):
            attrs += ', style=filled, fillcolor="palegreen"'
        lines.append(f'  "{node.id}" [{attrs}];')
        for child in node.children:
            lines.append(f'  "{node.id}" -> "{child.id}";')
        if node.counter is not None:
            lines.append(f'  "{node.id}" -> "{node.counter.id}" [style=dashed];')
        if node.ref is not None:
            lines.append(f'  "{node.id}" -> "{node.ref}" [style=dotted, constraint=false];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def copy_node(node: AdNode) -> AdNode:
    """Deep copy used when instantiating bundles into synthesized trees."""
    return AdNode(
        term=node.term,
        refinement=node.refinement,
        children=[copy_node(c) for c in node.children],
        counter=copy_node(node.counter) if node.counter else None,
        controls=list(node.controls),
        ref=node.ref,
    )
