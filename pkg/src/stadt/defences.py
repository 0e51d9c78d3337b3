"""Security controls: catalog, placement slots, and bundle surgery.

Controls are analyst-supplied countermeasures with free-text names.  They are
classified preventive, detective, or corrective, and technical, management,
or operational.  Two attack-node kinds accept them: an approach node takes
preventive controls (wrapping any policy defence already there), and a bundle
root takes detective and corrective controls grouped under a single response
node so the unique-counter rule survives.  Consistency is global: a control
id is attached at exactly one slot, ever.

The default catalog maps (element kind, space, category) to suggested control
names and ships as data so analysts can extend it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .bundle import AdNode, AdTerm, Bundle, Refinement, TermKind
from .errors import DomainRuleError, UnknownElementError
from .model import Kind, Model, Space


class Category(str, Enum):
    PREVENTIVE = "preventive"
    DETECTIVE = "detective"
    CORRECTIVE = "corrective"


class Implementation(str, Enum):
    TECHNICAL = "technical"
    MANAGEMENT = "management"
    OPERATIONAL = "operational"


@dataclass(frozen=True)
class Control:
    id: str
    name: str
    category: Category
    implementation: Implementation
    annotations: dict = field(default_factory=dict)

    @staticmethod
    def from_dict(raw: dict) -> "Control":
        return Control(
            id=raw["id"],
            name=raw.get("name", raw["id"]),
            category=Category(raw["category"]),
            implementation=Implementation(raw["implementation"]),
            annotations=dict(raw.get("annotations", {})),
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "category": self.category.value,
            "implementation": self.implementation.value,
            "annotations": dict(self.annotations),
        }


class SlotKind(str, Enum):
    ROOT = "root"
    PREVENTIVE = "prev"
    PERIMETER = "perimeter"


@dataclass(frozen=True)
class PlacementSlot:
    kind: SlotKind
    owner: str                  # asset id, or perimeter id for perimeter slots
    location: str | None = None  # approach location for preventive slots

    def key(self) -> str:
        if self.kind == SlotKind.PREVENTIVE:
            return f"prev:{self.owner},{self.location}"
        return f"{self.kind.value}:{self.owner}"

    @staticmethod
    def parse(text: str) -> "PlacementSlot":
        head, _, rest = text.partition(":")
        if head == "root" and rest:
            return PlacementSlot(SlotKind.ROOT, rest)
        if head == "perimeter" and rest:
            return PlacementSlot(SlotKind.PERIMETER, rest)
        if head == "prev" and "," in rest:
            owner, _, location = rest.partition(",")
            if owner and location:
                return PlacementSlot(SlotKind.PREVENTIVE, owner, location)
        raise DomainRuleError(f"malformed slot {text!r}; use root:<n>, prev:<n>,<l> or perimeter:<p>")


def placement_slots(bundle: Bundle) -> list[PlacementSlot]:
    """Slots a bundle offers: its root, plus one per approach node."""
    slots = [PlacementSlot(SlotKind.ROOT, bundle.asset)]
    for child in bundle.root.children:
        if child.term.kind == TermKind.ACCESS_FROM:
            slots.append(PlacementSlot(SlotKind.PREVENTIVE, bundle.asset, child.term.via))
    return slots


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    kind: Kind
    space: Space
    category: Category
    names: tuple[str, ...]


@dataclass
class Catalog:
    entries: list[CatalogEntry]

    def suggest(self, kind: Kind, space: Space, category: Category) -> list[str]:
        for entry in self.entries:
            if (entry.kind, entry.space, entry.category) == (kind, space, category):
                return list(entry.names)
        return []


def load_catalog(path: str | None = None) -> Catalog:
    """The shipped catalog, or an analyst-extended one from ``path``."""
    if path is None:
        raw = resources.files("stadt.data").joinpath("catalog.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    entries = [
        CatalogEntry(
            kind=Kind(e["kind"]),
            space=Space(e["space"]),
            category=Category(e["category"]),
            names=tuple(e["names"]),
        )
        for e in json.loads(raw)
    ]
    return Catalog(entries=entries)


def suggest_controls(model: Model, element: str, category: Category,
                     catalog: Catalog | None = None) -> list[str]:
    """Control names the catalog recommends for one element and category."""
    el = model.element(element)
    return (catalog or load_catalog()).suggest(el.kind, el.space, category)


# ---------------------------------------------------------------------------
# Bundle surgery
# ---------------------------------------------------------------------------

def check_slot_category(control: Control, slot: PlacementSlot) -> None:
    if control.category == Category.PREVENTIVE and slot.kind != SlotKind.PREVENTIVE:
        raise DomainRuleError(
            f"preventive control {control.id!r} must go on an approach slot, not {slot.key()}"
        )
    if control.category != Category.PREVENTIVE and slot.kind == SlotKind.PREVENTIVE:
        raise DomainRuleError(
            f"{control.category.value} control {control.id!r} belongs at a root slot, "
            f"not {slot.key()}"
        )


def find_access_from(bundle: Bundle, location: str) -> AdNode:
    for child in bundle.root.children:
        if child.term.kind == TermKind.ACCESS_FROM and child.term.via == location:
            return child
    raise UnknownElementError(
        f"bundle for {bundle.asset!r} has no approach from {location!r}"
    )


def apply_preventive(bundle: Bundle, location: str, control_id: str) -> None:
    """Attach a preventive control at the approach node, wrapping any policy
    defence so the approach keeps exactly one counter."""
    accfrom = find_access_from(bundle, location)
    counter = accfrom.counter
    if counter is not None and counter.term.kind == TermKind.PREVENTIVE:
        preventive = counter
    else:
        preventive = AdNode(
            term=AdTerm(TermKind.PREVENTIVE, subject=bundle.asset, via=location),
            refinement=Refinement.OR,
            children=[counter] if counter is not None else [],
        )
        accfrom.counter = preventive
    preventive.controls.append(control_id)


def apply_root_control(root: AdNode, owner: str, control_id: str) -> None:
    """Attach a detective or corrective control to the grouped response node
    countering the bundle root."""
    counter = root.counter
    if counter is not None and counter.term.kind == TermKind.RESPONSE:
        response = counter
    elif counter is None:
        response = AdNode(
            term=AdTerm(TermKind.RESPONSE, subject=owner),
            refinement=Refinement.OR,
        )
        root.counter = response
    else:
        raise DomainRuleError(f"root of {owner!r} already counters a non-response node")
    response.controls.append(control_id)


def remove_control(bundle_root: AdNode, control_id: str) -> bool:
    """Detach a control wherever it sits in this tree; unwrap emptied
    grouping nodes.  Returns whether anything was removed."""
    parent_of: dict[int, AdNode] = {}
    for node in bundle_root.walk():
        if node.counter is not None:
            parent_of[id(node.counter)] = node  # keyed by object identity
    for node in bundle_root.walk():
        if control_id not in node.controls:
            continue
        node.controls.remove(control_id)
        if node.controls:
            return True
        if node.term.kind == TermKind.PREVENTIVE:
            holder = parent_of.get(id(node))
            if holder is not None:
                holder.counter = node.children[0] if node.children else None
        elif node.term.kind == TermKind.RESPONSE:
            holder = parent_of.get(id(node))
            if holder is not None:
                holder.counter = None
        return True
    return False


def make_perimeter_bundle(perimeter_id: str) -> Bundle:
    """Synthetic bundle a perimeter-wide control is attached to once."""
    return Bundle(
        asset=perimeter_id,
        root=AdNode(term=AdTerm(TermKind.ACCESS, subject=perimeter_id)),
    )
