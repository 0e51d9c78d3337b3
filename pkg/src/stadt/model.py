"""Socio-technical system model: elements, placement edges, and access policies.

The model is a typed graph.  Elements are locations, actors, or objects and
live in the physical or the digital space.  Five edge relations place them:
location-location adjacency (bi-directional), actor placement, object
placement, objects held by actors, and objects inside other objects.  An
element may carry a local policy: a set of access-control configurations,
each naming the credentials required, the adjacent element access is granted
from, and the enforcement mechanism.

Models are immutable after :func:`load_model`; all downstream analyses share
them read-only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .errors import ModelParseError, ModelValidationError, UnknownElementError


class Kind(str, Enum):
    LOCATION = "location"
    ACTOR = "actor"
    OBJECT = "object"


class Space(str, Enum):
    PHYSICAL = "physical"
    DIGITAL = "digital"


class EdgeKind(str, Enum):
    LOC_LOC = "loc-loc"
    ACTOR_AT = "actor-at"
    OBJECT_AT = "object-at"
    OBJECT_HELD_BY = "object-held-by"
    OBJECT_INSIDE = "object-inside"


# Expected (source kind, target kind) per edge kind.
_EDGE_SIGNATURES: dict[EdgeKind, tuple[Kind, Kind]] = {
    EdgeKind.LOC_LOC: (Kind.LOCATION, Kind.LOCATION),
    EdgeKind.ACTOR_AT: (Kind.ACTOR, Kind.LOCATION),
    EdgeKind.OBJECT_AT: (Kind.OBJECT, Kind.LOCATION),
    EdgeKind.OBJECT_HELD_BY: (Kind.OBJECT, Kind.ACTOR),
    EdgeKind.OBJECT_INSIDE: (Kind.OBJECT, Kind.OBJECT),
}

# Placement kinds where both endpoints must live in the same space.
_SAME_SPACE_KINDS = {
    EdgeKind.ACTOR_AT,
    EdgeKind.OBJECT_AT,
    EdgeKind.OBJECT_HELD_BY,
    EdgeKind.OBJECT_INSIDE,
}


@dataclass(frozen=True)
class Element:
    id: str
    kind: Kind
    space: Space
    label: str = ""


@dataclass(frozen=True, order=True)
class Edge:
    kind: EdgeKind
    source: str
    target: str


@dataclass(frozen=True)
class AccessConfig:
    """One access-control configuration: who may pass, from where, enforced by what."""

    credentials: frozenset[str]
    at_location: str
    enforcement: str

    def sort_key(self) -> tuple:
        return (tuple(sorted(self.credentials)), self.enforcement)


@dataclass(frozen=True)
class LocalPolicy:
    guarded: str
    configs: tuple[AccessConfig, ...] = ()


@dataclass(frozen=True)
class Perimeter:
    id: str
    locations: frozenset[str]


_EMPTY_POLICY_CACHE: dict[str, LocalPolicy] = {}


@dataclass(frozen=True)
class Model:
    """Validated, immutable socio-technical model."""

    elements: dict[str, Element]
    edges: frozenset[Edge]
    policies: dict[str, LocalPolicy]
    perimeters: dict[str, Perimeter]
    # Adjacency of outgoing edges, precomputed for loc() lookups.
    _out: dict[str, tuple[str, ...]] = field(repr=False, default_factory=dict)

    def element(self, element_id: str) -> Element:
        try:
            return self.elements[element_id]
        except KeyError:
            raise UnknownElementError(f"unknown element id: {element_id!r}") from None

    def ids_of_kind(self, kind: Kind) -> list[str]:
        return sorted(e.id for e in self.elements.values() if e.kind == kind)

    @property
    def actors(self) -> list[str]:
        return self.ids_of_kind(Kind.ACTOR)

    @property
    def objects(self) -> list[str]:
        return self.ids_of_kind(Kind.OBJECT)

    @property
    def locations(self) -> list[str]:
        return self.ids_of_kind(Kind.LOCATION)


def loc(model: Model, n: str) -> set[str]:
    """Adjacent elements access to ``n`` goes through: ``{ l | (n, l) in E }``."""
    model.element(n)
    return set(model._out.get(n, ()))


def local_policy(model: Model, n: str) -> LocalPolicy:
    """The policy guarding ``n``; empty configs when the element is unguarded."""
    model.element(n)
    return model.policies.get(n, LocalPolicy(guarded=n))


def configs_at(model: Model, n: str, at_location: str) -> list[AccessConfig]:
    """Configurations of the policy on ``n`` granting access from ``at_location``,
    in the canonical (credentials, enforcement) order used everywhere for
    deterministic output."""
    policy = local_policy(model, n)
    found = [c for c in policy.configs if c.at_location == at_location]
    found.sort(key=AccessConfig.sort_key)
    return found


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOP_LEVEL_KEYS = {"elements", "edges", "policies", "perimeters"}


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ModelParseError(f"unknown field(s) {sorted(unknown)} in {where}")
    missing = required - set(obj)
    if missing:
        raise ModelParseError(f"missing field(s) {sorted(missing)} in {where}")


def _parse_enum(enum_cls, value, where: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ModelParseError(f"{where}: expected one of [{allowed}], got {value!r}") from None


def load_model(text: str) -> Model:
    """Parse and validate a model document.

    The location-location relation is closed under symmetry: declaring one
    direction suffices.  Raises :class:`ModelParseError` on malformed input
    and :class:`ModelValidationError` with the full list of violations on an
    invalid model.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelParseError("model document must be a JSON object")
    _require_keys(doc, _TOP_LEVEL_KEYS, set(), "model document")

    elements: dict[str, Element] = {}
    violations: list[str] = []

    for raw in _expect_list(doc, "elements"):
        _require_keys(raw, {"id", "kind", "space", "label"}, {"id", "kind", "space"}, "element")
        eid = raw["id"]
        if not isinstance(eid, str) or not eid:
            raise ModelParseError("element id must be a non-empty string")
        if eid in elements:
            violations.append(f"duplicate element id {eid!r}")
            continue
        elements[eid] = Element(
            id=eid,
            kind=_parse_enum(Kind, raw["kind"], f"element {eid!r} kind"),
            space=_parse_enum(Space, raw["space"], f"element {eid!r} space"),
            label=raw.get("label", ""),
        )

    edges: set[Edge] = set()
    for raw in _expect_list(doc, "edges"):
        _require_keys(raw, {"kind", "source", "target"}, {"kind", "source", "target"}, "edge")
        edges.add(Edge(
            kind=_parse_enum(EdgeKind, raw["kind"], "edge kind"),
            source=raw["source"],
            target=raw["target"],
        ))
    # Symmetric closure for location adjacency.
    for edge in list(edges):
        if edge.kind == EdgeKind.LOC_LOC:
            edges.add(Edge(EdgeKind.LOC_LOC, edge.target, edge.source))

    policies: dict[str, LocalPolicy] = {}
    for raw in _expect_list(doc, "policies"):
        _require_keys(raw, {"guarded", "configs"}, {"guarded", "configs"}, "policy")
        guarded = raw["guarded"]
        if guarded in policies:
            violations.append(f"duplicate policy for element {guarded!r}")
            continue
        configs = []
        for rc in raw["configs"]:
            _require_keys(
                rc,
                {"credentials", "atLocation", "enforcementMechanism"},
                {"credentials", "atLocation"},
                f"policy config of {guarded!r}",
            )
            at_location = rc["atLocation"]
            configs.append(AccessConfig(
                credentials=frozenset(rc["credentials"]),
                at_location=at_location,
                # An EM-less declaration means the mechanism sits right at
                # the spot access is granted from (a lock at the door).
                enforcement=rc.get("enforcementMechanism", at_location),
            ))
        if configs:
            # Canonical config order makes models structurally comparable
            # regardless of declaration order.
            configs.sort(key=AccessConfig.sort_key)
            policies[guarded] = LocalPolicy(guarded=guarded, configs=tuple(configs))
        # A policy with no configs is no policy at all; drop it here so the
        # rest of the toolkit never sees the degenerate form.

    perimeters: dict[str, Perimeter] = {}
    for raw in _expect_list(doc, "perimeters"):
        _require_keys(raw, {"id", "locations"}, {"id", "locations"}, "perimeter")
        pid = raw["id"]
        if pid in perimeters:
            violations.append(f"duplicate perimeter id {pid!r}")
            continue
        perimeters[pid] = Perimeter(id=pid, locations=frozenset(raw["locations"]))

    violations.extend(_validate(elements, edges, policies, perimeters))
    if violations:
        raise ModelValidationError(violations)

    out: dict[str, list[str]] = {}
    for edge in edges:
        out.setdefault(edge.source, []).append(edge.target)
    return Model(
        elements=elements,
        edges=frozenset(edges),
        policies=policies,
        perimeters=perimeters,
        _out={src: tuple(sorted(set(targets))) for src, targets in out.items()},
    )


def _expect_list(doc: dict, key: str) -> list:
    value = doc.get(key, [])
    if not isinstance(value, list):
        raise ModelParseError(f"{key!r} must be an array")
    return value


def _validate(elements, edges, policies, perimeters) -> list[str]:
    violations: list[str] = []

    def kind_of(eid: str) -> Kind | None:
        el = elements.get(eid)
        return el.kind if el else None

    pair_kinds: dict[tuple[str, str], set[EdgeKind]] = {}
    for edge in edges:
        pair_kinds.setdefault((edge.source, edge.target), set()).add(edge.kind)
        src, tgt = elements.get(edge.source), elements.get(edge.target)
        if src is None:
            violations.append(f"edge {edge.kind.value} references unknown source {edge.source!r}")
        if tgt is None:
            violations.append(f"edge {edge.kind.value} references unknown target {edge.target!r}")
        if src is None or tgt is None:
            continue
        want_src, want_tgt = _EDGE_SIGNATURES[edge.kind]
        if src.kind != want_src or tgt.kind != want_tgt:
            violations.append(
                f"edge-kind mismatch: {edge.kind.value} cannot connect "
                f"{src.kind.value} {src.id!r} to {tgt.kind.value} {tgt.id!r}"
            )
            continue
        if edge.kind in _SAME_SPACE_KINDS and src.space != tgt.space:
            violations.append(
                f"cross-space placement: {src.space.value} {src.id!r} cannot be "
                f"placed at/held by {tgt.space.value} {tgt.id!r}"
            )
    for (source, target), kinds in sorted(pair_kinds.items()):
        if len(kinds) > 1:
            violations.append(
                f"edge pair ({source!r}, {target!r}) appears under multiple kinds: "
                f"{sorted(k.value for k in kinds)}"
            )

    edge_pairs = {(e.source, e.target) for e in edges}
    for guarded, policy in sorted(policies.items()):
        if guarded not in elements:
            violations.append(f"policy guards unknown element {guarded!r}")
            continue
        for config in policy.configs:
            if config.at_location not in elements:
                violations.append(
                    f"policy on {guarded!r}: unknown atLocation {config.at_location!r}"
                )
            elif (guarded, config.at_location) not in edge_pairs:
                violations.append(
                    f"policy on {guarded!r}: atLocation {config.at_location!r} "
                    f"is not adjacent to the guarded element"
                )
            if config.enforcement not in elements:
                violations.append(
                    f"policy on {guarded!r}: unknown enforcement mechanism "
                    f"{config.enforcement!r}"
                )
            for cred in sorted(config.credentials):
                if cred not in elements:
                    violations.append(f"policy on {guarded!r}: unknown credential {cred!r}")
                elif kind_of(cred) != Kind.OBJECT:
                    violations.append(
                        f"policy on {guarded!r}: credential {cred!r} is not an object"
                    )

    for pid, perimeter in sorted(perimeters.items()):
        for lid in sorted(perimeter.locations):
            if lid not in elements:
                violations.append(f"perimeter {pid!r} references unknown element {lid!r}")
            elif kind_of(lid) != Kind.LOCATION:
                violations.append(f"perimeter {pid!r} member {lid!r} is not a location")

    return violations


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def model_to_doc(model: Model) -> dict:
    """Canonical document form of a model (sorted, symmetric edges included)."""
    return {
        "elements": [
            {"id": e.id, "kind": e.kind.value, "space": e.space.value, "label": e.label}
            for e in sorted(model.elements.values(), key=lambda e: e.id)
        ],
        "edges": [
            {"kind": e.kind.value, "source": e.source, "target": e.target}
            for e in sorted(model.edges)
        ],
        "policies": [
            {
                "guarded": p.guarded,
                "configs": [
                    {
                        "credentials": sorted(c.credentials),
                        "atLocation": c.at_location,
                        "enforcementMechanism": c.enforcement,
                    }
                    for c in sorted(p.configs, key=AccessConfig.sort_key)
                ],
            }
            for p in sorted(model.policies.values(), key=lambda p: p.guarded)
        ],
        "perimeters": [
            {"id": p.id, "locations": sorted(p.locations)}
            for p in sorted(model.perimeters.values(), key=lambda p: p.id)
        ],
    }


def serialize(model: Model) -> str:
    return json.dumps(model_to_doc(model), indent=2, sort_keys=True)
