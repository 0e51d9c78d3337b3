"""Shared fixtures: the locker model and its variants."""

from __future__ import annotations

import json

import pytest

from stadt.model import Model, load_model


def locker_doc() -> dict:
    """Desk-scale fixture: a sensitive document in a locked locker.

    corridor <-> office; attacker A in the corridor; manager M in the office
    holding key K; locker L in the office containing document D; the locker
    requires the key, checked at the office, enforced by the locker itself.
    """
    return {
        "elements": [
            {"id": "corridor", "kind": "location", "space": "physical", "label": "Corridor"},
            {"id": "office", "kind": "location", "space": "physical", "label": "Manager office"},
            {"id": "A", "kind": "actor", "space": "physical", "label": "Insider"},
            {"id": "M", "kind": "actor", "space": "physical", "label": "Manager"},
            {"id": "K", "kind": "object", "space": "physical", "label": "Locker key"},
            {"id": "L", "kind": "object", "space": "physical", "label": "Locker"},
            {"id": "D", "kind": "object", "space": "physical", "label": "Sensitive document"},
        ],
        "edges": [
            {"kind": "loc-loc", "source": "corridor", "target": "office"},
            {"kind": "actor-at", "source": "A", "target": "corridor"},
            {"kind": "actor-at", "source": "M", "target": "office"},
            {"kind": "object-held-by", "source": "K", "target": "M"},
            {"kind": "object-at", "source": "L", "target": "office"},
            {"kind": "object-inside", "source": "D", "target": "L"},
        ],
        "policies": [
            {
                "guarded": "L",
                "configs": [
                    {"credentials": ["K"], "atLocation": "office", "enforcementMechanism": "L"}
                ],
            }
        ],
        "perimeters": [
            {"id": "ground-floor", "locations": ["corridor", "office"]}
        ],
    }


@pytest.fixture
def locker() -> Model:
    return load_model(json.dumps(locker_doc()))


@pytest.fixture
def locker_without_key() -> Model:
    """The key exists but lies nowhere: the config can never be satisfied."""
    doc = locker_doc()
    doc["edges"] = [e for e in doc["edges"] if not (e["kind"] == "object-held-by" and e["source"] == "K")]
    return load_model(json.dumps(doc))


@pytest.fixture
def locker_extra_path() -> Model:
    """Locker additionally placed at the corridor, with no config at that approach."""
    doc = locker_doc()
    doc["edges"].append({"kind": "object-at", "source": "L", "target": "corridor"})
    return load_model(json.dumps(doc))


@pytest.fixture
def three_room_cycle() -> Model:
    doc = {
        "elements": [
            {"id": "r1", "kind": "location", "space": "physical", "label": ""},
            {"id": "r2", "kind": "location", "space": "physical", "label": ""},
            {"id": "r3", "kind": "location", "space": "physical", "label": ""},
            {"id": "a", "kind": "actor", "space": "physical", "label": ""},
            {"id": "o", "kind": "object", "space": "physical", "label": ""},
        ],
        "edges": [
            {"kind": "loc-loc", "source": "r1", "target": "r2"},
            {"kind": "loc-loc", "source": "r2", "target": "r3"},
            {"kind": "loc-loc", "source": "r3", "target": "r1"},
            {"kind": "actor-at", "source": "a", "target": "r1"},
            {"kind": "object-at", "source": "o", "target": "r3"},
        ],
        "policies": [],
        "perimeters": [],
    }
    return load_model(json.dumps(doc))


@pytest.fixture
def two_config_model() -> Model:
    """A vault guarded at one approach by two alternative configurations:
    a badge read by a reader, or an escort check by a guard."""
    doc = {
        "elements": [
            {"id": "lobby", "kind": "location", "space": "physical", "label": ""},
            {"id": "vault", "kind": "object", "space": "physical", "label": ""},
            {"id": "badge", "kind": "object", "space": "physical", "label": ""},
            {"id": "pass", "kind": "object", "space": "physical", "label": ""},
            {"id": "reader", "kind": "object", "space": "physical", "label": ""},
            {"id": "guard", "kind": "actor", "space": "physical", "label": ""},
            {"id": "eve", "kind": "actor", "space": "physical", "label": ""},
        ],
        "edges": [
            {"kind": "object-at", "source": "vault", "target": "lobby"},
            {"kind": "object-at", "source": "badge", "target": "lobby"},
            {"kind": "object-at", "source": "reader", "target": "lobby"},
            {"kind": "actor-at", "source": "guard", "target": "lobby"},
            {"kind": "actor-at", "source": "eve", "target": "lobby"},
            {"kind": "object-held-by", "source": "pass", "target": "guard"},
        ],
        "policies": [
            {
                "guarded": "vault",
                "configs": [
                    {"credentials": ["badge"], "atLocation": "lobby", "enforcementMechanism": "reader"},
                    {"credentials": ["pass"], "atLocation": "lobby", "enforcementMechanism": "guard"},
                ],
            }
        ],
        "perimeters": [],
    }
    return load_model(json.dumps(doc))
