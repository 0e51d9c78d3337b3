"""Model loading, validation, and the location/policy lookups."""

from __future__ import annotations

import json

import pytest

from conftest import locker_doc
from generators import corpus_seeds, random_model, random_model_doc
from stadt.errors import ModelParseError, ModelValidationError, UnknownElementError
from stadt.model import (
    EdgeKind,
    Kind,
    load_model,
    loc,
    local_policy,
    model_to_doc,
    serialize,
)


def test_locker_counts(locker):
    assert len(locker.elements) == 7
    assert locker.actors == ["A", "M"]
    assert locker.objects == ["D", "K", "L"]
    assert locker.locations == ["corridor", "office"]
    assert len(locker.policies) == 1


def test_empty_document_is_valid():
    model = load_model("{}")
    assert model.elements == {}
    assert model.edges == frozenset()


def test_loc_examples(locker):
    assert loc(locker, "L") == {"office"}
    assert loc(locker, "K") == {"M"}
    assert loc(locker, "D") == {"L"}


def test_loc_symmetric_locations(locker):
    # One declared direction, both present after closure.
    assert loc(locker, "corridor") == {"office"}
    assert loc(locker, "office") == {"corridor"}


def test_loc_isolated_element():
    model = load_model(json.dumps({
        "elements": [{"id": "x", "kind": "object", "space": "physical", "label": ""}],
    }))
    assert loc(model, "x") == set()


def test_loc_unknown_element(locker):
    with pytest.raises(UnknownElementError):
        loc(locker, "nope")


def test_local_policy_locker(locker):
    policy = local_policy(locker, "L")
    assert len(policy.configs) == 1
    config = policy.configs[0]
    assert config.credentials == frozenset({"K"})
    assert config.at_location == "office"
    assert config.enforcement == "L"


def test_local_policy_unguarded(locker):
    assert local_policy(locker, "office").configs == ()


def test_policy_two_configs_same_location(two_config_model):
    configs = local_policy(two_config_model, "vault").configs
    assert len(configs) == 2
    assert {c.at_location for c in configs} == {"lobby"}
    assert {frozenset(c.credentials) for c in configs} == {
        frozenset({"badge"}), frozenset({"pass"})
    }


def test_empty_configs_normalized_away():
    doc = locker_doc()
    doc["policies"].append({"guarded": "office", "configs": []})
    model = load_model(json.dumps(doc))
    assert "office" not in model.policies
    assert local_policy(model, "office").configs == ()


def test_em_defaults_to_at_location():
    doc = locker_doc()
    doc["policies"][0]["configs"][0].pop("enforcementMechanism")
    model = load_model(json.dumps(doc))
    assert local_policy(model, "L").configs[0].enforcement == "office"


def test_cross_space_placement_rejected():
    doc = {
        "elements": [
            {"id": "file", "kind": "object", "space": "digital", "label": ""},
            {"id": "office", "kind": "location", "space": "physical", "label": ""},
        ],
        "edges": [{"kind": "object-at", "source": "file", "target": "office"}],
    }
    with pytest.raises(ModelValidationError) as excinfo:
        load_model(json.dumps(doc))
    assert any("cross-space placement" in v for v in excinfo.value.violations)


def test_edge_kind_mismatch_rejected():
    doc = {
        "elements": [
            {"id": "a", "kind": "actor", "space": "physical", "label": ""},
            {"id": "b", "kind": "actor", "space": "physical", "label": ""},
        ],
        "edges": [{"kind": "loc-loc", "source": "a", "target": "b"}],
    }
    with pytest.raises(ModelValidationError) as excinfo:
        load_model(json.dumps(doc))
    assert any("edge-kind mismatch" in v for v in excinfo.value.violations)


def test_dangling_reference_rejected():
    doc = {"edges": [{"kind": "loc-loc", "source": "x", "target": "y"}]}
    with pytest.raises(ModelValidationError) as excinfo:
        load_model(json.dumps(doc))
    assert any("unknown source" in v for v in excinfo.value.violations)


def test_duplicate_policy_rejected():
    doc = locker_doc()
    doc["policies"].append(doc["policies"][0])
    with pytest.raises(ModelValidationError) as excinfo:
        load_model(json.dumps(doc))
    assert any("duplicate policy" in v for v in excinfo.value.violations)


def test_policy_at_location_must_be_adjacent():
    doc = locker_doc()
    doc["policies"][0]["configs"][0]["atLocation"] = "corridor"
    with pytest.raises(ModelValidationError) as excinfo:
        load_model(json.dumps(doc))
    assert any("not adjacent" in v for v in excinfo.value.violations)


def test_credentials_must_be_objects():
    doc = locker_doc()
    doc["policies"][0]["configs"][0]["credentials"] = ["M"]
    with pytest.raises(ModelValidationError) as excinfo:
        load_model(json.dumps(doc))
    assert any("not an object" in v for v in excinfo.value.violations)


def test_unknown_fields_rejected():
    with pytest.raises(ModelParseError):
        load_model(json.dumps({"elements": [], "extra": 1}))
    doc = locker_doc()
    doc["elements"][0]["colour"] = "red"
    with pytest.raises(ModelParseError):
        load_model(json.dumps(doc))


def test_malformed_json_rejected():
    with pytest.raises(ModelParseError):
        load_model("{not json")


def test_multiple_placements_allowed():
    doc = locker_doc()
    doc["edges"].append({"kind": "object-at", "source": "L", "target": "corridor"})
    model = load_model(json.dumps(doc))
    assert loc(model, "L") == {"corridor", "office"}


def test_perimeter_members_must_be_locations():
    doc = locker_doc()
    doc["perimeters"][0]["locations"] = ["K"]
    with pytest.raises(ModelValidationError) as excinfo:
        load_model(json.dumps(doc))
    assert any("not a location" in v for v in excinfo.value.violations)


# -- properties over the random corpus ---------------------------------------

@pytest.mark.parametrize("seed", corpus_seeds(25))
def test_round_trip(seed):
    model = random_model(seed)
    again = load_model(serialize(model))
    assert model_to_doc(again) == model_to_doc(model)
    assert again.edges == model.edges
    assert again.policies == model.policies


@pytest.mark.parametrize("seed", corpus_seeds(25))
def test_loc_loc_symmetry_and_disjointness(seed):
    model = random_model(seed)
    pairs: dict[tuple[str, str], set[EdgeKind]] = {}
    for edge in model.edges:
        pairs.setdefault((edge.source, edge.target), set()).add(edge.kind)
        if edge.kind == EdgeKind.LOC_LOC:
            assert any(
                e.kind == EdgeKind.LOC_LOC and (e.source, e.target) == (edge.target, edge.source)
                for e in model.edges
            )
    for kinds in pairs.values():
        assert len(kinds) == 1


@pytest.mark.parametrize("seed", corpus_seeds(25))
def test_loc_members_are_edge_targets(seed):
    model = random_model(seed)
    edge_pairs = {(e.source, e.target) for e in model.edges}
    for n in model.elements:
        for l in loc(model, n):
            assert l in model.elements
            assert (n, l) in edge_pairs


def test_locker_round_trip(locker):
    assert model_to_doc(load_model(serialize(locker))) == model_to_doc(locker)
