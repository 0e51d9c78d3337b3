"""stadt: socio-technical attack-defence trees.

Load a graph model of locations, actors, and objects; generate per-asset
attack-defence bundles; synthesize and evaluate attack-defence trees for a
chosen attacker; attach preventive, detective, and corrective controls at the
designated slots; and compute attributes such as attacker cost under Table-2
style relevance filtering.
"""

from .attributes import ATTRIBUTE_DOMAINS, evaluate_attribute, relevant_controls, what_if
from .bundle import Bundle, build_bundle, bundle_leaves
from .defences import (
    Category,
    Catalog,
    Control,
    Implementation,
    PlacementSlot,
    SlotKind,
    load_catalog,
    placement_slots,
    suggest_controls,
)
from .errors import (
    DomainRuleError,
    EvaluationError,
    ModelParseError,
    ModelValidationError,
    StadtError,
    UnknownElementError,
)
from .model import Model, load_model, loc, local_policy, serialize
from .session import Session
from .state import State, accessible, bootstrap, compute_granted, init_reachable
from .synthesis import (
    AdTree,
    EvalTrace,
    evaluate_propositional,
    fixpoint_evaluate,
    run_fixpoint,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "ATTRIBUTE_DOMAINS",
    "AdTree",
    "Bundle",
    "Catalog",
    "Category",
    "Control",
    "DomainRuleError",
    "EvalTrace",
    "EvaluationError",
    "Implementation",
    "Model",
    "ModelParseError",
    "ModelValidationError",
    "PlacementSlot",
    "Session",
    "SlotKind",
    "StadtError",
    "State",
    "UnknownElementError",
    "accessible",
    "bootstrap",
    "build_bundle",
    "bundle_leaves",
    "compute_granted",
    "evaluate_attribute",
    "evaluate_propositional",
    "fixpoint_evaluate",
    "init_reachable",
    "load_catalog",
    "load_model",
    "loc",
    "local_policy",
    "placement_slots",
    "relevant_controls",
    "run_fixpoint",
    "serialize",
    "suggest_controls",
    "synthesize",
    "what_if",
]
