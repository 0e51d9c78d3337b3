"""Exception types shared across the toolkit.

Every domain error carries a short machine-readable ``code`` so that the CLI
and the HTTP service can map failures uniformly.
"""

from __future__ import annotations


class StadtError(Exception):
    """Base class for all toolkit errors."""

    code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ModelParseError(StadtError):
    """The model document is not well-formed (bad JSON, wrong shapes)."""

    code = "parse-error"


class ModelValidationError(StadtError):
    """The model document violates structural invariants."""

    code = "validation-error"

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class UnknownElementError(StadtError):
    code = "unknown-element"


class DomainRuleError(StadtError):
    """A legal request that violates a domain rule (slot mismatch, duplicate attach...)."""

    code = "domain-rule"


class EvaluationError(StadtError):
    """Attribute evaluation failed (missing leaf value, range violation)."""

    code = "evaluation-error"
