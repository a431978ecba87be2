"""Semantic exception hierarchy shared across the package."""


class CfqError(Exception):
    """Base class for all package errors."""


class InputError(CfqError):
    """Malformed or unknown input (ids, domains, flags)."""


class ValidationError(CfqError):
    """A value violates a structural invariant (non-Hermitian state, bad table)."""


class CausalViolationError(CfqError):
    """A strategy rule reads an event that does not precede its setting."""


class ConditioningError(CfqError):
    """Conditioning on zero-probability evidence."""


class QueryError(CfqError):
    """Counterfactual query is inconsistent with the scenario structure."""


class OstensibleSupportError(CfqError):
    """A record is impossible under the ostensible measure (click where rate is 0)."""


class DegenerateEnsembleError(CfqError):
    """All resampling weights are zero."""


class UnsupportedRegimeError(CfqError):
    """Parameters outside the regime a closed form assumes (e.g. overdamped drive)."""
