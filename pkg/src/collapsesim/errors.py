"""Exception hierarchy shared by every module."""


class CollapseSimError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class ShapeError(CollapseSimError, ValueError):
    pass


class SizeError(CollapseSimError, ValueError):
    """A dimension or configuration count exceeds the configured cap."""


class ValidationError(CollapseSimError, ValueError):
    """An input violates a documented invariant (hermiticity, idempotence, ...)."""


class DegenerateStateError(CollapseSimError, ValueError):
    """The state has non-positive trace or norm, so no probability is defined."""


class InapplicableError(CollapseSimError):
    """The question asked is ill-posed for the given input."""
