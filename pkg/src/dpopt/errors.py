"""Exception taxonomy shared across the package."""


class DpoptError(Exception):
    """Base class for all library errors."""


class InputError(DpoptError):
    """Malformed or mismatched input (labels, dimensions, parse failures)."""


class SizeError(DpoptError):
    """Enumeration would exceed the configured cap."""


class PreconditionError(DpoptError):
    """A documented operation precondition does not hold."""


class ConstructionError(DpoptError):
    """A mechanism construction is invalid.

    Carries the offending graph edge when one exists.
    """

    def __init__(self, message: str, edge=None):
        super().__init__(message)
        self.edge = edge


class InconsistencyError(DpoptError):
    """Caller-supplied facts contradict exact recomputation."""


class UnknownScenarioError(DpoptError):
    """Requested reproduction scenario is not registered."""
