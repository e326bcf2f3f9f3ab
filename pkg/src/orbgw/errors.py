class GeometryError(ValueError):
    """A target configuration failed validation."""


class SolverError(RuntimeError):
    pass


class UnsolvableError(SolverError):
    """No WDVV equation isolates the requested correlator."""


class CycleError(SolverError):
    """The recursion came back to a key that is still being solved."""


class CacheError(ValueError):
    """A persisted invariant table is malformed or inconsistent."""


class ConsistencyError(SolverError):
    """A recursion result disagrees with its independent closed form."""
