"""Exception types.  Everything derives from :class:`BeliefStockError` so the
CLI can map domain failures to exit code 1."""


class BeliefStockError(Exception):
    pass


class ModelError(BeliefStockError, ValueError):
    """Malformed or inconsistent model description."""


class BeliefError(BeliefStockError, ValueError):
    """A vector that is not a probability distribution of the right size."""


class ImpossibleObservation(BeliefStockError):
    """Posterior requested for an observation of (near) zero probability."""


class LPError(BeliefStockError):
    """Simplex failure (pivot guard tripped)."""


class ResourceLimitError(BeliefStockError):
    """A vector set or tree grew beyond the configured cap."""


class AssumptionError(BeliefStockError):
    """An operation needs a structural assumption that the model violates."""
