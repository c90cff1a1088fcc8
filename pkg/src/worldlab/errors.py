"""Exception hierarchy shared across the package."""


class WorldlabError(Exception):
    """Base class for every error raised deliberately by this package."""


class DomainError(WorldlabError, ValueError):
    """An argument is outside the documented domain of an operation."""


class CapacityError(WorldlabError):
    """An exact enumeration would exceed its configured support budget."""


class DegeneracyError(WorldlabError):
    """A trajectory came too close to a corner or hole endpoint to classify."""


class RunawayError(DegeneracyError):
    """A trajectory exceeded the reflection budget without terminating."""


class GenerationError(WorldlabError):
    """Rejection sampling exhausted its attempt budget."""


class UnsolvableError(WorldlabError):
    """A puzzle instance admits no solution."""


class ConsistencyError(WorldlabError):
    """Inputs that must agree (views, manifests, traces) do not."""


class DecodeError(WorldlabError):
    """A raster image does not decode back to a well-formed symbolic state."""


class PreconditionError(WorldlabError):
    """A certificate hypothesis fails on the submitted instance."""


class ConfigurationError(WorldlabError, ValueError):
    """CLI or dataset configuration is invalid."""
