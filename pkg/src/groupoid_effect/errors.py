"""Exception hierarchy shared by all modules."""


class GroupoidEffectError(Exception):
    """Base class for every error raised by this package."""


class InputError(GroupoidEffectError, ValueError):
    """Malformed input (dimension mismatch, bad parameter)."""


class NotWellDefinedError(GroupoidEffectError):
    """A linear map does not descend to the requested quotient spaces.

    ``residual`` is the norm of the part of the image that escapes the
    target longitudinal (or tangent) subspace.
    """

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = float(residual)


class CompositionError(GroupoidEffectError):
    """Two arrows are not composable within tolerance."""


class MalformedArrowError(GroupoidEffectError):
    """An arrow violates the fibered-product conditions of its groupoid."""


class ConfigurationError(GroupoidEffectError):
    """Inconsistent model or scenario configuration."""


class PreconditionError(GroupoidEffectError):
    """An operation was called outside its domain (e.g. non-isotropic arrow)."""


class ConsistencyError(GroupoidEffectError):
    """Internal invariant that should hold by construction failed numerically."""


class MalformedSkeletonError(GroupoidEffectError):
    """Skeleton data violates equivariance."""


class RejectedWitnessError(GroupoidEffectError):
    """A user-supplied witness (transformation, lift) is ill-typed."""
