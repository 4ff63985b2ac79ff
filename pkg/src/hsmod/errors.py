"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands have incompatible matrix or cochain dimensions."""


class BranchCutError(ValueError):
    """Principal matrix logarithm requested at or too close to the branch cut.

    Carries the index of the offending cell when raised from a cochain
    operation (``where`` is an edge or face index, or None for a bare matrix).
    """

    def __init__(self, message: str, where=None):
        super().__init__(message)
        self.where = where


class InvalidMeshError(ValueError):
    """Mesh builder input is structurally invalid (sizes, indices)."""


class TopologyError(InvalidMeshError):
    """Cell data does not close up into an oriented surface."""


class NoComplexStructureError(InvalidMeshError):
    """No complex structure exists (odd number of edges)."""


class MeshFormatError(ValueError):
    """Mesh file could not be parsed; message carries line/position."""


class UnitCircleError(ValueError):
    """Parameter zeta lies (numerically) on the unit circle."""


class NonConvergenceError(RuntimeError):
    """Iterative solver exhausted its iteration budget.

    ``residual`` is the final residual norm.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class ReducibleReferenceError(RuntimeError):
    """Gauge-fixing reference has a stabiliser larger than the centre."""


class BasinError(RuntimeError):
    """Inputs are outside the guaranteed small-ball solution basin."""


class HypothesisError(RuntimeError):
    """A certificate hypothesis (e.g. irreducibility) is violated."""


class DegenerateInputError(ValueError):
    """Input collapses to zero after mandatory projections."""


class DegenerateGaugeError(RuntimeError):
    """Complex gauge data is too close to singular for polar decomposition."""
