"""Exception types shared across the package.

Fit failures that are *data*, not bugs (an uncomputable calibration score,
a degenerate outcome in a cross-validation fold), are represented by
:class:`mbbench.calibration.IciOutcome` rather than exceptions wherever a
caller is expected to keep going; the exception classes below are raised at
the point of failure and converted to reason codes by the evaluation layer.
"""


class MbbenchError(Exception):
    """Base class for all package-specific errors."""


class CycleFound(MbbenchError):
    """The directed edge relation admits no topological order.

    ``cycle`` lists node indices along one directed cycle, in order.
    """

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"graph contains a directed cycle: {self.cycle}")


class IndexOutOfRange(MbbenchError, IndexError):
    """A node index does not exist in the graph."""


class OverlappingArguments(MbbenchError, ValueError):
    """Endpoint nodes of a d-separation query overlap each other or the
    conditioning set."""


class UnknownNode(MbbenchError, KeyError):
    """A node name does not appear in the graph."""


class InvalidProbability(MbbenchError, ValueError):
    """A probability parameter lies outside its legal range."""


class NotExogenous(MbbenchError, ValueError):
    """An exogenous-only edit was requested on a node with parents."""


class DegenerateOutcome(MbbenchError):
    """The outcome vector is constant, so no non-trivial model exists."""


class FoldDegenerate(MbbenchError):
    """A cross-validation training fold contains a single outcome class."""


class ColumnMismatch(MbbenchError, ValueError):
    """Prediction input columns do not match the columns used at fit time."""


class LengthMismatch(MbbenchError, ValueError):
    """Paired vectors have different lengths."""


class SmootherSingular(MbbenchError):
    """The locally weighted design matrix is rank deficient."""


class ConstantPredictions(MbbenchError):
    """Predicted risks are (numerically) constant; no calibration curve
    can be estimated."""


class DegenerateMixture(MbbenchError, ValueError):
    """A two-node mixture puts zero mass on one effect stratum."""


class InvalidK(MbbenchError, ValueError):
    """Fold count outside 2..n."""


class EmptyInput(MbbenchError, ValueError):
    """An aggregation was asked for zero rows."""
