"""Exception types for numerical failures.

Column and clique indices reported by these errors are 1-based, matching
the row/column numbering of the input data file.
"""


class BandcholError(Exception):
    """Base class for numerical failures raised by this package."""


class SingularMatrix(BandcholError):
    """A matrix required to be positive definite was not."""


class SingularDesign(BandcholError):
    """The regressor Gram matrix of one column was not invertible."""

    def __init__(self, column, detail=""):
        self.column = int(column)
        msg = f"singular regressor Gram matrix at column {self.column}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DegenerateResidual(BandcholError):
    """A residual variance collapsed to (numerical) zero."""

    def __init__(self, column, value=0.0):
        self.column = int(column)
        super().__init__(
            f"residual variance at column {self.column} is {value:.3e}; "
            "posterior is degenerate"
        )


class TruncationMassZero(BandcholError):
    """The truncated inverse-gamma posterior carries no mass below the cap."""

    def __init__(self, column, cap):
        self.column = int(column)
        super().__init__(
            f"posterior mass of d_{self.column} on (0, {cap:g}] underflows to zero"
        )


class NonFiniteLogPosterior(BandcholError):
    """A bandwidth log posterior evaluated to NaN or infinity."""

    def __init__(self, k, value):
        self.k = int(k)
        super().__init__(f"log posterior at bandwidth {self.k} is {value}")


class SingularClique(BandcholError):
    """A clique block of the sample covariance was not invertible."""

    def __init__(self, clique):
        self.clique = int(clique)
        super().__init__(
            f"sample covariance block of clique {self.clique} is singular"
        )


class EmptyGrid(BandcholError):
    """A bandwidth search grid contained no candidate values."""


class ExperimentFailed(BandcholError):
    """Too many replications of an experiment raised numerical errors."""
