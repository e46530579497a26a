"""Exception hierarchy shared across the library.

Input-shaped problems derive from :class:`InputError`; numerical failures
derive from :class:`NumericalError`.  The CLI maps the two branches to exit
codes 1 and 2 respectively.
"""

from __future__ import annotations


class PanelIfeError(Exception):
    """Base class for all library errors."""


class InputError(PanelIfeError):
    """Invalid or malformed user input (data files, configs)."""


class NumericalError(PanelIfeError):
    """Numerical failure during estimation."""


class UnbalancedPanelError(InputError):
    """A (unit, time) cell is missing from the panel."""

    def __init__(self, unit: str, time: str):
        self.unit = unit
        self.time = time
        super().__init__(f"unbalanced panel: missing observation for unit={unit!r}, time={time!r}")


class PanelParseError(InputError):
    """A cell could not be parsed as a number."""

    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"row {row}: {message}")


class DuplicateKeyError(InputError):
    """The same (unit, time) pair appears more than once."""

    def __init__(self, unit: str, time: str):
        self.unit = unit
        self.time = time
        super().__init__(f"duplicate observation for unit={unit!r}, time={time!r}")


class DegenerateCovariateError(InputError):
    """A covariate column is constant, so it cannot be rescaled for the basis."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"covariate {index} is constant; basis rescaling is degenerate")


class SingularDesignError(NumericalError):
    """The (residualized) design matrix is numerically rank deficient."""

    def __init__(self, message: str, null_direction=None):
        self.null_direction = null_direction
        super().__init__(message)


class InvalidFactorCountError(InputError):
    """Requested number of factors is out of the admissible range."""


class NotConvergedError(NumericalError):
    """An iterative fit did not converge and the result cannot be used."""


class TooManySingularDrawsError(NumericalError):
    """More than 5% of bootstrap draws produced a singular design."""


class RankDeficientBasisWarning(UserWarning):
    """Basis matrix cannot have full column rank (N < J)."""


class AmbiguousFactorSpaceWarning(UserWarning):
    """Eigenvalue tie at the retained/discarded factor boundary."""
