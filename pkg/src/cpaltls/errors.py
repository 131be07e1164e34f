"""Exception and warning types raised across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes or an index is out of range."""


class DegenerateComponentError(ArithmeticError):
    """A factor column collapsed to zero, so its component cannot be normalized.

    Attributes
    ----------
    column : int
        Index of the offending column.
    mode : int or None
        Mode whose factor matrix held the column, when known.
    iteration : int or None
        Solver iteration at which the collapse happened, when known.
    """

    def __init__(self, column, mode=None, iteration=None):
        self.column = column
        self.mode = mode
        self.iteration = iteration
        parts = [f"component {column} has zero norm"]
        if mode is not None:
            parts.append(f"mode {mode}")
        if iteration is not None:
            parts.append(f"iteration {iteration}")
        super().__init__(", ".join(parts) + " (rank collapse)")


class DegenerateInputError(ValueError):
    """A quantity is undefined for the given input (zero vector, zero weight)."""


class InsufficientDataError(ValueError):
    """Too few usable points to fit a convergence order."""


class PreconditionError(ValueError):
    """Input violates a documented precondition (e.g. unnormalized columns)."""


class ParseError(ValueError):
    """A tensor or model file is malformed.

    ``line`` and ``column`` are 1-based; ``column`` counts whitespace-separated
    fields on that line.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class RankDeficiencyWarning(RuntimeWarning):
    """A matrix was numerically rank deficient and null directions were dropped."""
