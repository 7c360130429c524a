"""Exception hierarchy shared by the library and the command-line tool."""


class BlockClustError(Exception):
    """Base class for all errors raised by blockclust."""


class ConfigurationError(BlockClustError, ValueError):
    """Inconsistent or infeasible parameters (window sizes, grid shape, labels)."""


class InfeasibleConfigurationError(ConfigurationError):
    """Random block placement could not place the requested number of blocks."""

    def __init__(self, message, achieved=0):
        super().__init__(message)
        self.achieved = achieved


class DegenerateSpectrumError(BlockClustError, ArithmeticError):
    """The Gram matrix has no usable leading direction (e.g. it is all zeros)."""


class NoFeaturesSelectedError(BlockClustError, RuntimeError):
    """The CFA screen returned an empty block set, so there is nothing to cluster on."""


class UndefinedLossError(BlockClustError, ValueError):
    """A loss was requested for a configuration where it is not defined."""


class ParseError(BlockClustError, ValueError):
    """Malformed input file. ``row`` and ``col`` are 1-based when known."""

    def __init__(self, message, row=None, col=None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", col {col})" if col is not None else ")")
        super().__init__(message + loc)
        self.row = row
        self.col = col
