"""Exception hierarchy.

Every error carries enough context to locate the failing object (column,
group, replicate, row) and maps onto a CLI exit code.
"""


class SplitMspeError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 3


class ParameterError(SplitMspeError, ValueError):
    """An argument is outside its documented range."""

    exit_code = 2


class ConfigError(ParameterError):
    """A run configuration is malformed or inconsistent."""

    def __init__(self, message, key=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line


class NumericalError(SplitMspeError):
    """Base for failures of a numerical routine."""


class DegenerateColumnError(NumericalError):
    def __init__(self, column, second_moment):
        super().__init__(
            f"column {column} is constant (centered second moment {second_moment:.3g})"
        )
        self.column = column


class SingularityError(NumericalError):
    def __init__(self, rcond, what="Gram matrix"):
        super().__init__(f"{what} is singular or near-singular (rcond={rcond:.3g})")
        self.rcond = rcond


class SingularBlockError(SingularityError):
    def __init__(self, group, rcond):
        super().__init__(rcond, what=f"diagonal block of group {group}")
        self.group = group


class ConvergenceError(NumericalError):
    """An iterative solver hit its sweep limit."""

    def __init__(self, message, last_iterate=None, last_change=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.last_change = last_change


class RankError(NumericalError):
    pass


class DecompositionError(NumericalError):
    pass


class DegenerateSampleError(NumericalError):
    pass


class ReplicateError(NumericalError):
    """Wraps a failure inside one Monte Carlo replicate or leave-one-out refit."""

    def __init__(self, index, cause, kind="replicate"):
        super().__init__(f"{kind} {index}: {cause}")
        self.index = index
        self.cause = cause


class TooManySplitsError(SplitMspeError):
    exit_code = 4

    def __init__(self, count, cap):
        super().__init__(f"{count} splits exceed the enumeration cap of {cap}")
        self.count = count
        self.cap = cap
