"""Exception hierarchy shared by the numerical libraries, the CLI and the HTTP layer.

Errors split into two families: :class:`ConfigError` for bad parameters or inputs the
caller can fix, and :class:`NumericalError` for failures that happen while computing.
The CLI maps the first family to exit code 2 and the second to exit code 3.
"""


class TraceKitError(Exception):
    pass


class ConfigError(TraceKitError, ValueError):
    """Invalid parameter, domain violation or unusable configuration."""


class DimensionError(ConfigError):
    """Shapes of operators, blocks or bases do not fit together."""


class NumericalError(TraceKitError, ArithmeticError):
    """A computation failed on otherwise valid input."""


class SolverError(NumericalError):
    def __init__(self, message: str, *, residual: float, iterations: int):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class NotPositiveDefiniteError(NumericalError):
    def __init__(self, message: str, *, pivot: int):
        super().__init__(f"{message} (failed at pivot {pivot})")
        self.pivot = pivot


class RankDeficiencyError(NumericalError):
    def __init__(self, message: str, *, condition: float):
        super().__init__(f"{message} (condition number {condition:.3e})")
        self.condition = condition


class LanczosDomainError(NumericalError):
    def __init__(self, message: str, *, value: float):
        super().__init__(f"{message}: {value!r}")
        self.value = value


class DegenerateBlockError(NumericalError):
    """Every probe column of a range-finder block fell inside the current basis.

    The operator is numerically low rank and the accumulated trace of the projection is
    already exact; callers stop the low-rank phase instead of failing.
    """
