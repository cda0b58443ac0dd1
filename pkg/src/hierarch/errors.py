"""Exception types shared across the package.

Everything a caller can trigger with bad input derives from ``DomainError``;
the CLI maps that family to exit code 1.
"""


class DomainError(ValueError):
    """Input outside the domain an operation is defined on."""


class MalformedMachine(DomainError):
    pass


class CapExceeded(DomainError):
    pass


class OracleIncomplete(DomainError):
    def __init__(self, query):
        super().__init__(f"oracle table has no answer for query {query!r}")
        self.query = query


class Unsupported(DomainError):
    pass


class NotQuantified(DomainError):
    pass


class ShapeError(DomainError):
    pass


class KernelTimeout(DomainError):
    """A kernel evaluation ran past its step budget.

    ``point`` is the variable assignment being evaluated; ``stage`` and
    ``marker`` are filled in when the timeout happens inside a marker run.
    """

    def __init__(self, point, budget, stage=None, marker=None):
        self.point = dict(point)
        self.budget = budget
        self.stage = stage
        self.marker = marker
        where = ""
        if stage is not None:
            where = f" (stage {stage}, marker {marker})"
        super().__init__(f"kernel exceeded budget {budget} at {self.point}{where}")


class UndeclaredKernel(DomainError):
    pass


class EmbeddingRequired(DomainError):
    pass


class InvalidPresentation(DomainError):
    pass
