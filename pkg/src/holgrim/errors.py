"""Exception types shared across the package."""


class HolgrimError(Exception):
    """Base class for all package errors."""


class ParameterRangeError(HolgrimError, ValueError):
    """A size or count parameter is outside its guarded range."""


class OrderRangeError(HolgrimError, ValueError):
    """A jet order or level exceeds the jet's ``k``."""


class IncompatibleError(HolgrimError, ValueError):
    """Objects that must share a domain, regularity or shape do not."""


class EmptySetError(HolgrimError, ValueError):
    """An argmax or max was requested over an empty functional set."""


class BudgetError(HolgrimError, ValueError):
    """A point budget asks for more points than remain available."""


class ValidationError(HolgrimError, ValueError):
    """A problem, config or file violates a named invariant.

    ``check`` names the violated invariant so harnesses can match on it.
    """

    def __init__(self, check: str, message: str):
        super().__init__(f"[{check}] {message}")
        self.check = check


class UnsupportedError(HolgrimError, TypeError):
    """The operation needs data the object does not carry."""
