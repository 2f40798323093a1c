"""Exception types shared across the package."""


class BudgetExceeded(RuntimeError):
    """A dense allocation or enumeration would exceed the configured budget."""

    def __init__(self, what, needed, limit):
        super().__init__(f"{what}: needs {needed:,} but the budget is {limit:,}")
        self.what = what
        self.needed = needed
        self.limit = limit


class InvariantViolation(ValueError):
    """An input object breaks one of its declared invariants."""


class LabelError(KeyError):
    """Unknown, duplicated or overlapping register label."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UndefinedState(ArithmeticError):
    """Conditioning on a zero-probability event."""


class SupportViolation(ArithmeticError):
    """A matrix function is undefined on a nonzero eigenvalue."""
