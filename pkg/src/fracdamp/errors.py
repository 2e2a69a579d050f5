"""Exception types shared across the package."""


class NumericalGuardError(RuntimeError):
    """A numerical guard tripped: non-finite values or an ill-conditioned solve."""


class SingularOperatorError(NumericalGuardError):
    """The operator is numerically singular; carries the condition estimate."""

    def __init__(self, msg, condition=float("inf")):
        super().__init__(msg)
        self.condition = condition


class UnderResolvedError(ValueError):
    """The grid does not resolve the resonant shell for the requested parameter."""
