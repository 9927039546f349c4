"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NonConvergenceError(RuntimeError):
    """A panel quadrature exhausted its refinement budget.

    Carries the best value obtained so far and the tail estimate at the
    point refinement stopped.
    """

    def __init__(self, message, value=None, estimate=None):
        super().__init__(message)
        self.value = value
        self.estimate = estimate


class InstabilityError(RuntimeError):
    """A time step pushed the state outside the characteristic-function class."""


class CharacteristicViolation(AssertionError):
    """A sampled pair violated one of the characteristic-function inequalities."""

    def __init__(self, message, xi=None, eta=None, margin=None):
        super().__init__(message)
        self.xi = xi
        self.eta = eta
        self.margin = margin
