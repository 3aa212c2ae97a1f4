"""Exception types shared across the package."""


class BudgetExceeded(RuntimeError):
    """An enumeration or quadrature would exceed its configured budget."""


class ContractViolation(AssertionError):
    """A computed quantity failed a postcondition that the code asserts."""


class ConfigError(ValueError):
    """Malformed experiment configuration or input file."""


class ParameterError(ValueError):
    """Exponent parameters violate one of the required inequalities.

    ``inequality`` names the violated constraint.
    """

    def __init__(self, inequality: str, detail: str = ""):
        self.inequality = inequality
        super().__init__(f"violated: {inequality}" + (f" ({detail})" if detail else ""))
