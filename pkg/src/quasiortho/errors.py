"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a structural invariant (norms, rank, ranges, file schema)."""


class GenerationError(RuntimeError):
    """A randomized generator gave up before finding a valid draw."""


class NearDependenceError(ValidationError):
    """QR factorization found a diagonal entry too small to divide by."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"r[{index},{index}] = {value:.3e} is below the near-dependence threshold")


class BudgetError(ValueError):
    """Monte Carlo sample budget is infeasible under the configured cap."""
