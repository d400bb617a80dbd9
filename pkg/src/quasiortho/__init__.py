"""Symbol error rate of quasi-orthogonal and quasi-biorthogonal signaling over AWGN."""

__version__ = "0.1.0"

from .codeset import (  # noqa: E402
    CodeSet,
    CorrelationMatrix,
    Mode,
    gram,
    load,
    make_circular_shift_pm1,
    make_equicorrelated,
    make_orthogonal,
    make_random_quasi,
    save,
)
from .errors import BudgetError, GenerationError, NearDependenceError, ValidationError  # noqa: E402
from .mc_ser import BudgetPolicy, SerEstimate, estimate_ser  # noqa: E402

__all__ = [
    "BudgetError", "BudgetPolicy", "CodeSet", "CorrelationMatrix", "GenerationError", "Mode",
    "NearDependenceError", "SerEstimate", "ValidationError", "estimate_ser", "gram", "load",
    "make_circular_shift_pm1", "make_equicorrelated", "make_orthogonal", "make_random_quasi", "save",
]
