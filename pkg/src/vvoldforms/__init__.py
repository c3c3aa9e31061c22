"""Exact arithmetic for discriminant forms, their Weil representations and
the up/down maps used to separate oldforms from newforms."""

__version__ = "0.1.0"

from .errors import FQMError, SizeBoundError, ValidationError
from .fqm import (
    FiniteQuadraticModule,
    JordanSymbol,
    Subgroup,
    direct_sum,
    from_even_lattice,
    from_jordan,
    isotropic_subgroups,
    quotient,
    subgroup,
)
from .lifts import build_lift_system, check_hypotheses, kernel_down, surjectivity_certificate
from .oldnew import CoeffTable, is_oldform, newspace_basis, oldspace_basis
from .weil import rho, rho_generator, sl2_word

__all__ = [
    "CoeffTable",
    "FQMError",
    "FiniteQuadraticModule",
    "JordanSymbol",
    "SizeBoundError",
    "Subgroup",
    "ValidationError",
    "build_lift_system",
    "check_hypotheses",
    "direct_sum",
    "from_even_lattice",
    "from_jordan",
    "is_oldform",
    "isotropic_subgroups",
    "kernel_down",
    "newspace_basis",
    "oldspace_basis",
    "quotient",
    "rho",
    "rho_generator",
    "sl2_word",
    "subgroup",
    "surjectivity_certificate",
]
