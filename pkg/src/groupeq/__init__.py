"""Solvability certificates and unitary witnesses for systems of equations over groups."""

__version__ = "0.1.0"

from .words import (
    Letter,
    Word,
    GroupRingElement,
    word,
    variable,
    constant,
    reduce,
    augment,
    exponent_sum,
    cyclic_reduce,
    max_root,
    fox_derivative,
    format_word,
)
from .presentation import (
    IntegerMatrix,
    SmithDecomposition,
    Presentation,
    exponent_matrix,
    smith_normal_form,
    is_d2_injective,
    transform,
)
from .coverings import (
    BudgetExceeded,
    CosetTable,
    LiftedSystem,
    todd_coxeter,
    low_index_subgroups,
    covering_d1,
    covering_d2,
    h2_trivial_covering,
    lift_system,
)
from .certify import (
    Certificate,
    CertifyOptions,
    certify,
    small_cancellation_check,
    verify_certificate,
)
from .unitary import (
    EquationSystem,
    SolveOptions,
    SolveResult,
    ProbeReport,
    haar_random,
    evaluate_word,
    residual,
    gradient,
    gradients,
    solve,
    surjectivity_probe,
    verify_wreath,
)

__all__ = [
    "Letter", "Word", "GroupRingElement", "word", "variable", "constant",
    "reduce", "augment", "exponent_sum", "cyclic_reduce", "max_root",
    "fox_derivative", "format_word",
    "IntegerMatrix", "SmithDecomposition", "Presentation", "exponent_matrix",
    "smith_normal_form", "is_d2_injective", "transform",
    "BudgetExceeded", "CosetTable", "LiftedSystem", "todd_coxeter",
    "low_index_subgroups", "covering_d1", "covering_d2",
    "h2_trivial_covering", "lift_system",
    "Certificate", "CertifyOptions", "certify", "small_cancellation_check",
    "verify_certificate",
    "EquationSystem", "SolveOptions", "SolveResult", "ProbeReport",
    "haar_random", "evaluate_word", "residual", "gradient", "gradients",
    "solve", "surjectivity_probe", "verify_wreath",
]
