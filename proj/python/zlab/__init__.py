"""Python bindings for the zlab library."""

from ._zlab import (
    ConvergenceError,
    InputError,
    ResourceError,
    build_ladder,
    census,
    cf_value,
    continuant,
    dirichlet_decompose,
    hausdorff_dimension,
    missing_denominators,
    parseval_check,
    proportion_table,
    run_cli,
    separation_check,
    split_K,
    transfer_eigenvalue,
    trig_sum,
    word_matrix,
)

__all__ = [
    "ConvergenceError",
    "InputError",
    "ResourceError",
    "build_ladder",
    "census",
    "cf_value",
    "continuant",
    "dirichlet_decompose",
    "hausdorff_dimension",
    "missing_denominators",
    "parseval_check",
    "proportion_table",
    "run_cli",
    "separation_check",
    "split_K",
    "transfer_eigenvalue",
    "trig_sum",
    "word_matrix",
]
