"""Python interface to the cofactor-lab core.

The heavy lifting lives in the compiled `_core` module; this package just
re-exports the public names.
"""

from ._core import (  # noqa: F401
    SpecError,
    ExprError,
    SystemSpec,
    cofactor,
    delta_coeffs,
    diff_expr,
    eigenfunctions,
    eval_expr,
    integral_values,
    integrate,
    jacobi_endomorphism,
    jbar,
    load_spec,
    load_spec_json,
    nijenhuis_norm,
    parse_expr,
    sckt_residual,
    separate,
    verify,
)

__all__ = [
    "SpecError",
    "ExprError",
    "SystemSpec",
    "cofactor",
    "delta_coeffs",
    "diff_expr",
    "eigenfunctions",
    "eval_expr",
    "integral_values",
    "integrate",
    "jacobi_endomorphism",
    "jbar",
    "load_spec",
    "load_spec_json",
    "nijenhuis_norm",
    "parse_expr",
    "sckt_residual",
    "separate",
    "verify",
]
