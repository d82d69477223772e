"""Linear recurrent unit toolkit."""

from ._core import (
    InvalidInput,
    LruLayer,
    NumericalError,
    conv_kernel_value,
    dft,
    gain_formula,
    gain_monte_carlo,
    run_cli,
    sample_ring,
    scan_equivalence_error,
    spectral_radius,
)

__all__ = [
    "InvalidInput",
    "LruLayer",
    "NumericalError",
    "conv_kernel_value",
    "dft",
    "gain_formula",
    "gain_monte_carlo",
    "run_cli",
    "sample_ring",
    "scan_equivalence_error",
    "spectral_radius",
]
