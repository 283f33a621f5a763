"""Spectral toolkit for Robin Laplacians on non-isotropic peak domains."""

try:
    # wheel layout: the extension lives inside the package
    from ._peakspec import (  # noqa: F401
        bracket_constant,
        eigenfunction,
        ground_energy_correction,
        interval_eigenvalue,
        metric_matrix,
        model_eigenvalues,
        peak_eigenvalues,
        reference_model_eigenvalues,
        sweep_records,
    )
except ImportError:  # build-tree layout: top-level module on sys.path
    from _peakspec import (  # noqa: F401
        bracket_constant,
        eigenfunction,
        ground_energy_correction,
        interval_eigenvalue,
        metric_matrix,
        model_eigenvalues,
        peak_eigenvalues,
        reference_model_eigenvalues,
        sweep_records,
    )

__all__ = [
    "bracket_constant",
    "eigenfunction",
    "ground_energy_correction",
    "interval_eigenvalue",
    "metric_matrix",
    "model_eigenvalues",
    "peak_eigenvalues",
    "reference_model_eigenvalues",
    "sweep_records",
]
