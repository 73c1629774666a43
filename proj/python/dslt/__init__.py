"""Derivatives of self-intersection local time of fractional Brownian motion."""

from ._core import (
    __version__,
    chaos_coeff_norm_sq,
    classify_region,
    cov_triple,
    covariance_rh,
    d12_series,
    finiteness_probe,
    gauss_2f1,
    gaussian_density_deriv,
    kernel_inner_product,
    mean_alpha,
    mean_slt,
    run_mc,
    simulate_paths,
    threshold,
    variance_series,
)

__all__ = [
    "chaos_coeff_norm_sq",
    "classify_region",
    "cov_triple",
    "covariance_rh",
    "d12_series",
    "finiteness_probe",
    "gauss_2f1",
    "gaussian_density_deriv",
    "kernel_inner_product",
    "mean_alpha",
    "mean_slt",
    "run_mc",
    "simulate_paths",
    "threshold",
    "variance_series",
]
