"""Finite-blocklength analysis of MIMO channels modelled as truncated Haar unitaries."""

__version__ = "0.1.0"

from .bounds import (
    BoundEvaluation,
    DispersionComponents,
    dispersion_components,
    error_probability_bounds,
    gallager_comparison,
    high_snr_asymptotes,
    outage_probability,
    rayleigh_bounds,
    rayleigh_dispersion,
    std_normal_cdf,
    std_normal_quantile,
)
from .errors import (
    ConfigError,
    DegenerateError,
    DimensionError,
    DomainError,
    JacobiFBLError,
    NumericalError,
    RegimeError,
    SweepFailure,
)
from .spectral import (
    Branch,
    ChannelDims,
    SpectralSolution,
    capacity_approx,
    delta_derivative,
    edge_support,
    make_dims,
    normalized_noise_power,
    rayleigh_capacity,
    rayleigh_limit_delta,
    snr_db_to_noise_power,
    solve_delta,
    solve_general_resolvent,
    second_order_resolvent,
)
