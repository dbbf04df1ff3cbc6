"""Dispersion components, error-probability bounds and their limiting forms.

Every routine takes the linear noise power sigma^2. Rates are per transmit
antenna per channel use, in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import ndtri

from .errors import DegenerateError, DomainError, NumericalError, RegimeError
from .spectral import (
    Branch,
    ChannelDims,
    capacity_approx,
    edge_support,
    rayleigh_capacity,
    rayleigh_limit_delta,
    rayleigh_limit_delta_derivative,
)

NEGATIVE_TOLERANCE = 1e-10
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_cdf(x: float) -> float:
    """Phi(x) through erfc, accurate in both tails."""
    if math.isnan(x):
        raise DomainError("std_normal_cdf of NaN")
    return 0.5 * math.erfc(-x * _INV_SQRT2)


def std_normal_quantile(p: float) -> float:
    """Inverse of :func:`std_normal_cdf`, polished with one Newton step."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile needs p in (0, 1), got {p!r}")
    x = float(ndtri(p))
    density = _INV_SQRT_2PI * math.exp(-0.5 * x * x)
    if density > 0:
        x -= (std_normal_cdf(x) - p) / density
    return x


def _clamp(name: str, value: float) -> float:
    if value < 0:
        if value < -NEGATIVE_TOLERANCE:
            raise NumericalError(f"{name} = {value!r} is negative beyond tolerance")
        return 0.0
    return value


def _v1(noise_power: float, lam_minus: float, lam_plus: float) -> float:
    # log((sqrt(a)+sqrt(b))^2 / (4 sqrt(ab))) rewritten as -log(1 - q^2),
    # q = (sqrt(a)-sqrt(b))/(sqrt(a)+sqrt(b)), so it stays accurate when a ~ b.
    ra = math.sqrt(noise_power + lam_plus)
    rb = math.sqrt(noise_power + lam_minus)
    q = (lam_plus - lam_minus) / (ra + rb) ** 2
    return -math.log1p(-q * q)


@dataclass(frozen=True)
class DispersionComponents:
    v1: float
    v2: float
    v3: float
    xi_minus: float
    xi_plus: float
    trace_c_sq_over_m: float
    beta: float

    def realized_xi(self, trace_c_sq_over_m: float | None = None) -> float:
        """beta V1 + V2 + t beta V3 for a codebook with Tr(C_L^2)/M = t."""
        t = self.trace_c_sq_over_m if trace_c_sq_over_m is None else trace_c_sq_over_m
        return self.beta * self.v1 + self.v2 + t * self.beta * self.v3


def dispersion_components(
    dims: ChannelDims, noise_power: float, trace_c_sq_over_m: float | None = None
) -> DispersionComponents:
    """V1, V2, V3 and Xi_-, Xi_+ at noise power sigma^2.

    ``trace_c_sq_over_m`` defaults to 1/beta, the spherical-Gaussian value
    that makes the realized variance coincide with ``xi_plus``.
    """
    sol = capacity_approx(dims, noise_power)
    d, dp = sol.delta, sol.delta_prime
    z = noise_power
    y1, y2 = dims.y1, dims.y2
    v1 = _v1(z, sol.lambda_minus, sol.lambda_plus)
    a = 1.0 + (1.0 + z) * d
    b = 1.0 + z * d
    if sol.branch is Branch.RX_LEQ_TX:
        v2 = y1 / y2 * (1.0 + (1.0 - y1) / y1 * z * z * dp)
        big_n, m, n0 = dims.n_rx, dims.n_tx, dims.n0
        inner = m * (1.0 + z) / (big_n * a * a) + n0 * z / (big_n * b * b)
        v3 = y2 * d / (y1 * inner) / a**4
    else:
        v2 = 1.0 + (1.0 - y2) / y2 * z * z * dp
        pref = y1 * (1.0 - y1) * z * d**3 / (y2 * y2 * a * a * b)
        tail = 1.0 + z + z * (1.0 - y1) / y1 * (1.0 + d / b) ** 2
        v3 = pref * (1.0 - 1.0 / (b * tail))
    v1, v2, v3 = _clamp("V1", v1), _clamp("V2", v2), _clamp("V3", v3)
    beta = dims.beta
    t = 1.0 / beta if trace_c_sq_over_m is None else trace_c_sq_over_m
    if t < 0:
        raise DomainError("trace_c_sq_over_m must be non-negative")
    xi_minus = beta * v1 + v2
    return DispersionComponents(
        v1=v1,
        v2=v2,
        v3=v3,
        xi_minus=xi_minus,
        xi_plus=xi_minus + v3,
        trace_c_sq_over_m=t,
        beta=beta,
    )


@dataclass(frozen=True)
class BoundEvaluation:
    rate_per_antenna: float
    second_order_rate: float
    lower_bound: float
    upper_bound: float
    outage: float
    cbar: float
    xi_minus: float
    xi_plus: float


def _bounds_from_parts(
    rate: float, cbar: float, ml: float, beta: float, v1: float, xi_minus: float, xi_plus: float
) -> BoundEvaluation:
    if not math.isfinite(rate):
        raise DomainError(f"rate must be finite, got {rate!r}")
    r = math.sqrt(ml) * (rate - cbar)
    lower = std_normal_cdf(r / math.sqrt(xi_minus)) if r <= 0 else 0.5
    upper = std_normal_cdf(r / math.sqrt(xi_plus))
    return BoundEvaluation(
        rate_per_antenna=rate,
        second_order_rate=r,
        lower_bound=lower,
        upper_bound=upper,
        outage=_outage(r, beta * v1),
        cbar=cbar,
        xi_minus=xi_minus,
        xi_plus=xi_plus,
    )


def _outage(r: float, beta_v1: float) -> float:
    # M (R - C̄) / sqrt(V1) is r / sqrt(beta V1).
    if beta_v1 == 0:
        return 0.5 if r == 0 else (1.0 if r > 0 else 0.0)
    return std_normal_cdf(r / math.sqrt(beta_v1))


def error_probability_bounds(
    dims: ChannelDims, noise_power: float, rate_per_antenna: float
) -> BoundEvaluation:
    """Lower and upper bounds on the optimal average error probability at rate R."""
    cbar = capacity_approx(dims, noise_power).cbar
    comp = dispersion_components(dims, noise_power)
    ml = dims.n_tx * dims.blocklen
    return _bounds_from_parts(
        rate_per_antenna, cbar, ml, dims.beta, comp.v1, comp.xi_minus, comp.xi_plus
    )


def outage_probability(dims: ChannelDims, noise_power: float, rate_per_antenna: float) -> float:
    """Phi(M (R - C̄) / sqrt(V1)), the infinite-blocklength limit of both bounds."""
    cbar = capacity_approx(dims, noise_power).cbar
    lam_minus, lam_plus = edge_support(dims)
    v1 = _clamp("V1", _v1(noise_power, lam_minus, lam_plus))
    x = dims.n_tx * (rate_per_antenna - cbar)
    if v1 == 0:
        return 0.5 if x == 0 else (1.0 if x > 0 else 0.0)
    return std_normal_cdf(x / math.sqrt(v1))


def _v1_high_snr(yi: float, yj: float) -> float:
    return -math.log1p(-yi * (1.0 - yj) / (yj * (1.0 - yi)))


def high_snr_asymptotes(dims: ChannelDims) -> tuple[float, float, float]:
    """(cbar_coeff, xi_minus_limit, xi_plus_limit) as sigma^2 -> 0.

    ``cbar_coeff`` multiplies log(1/sigma^2) in the growth of C̄.
    """
    y1, y2, beta = dims.y1, dims.y2, dims.beta
    if dims.n_rx == dims.n_tx:
        raise DegenerateError("N = M: dispersion diverges like 1/sigma as sigma^2 -> 0")
    coeff = min(y1, y2) / y2
    if dims.n_rx < dims.n_tx:
        base = beta * _v1_high_snr(y1, y2)
        ratio = y1 / y2
        return coeff, base + ratio, base + 2.0 * ratio - ratio * ratio
    base = beta * _v1_high_snr(y2, y1)
    # V3 vanishes at high SNR when N > M, so both limits coincide.
    return coeff, base + 1.0, base + 1.0


@dataclass(frozen=True)
class GallagerComparison:
    omega: float
    omega_closed_form: float
    e_g: float
    xi_plus_over_beta: float


def gallager_comparison(dims: ChannelDims, noise_power: float) -> GallagerComparison:
    """Compare Xi_+/beta with the near-capacity Gallager exponent when M + N = n."""
    if dims.n_rx + dims.n_tx != dims.n_avail or dims.n_rx > dims.n_tx:
        raise RegimeError("Gallager comparison needs M + N = n and N <= M")
    sol = capacity_approx(dims, noise_power)
    z, d = noise_power, sol.delta
    y1, y2 = dims.y1, dims.y2
    omega = d / (1.0 + (1.0 + z) * d)
    shrink = 1.0 - math.sqrt((z + sol.lambda_minus) / (z + 1.0))
    omega_cf = (1.0 + y1 / y2) * shrink / 2.0
    v1 = _clamp("V1", _v1(z, sol.lambda_minus, sol.lambda_plus))
    beta = dims.beta
    e_g = v1 + (1.0 + y1 / y2) * shrink / beta
    return GallagerComparison(
        omega=omega,
        omega_closed_form=omega_cf,
        e_g=e_g,
        xi_plus_over_beta=v1 + (2.0 * omega - omega * omega) / beta,
    )


# ---------------------------------------------------------------- Rayleigh limits


@dataclass(frozen=True)
class RayleighLimits:
    delta0: float
    cbar: float
    v1: float
    v2: float
    v3: float
    xi_minus: float
    xi_plus: float


def rayleigh_dispersion(c: float, beta: float, norm_noise: float) -> RayleighLimits:
    """Large-n limits of C̄ and the dispersion terms under power normalization."""
    d0 = rayleigh_limit_delta(c, norm_noise)
    dp = rayleigh_limit_delta_derivative(c, norm_noise)
    s = norm_noise
    rc = math.sqrt(c)
    v1 = _clamp("V1", _v1(s, (1.0 - rc) ** 2, (1.0 + rc) ** 2))
    v2 = _clamp("V2", c + s * s * dp)
    v3 = _clamp("V3", d0 / ((1.0 + d0) ** 4 * (s + 1.0 / (1.0 + d0) ** 2)))
    xi_minus = beta * v1 + v2
    return RayleighLimits(
        delta0=d0,
        cbar=rayleigh_capacity(c, norm_noise),
        v1=v1,
        v2=v2,
        v3=v3,
        xi_minus=xi_minus,
        xi_plus=xi_minus + v3,
    )


def rayleigh_bounds(
    c: float, n_tx: int, blocklen: int, norm_noise: float, rate_per_antenna: float
) -> BoundEvaluation:
    """Error-probability bounds for an i.i.d. Rayleigh channel in the large-system limit."""
    beta = blocklen / n_tx
    lim = rayleigh_dispersion(c, beta, norm_noise)
    return _bounds_from_parts(
        rate_per_antenna, lim.cbar, n_tx * blocklen, beta, lim.v1, lim.xi_minus, lim.xi_plus
    )
