"""Deterministic equivalents and the ergodic-capacity approximation for Jacobi channels.

All quantities are in nats. ``noise_power`` is the linear noise variance
sigma^2 (the inverse of the per-receive-antenna SNR); dB conversion happens
at the edges of the package through :func:`snr_db_to_noise_power`.

The key scalar is ``delta``, the positive root of

    (1 - ya) z (1 + z) delta^2 + (yb - ya + (1 - 2 ya) z) delta - ya = 0,

where ``(ya, yb) = (N/n, M/n)`` when N <= M and the roles swap when N > M.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DimensionError, DomainError, NumericalError

MIN_NOISE_POWER = 1e-30


class Branch(enum.Enum):
    RX_LEQ_TX = "RxLeqTx"
    RX_GT_TX = "RxGtTx"


@dataclass(frozen=True)
class ChannelDims:
    """Problem size: N receive, M transmit, n available channels, blocklength L."""

    n_rx: int
    n_tx: int
    n_avail: int
    blocklen: int = 1

    def __post_init__(self):
        for name in ("n_rx", "n_tx", "n_avail", "blocklen"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise DimensionError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise DimensionError(f"{name} must be >= 1, got {value}")
        if self.n_rx + self.n_tx > self.n_avail:
            raise DimensionError(
                f"N+M exceeds n: {self.n_rx}+{self.n_tx} > {self.n_avail} "
                "(only M+N <= n is supported)"
            )

    @property
    def y1(self) -> float:
        return self.n_rx / self.n_avail

    @property
    def y2(self) -> float:
        return self.n_tx / self.n_avail

    @property
    def beta(self) -> float:
        return self.blocklen / self.n_tx

    @property
    def c(self) -> float:
        return self.n_rx / self.n_tx

    @property
    def n0(self) -> int:
        """n - M, the unexcited channels on the transmit side."""
        return self.n_avail - self.n_tx

    @property
    def n1(self) -> int:
        """n - N, the unexcited channels on the receive side."""
        return self.n_avail - self.n_rx

    @property
    def branch(self) -> Branch:
        return Branch.RX_LEQ_TX if self.n_rx <= self.n_tx else Branch.RX_GT_TX

    def with_blocklen(self, blocklen: int) -> "ChannelDims":
        return ChannelDims(self.n_rx, self.n_tx, self.n_avail, blocklen)


def make_dims(n_rx: int, n_tx: int, n_avail: int, blocklen: int = 1) -> ChannelDims:
    """Validate and build a :class:`ChannelDims`.

    Raises :class:`DimensionError` when any size is below one or when
    ``n_rx + n_tx > n_avail``.
    """
    return ChannelDims(n_rx, n_tx, n_avail, blocklen)


def snr_db_to_noise_power(snr_db: float) -> float:
    """sigma^2 such that 1/sigma^2 equals ``snr_db`` decibels."""
    return 10.0 ** (-snr_db / 10.0)


def normalized_noise_power(dims: ChannelDims, norm_noise: float) -> float:
    """Power-normalized noise sigma^2 = (M/n) * norm_noise used for Rayleigh comparisons."""
    return dims.n_tx / dims.n_avail * norm_noise


def edge_support(dims: ChannelDims) -> tuple[float, float]:
    """Edges (lambda_minus, lambda_plus) of the limiting Jacobi spectrum."""
    a = math.sqrt(dims.y1 * (1.0 - dims.y2))
    b = math.sqrt(dims.y2 * (1.0 - dims.y1))
    return (a - b) ** 2, (a + b) ** 2


def _oriented(dims: ChannelDims) -> tuple[float, float]:
    # (ya, yb): ya is the ratio of the smaller side.
    if dims.branch is Branch.RX_LEQ_TX:
        return dims.y1, dims.y2
    return dims.y2, dims.y1


def _quadratic(dims: ChannelDims, z: float) -> tuple[float, float, float]:
    ya, yb = _oriented(dims)
    return (1.0 - ya) * z * (1.0 + z), yb - ya + (1.0 - 2.0 * ya) * z, -ya


def _check_noise(noise_power: float) -> None:
    if not noise_power > 0 or not math.isfinite(noise_power):
        raise DomainError(f"noise_power must be positive and finite, got {noise_power!r}")
    if noise_power < MIN_NOISE_POWER:
        raise NumericalError(
            f"noise_power {noise_power:g} below {MIN_NOISE_POWER:g}; "
            "use the high-SNR asymptotes instead"
        )


def _discriminant(dims: ChannelDims, z: float) -> float:
    lam_minus, lam_plus = edge_support(dims)
    return (z + lam_minus) * (z + lam_plus)


def delta_residual(dims: ChannelDims, noise_power: float, delta: float) -> float:
    """Value of the defining quadratic at ``delta`` (zero at the exact root)."""
    qa, qb, qc = _quadratic(dims, noise_power)
    return (qa * delta + qb) * delta + qc


def solve_delta(dims: ChannelDims, noise_power: float) -> float:
    """Positive root delta(sigma^2) of the Jacobi fixed-point quadratic.

    Uses the closed form with the square root written as
    sqrt((sigma^2 + lambda_-)(sigma^2 + lambda_+)); when the linear
    coefficient is positive the conjugate form avoids cancellation.
    """
    _check_noise(noise_power)
    qa, qb, qc = _quadratic(dims, noise_power)
    root_disc = math.sqrt(_discriminant(dims, noise_power))
    if qb > 0:
        delta = -2.0 * qc / (qb + root_disc)
    else:
        delta = (root_disc - qb) / (2.0 * qa)
    if not delta > 0:
        raise NumericalError(f"non-positive delta {delta!r} at sigma^2={noise_power:g}")
    return delta


def delta_derivative(dims: ChannelDims, noise_power: float) -> float:
    """d delta / d sigma^2 by implicit differentiation of the quadratic."""
    delta = solve_delta(dims, noise_power)
    ya, _ = _oriented(dims)
    z = noise_power
    # At the root, 2*qa*delta + qb equals the square root of the discriminant.
    denom = math.sqrt(_discriminant(dims, z))
    if denom < 1e-14:
        raise NumericalError("degenerate quadratic: implicit-function denominator vanishes")
    da = (1.0 - ya) * (1.0 + 2.0 * z)
    db = 1.0 - 2.0 * ya
    return -(da * delta + db) * delta / denom


@dataclass(frozen=True)
class SpectralSolution:
    delta: float
    delta_prime: float
    lambda_minus: float
    lambda_plus: float
    branch: Branch
    noise_power: float
    cbar: float


def _cbar_from_delta(dims: ChannelDims, z: float, delta: float) -> float:
    ya, yb = _oriented(dims)
    value = (
        math.log1p((1.0 + z) * delta)
        + (1.0 - yb) / yb * math.log1p(z * delta)
        - ya / yb * math.log((1.0 - ya) * z * delta / ya)
        + math.log1p(-ya) / yb
    )
    if dims.branch is Branch.RX_GT_TX:
        value *= dims.y1 / dims.y2
    if value < 0:
        if value < -1e-12:
            raise NumericalError(f"negative capacity approximation {value!r}")
        value = 0.0
    return value


def capacity_approx(dims: ChannelDims, noise_power: float) -> SpectralSolution:
    """Deterministic approximation C̄(sigma^2) of the per-transmit-antenna ergodic capacity."""
    delta = solve_delta(dims, noise_power)
    lam_minus, lam_plus = edge_support(dims)
    return SpectralSolution(
        delta=delta,
        delta_prime=delta_derivative(dims, noise_power),
        lambda_minus=lam_minus,
        lambda_plus=lam_plus,
        branch=dims.branch,
        noise_power=noise_power,
        cbar=_cbar_from_delta(dims, noise_power, delta),
    )


def resolvent_trace(dims: ChannelDims, noise_power: float) -> float:
    """Deterministic equivalent of (1/N) Tr (HH^H + sigma^2 I_N)^{-1}."""
    delta = solve_delta(dims, noise_power)
    z = noise_power
    n, m, big_n = dims.n_avail, dims.n_tx, dims.n_rx
    if dims.branch is Branch.RX_LEQ_TX:
        return m / big_n * delta / (1 + (1 + z) * delta) + (n - m) / big_n * delta / (1 + z * delta)
    # Gram on the transmit side, plus the N - M zero eigenvalues of HH^H.
    small = big_n / m * delta / (1 + (1 + z) * delta) + (n - big_n) / m * delta / (1 + z * delta)
    return (m * small + (big_n - m) / z) / big_n


# ---------------------------------------------------------------- two-Gram resolvents


@dataclass(frozen=True)
class GeneralResolventParams:
    """Deterministic equivalent of (1/N) Tr (a XX^H + b YY^H)^{-1}."""

    a: float
    b: float
    c1: float
    c2: float
    delta_ab: float


def general_resolvent_residual(p: GeneralResolventParams) -> float:
    qa = p.a * p.b * (p.c1 + p.c2 - 1.0)
    qb = p.a * p.c1 + p.b * p.c2 - p.a - p.b
    return (qa * p.delta_ab + qb) * p.delta_ab - 1.0


def solve_general_resolvent(a: float, b: float, c1: float, c2: float) -> GeneralResolventParams:
    """Positive root of ab(c1+c2-1) d^2 + (a c1 + b c2 - a - b) d - 1 = 0.

    X is N x c1*N and Y is N x c2*N with entries of variance 1/N; requires
    ``a > b > 0``, ``c1 >= 1`` and ``c2 > 0``.
    """
    if not (a > b > 0):
        raise DomainError(f"need a > b > 0, got a={a!r}, b={b!r}")
    if not c1 >= 1 or not c2 > 0:
        raise DomainError(f"need c1 >= 1 and c2 > 0, got c1={c1!r}, c2={c2!r}")
    qa = a * b * (c1 + c2 - 1.0)
    qb = a * c1 + b * c2 - a - b
    disc = qb * qb + 4.0 * qa
    if disc < 0:
        raise NumericalError(f"negative discriminant {disc!r}")
    root = math.sqrt(disc)
    delta = 2.0 / (qb + root) if qb > 0 else (root - qb) / (2.0 * qa)
    return GeneralResolventParams(a=a, b=b, c1=c1, c2=c2, delta_ab=delta)


def jacobi_resolvent_params(dims: ChannelDims, noise_power: float) -> GeneralResolventParams:
    """The Jacobi specialisation a = 1 + sigma^2, b = sigma^2 on the smaller side."""
    small = min(dims.n_rx, dims.n_tx)
    large = max(dims.n_rx, dims.n_tx)
    return solve_general_resolvent(
        1.0 + noise_power, noise_power, large / small, (dims.n_avail - large) / small
    )


def second_order_resolvent(p1: GeneralResolventParams, p2: GeneralResolventParams) -> float:
    """Deterministic equivalent of (1/N) Tr G(a, b) G(c, d)."""
    if not (math.isclose(p1.c1, p2.c1) and math.isclose(p1.c2, p2.c2)):
        raise DomainError("both parameter sets must share c1 and c2")
    a, b, d1 = p1.a, p1.b, p1.delta_ab
    c, d, d2 = p2.a, p2.b, p2.delta_ab
    denom = c * p1.c1 / ((1 + c * d2) * (1 + a * d1)) + d * p1.c2 / ((1 + d * d2) * (1 + b * d1))
    return d1 / denom


# ---------------------------------------------------------------- Rayleigh limits


def rayleigh_limit_delta(c: float, norm_noise: float) -> float:
    """delta_0: limit of delta as n grows with sigma^2 = (M/n) * norm_noise, N <= M.

    Equals (1/M) Tr (W + norm_noise)^{-1} for W = G G^H / M, G an N x M
    standard complex Gaussian matrix and c = N/M.
    """
    if not c > 0 or not norm_noise > 0:
        raise DomainError("need c > 0 and norm_noise > 0")
    lin = 1.0 - c + norm_noise
    root = math.sqrt(lin * lin + 4.0 * c * norm_noise)
    if lin > 0:
        return 2.0 * c / (lin + root)
    return (root - lin) / (2.0 * norm_noise)


def rayleigh_limit_delta_derivative(c: float, norm_noise: float) -> float:
    """d delta_0 / d norm_noise, from s d^2 + (1 - c + s) d - c = 0."""
    d0 = rayleigh_limit_delta(c, norm_noise)
    s = norm_noise
    return -(d0 * d0 + d0) / (2.0 * s * d0 + 1.0 - c + s)


def rayleigh_branch_delta(c: float, norm_noise: float) -> float:
    """Branch-appropriate limit of :func:`solve_delta` under power normalization.

    For c <= 1 this is delta_0. For c > 1 the Jacobi delta lives on the
    M x M side and converges to delta_0 + (1 - c)/norm_noise.
    """
    d0 = rayleigh_limit_delta(c, norm_noise)
    if c <= 1:
        return d0
    return d0 + (1.0 - c) / norm_noise


def rayleigh_capacity(c: float, norm_noise: float) -> float:
    """Per-transmit-antenna ergodic capacity of an i.i.d. Rayleigh N x M channel.

    Large-system value of (1/M) E logdet(I_N + G G^H / (M * norm_noise)).
    """
    if not c > 0 or not norm_noise > 0:
        raise DomainError("need c > 0 and norm_noise > 0")
    snr = 1.0 / norm_noise
    rc = math.sqrt(c)
    f = (math.sqrt(snr * (1 + rc) ** 2 + 1) - math.sqrt(snr * (1 - rc) ** 2 + 1)) ** 2
    return c * math.log(1 + snr - f / 4) + math.log(1 + snr * c - f / 4) - f / (4 * snr)
