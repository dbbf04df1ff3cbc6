"""Monte-Carlo sampling of Jacobi channels and of the information density.

Trials are reproducible: trial ``i`` of a campaign with master seed ``s``
draws everything from ``generator(derive_seed(s, i))``, so results do not
depend on chunking or on how many worker threads run.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._seeding import derive_seed, generator
from .errors import DimensionError, DomainError, NumericalError
from .spectral import ChannelDims

FAILURE_BUDGET = 1e-3
DEFAULT_CHUNK = 2000
_QR_PIVOT_FLOOR = 1e-12


class ChannelSource(enum.Enum):
    HAAR_TRUNCATION = "HaarTruncation"
    BETA_ENSEMBLE = "BetaEnsembleEquivalent"


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    entries: np.ndarray
    source: ChannelSource
    parent: np.ndarray | None = None


@dataclass(frozen=True)
class TrialRecord:
    info_density: float
    mi_term: float
    trace_c_sq_over_m: float
    seed: int


def complex_gaussian(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian entries with E|x|^2 = variance."""
    shape = tuple(shape) if np.iterable(shape) else (shape,)
    raw = rng.standard_normal(shape + (2,))
    return raw.view(np.complex128)[..., 0] * math.sqrt(variance / 2.0)


def _haar_from_gaussian(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Phase-corrected QR of a stack of square Gaussian matrices.

    Returns the unitary factors and a mask of draws whose triangular factor
    had a usable diagonal.
    """
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    mag = np.abs(diag)
    ok = mag.min(axis=-1) > _QR_PIVOT_FLOOR * math.sqrt(g.shape[-1])
    phase = np.where(mag > 0, diag / np.where(mag > 0, mag, 1.0), 1.0)
    return q * phase[..., None, :], ok


def sample_haar_truncated(dims: ChannelDims, seed: int) -> ChannelMatrix:
    """Leading N x M block of an n x n Haar unitary drawn from ``seed``."""
    n = dims.n_avail
    for attempt in range(2):
        rng = generator(seed if attempt == 0 else derive_seed(seed, 1))
        u, ok = _haar_from_gaussian(complex_gaussian(rng, (1, n, n)))
        if ok[0]:
            parent = u[0]
            return ChannelMatrix(
                parent[: dims.n_rx, : dims.n_tx].copy(), ChannelSource.HAAR_TRUNCATION, parent
            )
    raise NumericalError("orthonormalization broke down twice")


def _beta_factors(dims: ChannelDims, rng: np.random.Generator, batch: int):
    # N <= M: J(N, M, n-M). M < N: J(M, N, n-N).
    p = min(dims.n_rx, dims.n_tx)
    q = max(dims.n_rx, dims.n_tx)
    r = dims.n_avail - q
    x = complex_gaussian(rng, (batch, p, q))
    y = complex_gaussian(rng, (batch, p, r))
    return x, y


def _beta_eigs(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    a = x @ x.conj().swapaxes(-1, -2)
    s = a + y @ y.conj().swapaxes(-1, -2)
    try:
        chol = np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("XX^H + YY^H is numerically singular") from exc
    eye = np.broadcast_to(np.eye(s.shape[-1]), s.shape)
    li = np.linalg.solve(chol, eye)
    return np.linalg.eigvalsh(li @ a @ li.conj().swapaxes(-1, -2))


def sample_beta_equivalent_gram_eigs(dims: ChannelDims, seed: int) -> np.ndarray:
    """Eigenvalues of XX^H (XX^H + YY^H)^{-1}, matching the nonzero spectrum of HH^H."""
    x, y = _beta_factors(dims, generator(seed), 1)
    return _beta_eigs(x, y)[0]


def beta_gram_eigs_batch(dims: ChannelDims, n_draws: int, master_seed: int) -> np.ndarray:
    """``n_draws`` x min(N, M) Beta-ensemble eigenvalues, one row per draw."""
    rows = [sample_beta_equivalent_gram_eigs(dims, derive_seed(master_seed, i)) for i in range(n_draws)]
    return np.array(rows)


def haar_gram_eigs_batch(dims: ChannelDims, n_draws: int, master_seed: int) -> np.ndarray:
    """``n_draws`` x min(N, M) eigenvalues of the smaller Gram matrix of H."""
    n = dims.n_avail
    parents = np.empty((n_draws, n, n), dtype=np.complex128)
    for i in range(n_draws):
        parents[i] = complex_gaussian(generator(derive_seed(master_seed, i)), (n, n))
    u, ok = _haar_from_gaussian(parents)
    if not ok.all():
        raise NumericalError("orthonormalization breakdown in Haar batch")
    h = u[:, : dims.n_rx, : dims.n_tx]
    if dims.n_rx <= dims.n_tx:
        gram = h @ h.conj().swapaxes(-1, -2)
    else:
        gram = h.conj().swapaxes(-1, -2) @ h
    return np.linalg.eigvalsh(gram)


def spherical_gaussian_codeword(m: int, l: int, seed: int) -> np.ndarray:
    """M x L i.i.d. complex Gaussian codeword scaled to Tr(SS^H) = ML exactly."""
    if m < 1 or l < 1:
        raise DimensionError("codeword dimensions must be positive")
    return _normalize_codewords(complex_gaussian(generator(seed), (1, m, l)))[0]


def _normalize_codewords(g: np.ndarray) -> np.ndarray:
    m, l = g.shape[-2:]
    energy = np.sum(g.real**2 + g.imag**2, axis=(-2, -1), keepdims=True)
    return g * np.sqrt(m * l / energy)


def _snr_cholesky(h: np.ndarray, noise_power: float) -> np.ndarray:
    gram = h @ h.conj().swapaxes(-1, -2)
    return np.linalg.cholesky(np.eye(h.shape[-2]) + gram / noise_power)


def _logdet_from_cholesky(chol: np.ndarray) -> np.ndarray:
    return 2.0 * np.sum(np.log(np.diagonal(chol, axis1=-2, axis2=-1).real), axis=-1)


def _id_batch(h: np.ndarray, s: np.ndarray, w: np.ndarray, noise_power: float):
    """Vectorized information density over a stack of (H, S, W)."""
    big_n, m = h.shape[-2:]
    l = s.shape[-1]
    # One factorization of I + HH^H / sigma^2 serves both terms, since
    # (HH^H + sigma^2 I)^{-1} = (I + HH^H / sigma^2)^{-1} / sigma^2.
    chol = _snr_cholesky(h, noise_power)
    mi = _logdet_from_cholesky(chol) / m
    y = h @ s + math.sqrt(noise_power) * w
    t = np.linalg.solve(chol, y)
    quad = np.sum(t.real**2 + t.imag**2, axis=(-2, -1)) / noise_power
    noise_energy = np.sum(w.real**2 + w.imag**2, axis=(-2, -1))
    info = mi + (quad - noise_energy) / (m * l)
    ss = s @ s.conj().swapaxes(-1, -2)
    frob = np.sum(ss.real**2 + ss.imag**2, axis=(-2, -1))
    energy = np.einsum("...ii->...", ss).real
    trace_c_sq = m - 2.0 * energy / l + frob / (l * l)
    return info, np.maximum(mi, 0.0), trace_c_sq / m


def information_density(
    h: ChannelMatrix | np.ndarray,
    codeword: np.ndarray,
    noise: np.ndarray,
    noise_power: float,
    seed: int = 0,
) -> TrialRecord:
    """Information density of one channel use block, in nats per antenna per use."""
    hm = np.asarray(h.entries if isinstance(h, ChannelMatrix) else h, dtype=np.complex128)
    s = np.asarray(codeword, dtype=np.complex128)
    w = np.asarray(noise, dtype=np.complex128)
    if hm.ndim != 2 or s.ndim != 2 or w.ndim != 2:
        raise DimensionError("H, codeword and noise must be matrices")
    big_n, m = hm.shape
    if s.shape[0] != m or w.shape != (big_n, s.shape[1]):
        raise DimensionError(
            f"shape mismatch: H {hm.shape}, codeword {s.shape}, noise {w.shape}"
        )
    if not noise_power > 0:
        raise DomainError("noise_power must be positive")
    info, mi, tc = _id_batch(hm[None], s[None], w[None], noise_power)
    return TrialRecord(float(info[0]), float(mi[0]), float(tc[0]), int(seed))


@dataclass(frozen=True, eq=False)
class EmpiricalRun:
    """Outcome of a CLT campaign, stored column-wise in trial order."""

    dims: ChannelDims
    noise_power: float
    n_trials: int
    master_seed: int
    info_density: np.ndarray
    mi_term: np.ndarray
    trace_c_sq_over_m: np.ndarray
    seeds: np.ndarray
    trial_index: np.ndarray
    n_failed: int = 0

    def __len__(self) -> int:
        return len(self.info_density)

    def record(self, i: int) -> TrialRecord:
        return TrialRecord(
            float(self.info_density[i]),
            float(self.mi_term[i]),
            float(self.trace_c_sq_over_m[i]),
            int(self.seeds[i]),
        )

    @property
    def trials(self) -> list[TrialRecord]:
        return [self.record(i) for i in range(len(self))]

    def normalized(self, center: float, scale: float = 1.0) -> np.ndarray:
        """sqrt(ML) (ID - center) / scale for every trial."""
        ml = self.dims.n_tx * self.dims.blocklen
        return math.sqrt(ml) * (self.info_density - center) / scale


def _trial_draws(dims: ChannelDims, seed: int):
    rng = generator(seed)
    n, big_n, m, l = dims.n_avail, dims.n_rx, dims.n_tx, dims.blocklen
    parent = complex_gaussian(rng, (n, n))
    s = complex_gaussian(rng, (m, l))
    w = complex_gaussian(rng, (big_n, l))
    return parent, s, w


def _single_trial(dims: ChannelDims, noise_power: float, seed: int):
    """One trial with its single retry; returns None when both attempts fail."""
    for attempt_seed in (seed, derive_seed(seed, 1)):
        parent, s, w = _trial_draws(dims, attempt_seed)
        u, ok = _haar_from_gaussian(parent[None])
        if not ok[0]:
            continue
        h = u[:, : dims.n_rx, : dims.n_tx]
        try:
            out = _id_batch(h, _normalize_codewords(s[None]), w[None], noise_power)
        except np.linalg.LinAlgError:
            continue
        if all(np.isfinite(v[0]) for v in out):
            return tuple(float(v[0]) for v in out)
    return None


def _campaign_chunk(dims: ChannelDims, noise_power: float, seeds: list[int]):
    b = len(seeds)
    n, big_n, m, l = dims.n_avail, dims.n_rx, dims.n_tx, dims.blocklen
    parents = np.empty((b, n, n), dtype=np.complex128)
    s = np.empty((b, m, l), dtype=np.complex128)
    w = np.empty((b, big_n, l), dtype=np.complex128)
    for i, seed in enumerate(seeds):
        parents[i], s[i], w[i] = _trial_draws(dims, seed)
    u, ok = _haar_from_gaussian(parents)
    h = u[:, :big_n, :m]
    s = _normalize_codewords(s)
    info = np.full(b, np.nan)
    mi = np.full(b, np.nan)
    tc = np.full(b, np.nan)
    try:
        info[:], mi[:], tc[:] = _id_batch(h, s, w, noise_power)
    except np.linalg.LinAlgError:
        ok = np.zeros(b, dtype=bool)
    ok &= np.isfinite(info) & np.isfinite(mi) & np.isfinite(tc)
    for i in np.flatnonzero(~ok):
        redo = _single_trial(dims, noise_power, seeds[i])
        if redo is not None:
            info[i], mi[i], tc[i] = redo
            ok[i] = True
    return info, mi, tc, ok


def run_clt_campaign(
    dims: ChannelDims,
    noise_power: float,
    n_trials: int,
    master_seed: int,
    *,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
) -> EmpiricalRun:
    """Draw ``n_trials`` independent (H, S, W) triples and evaluate the information density."""
    if n_trials < 100:
        raise DomainError("a CLT campaign needs at least 100 trials")
    if not noise_power > 0:
        raise DomainError("noise_power must be positive")
    seeds = [derive_seed(master_seed, i) for i in range(n_trials)]
    chunks = [seeds[i : i + chunk_size] for i in range(0, n_trials, chunk_size)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _campaign_chunk(dims, noise_power, c), chunks))
    else:
        parts = [_campaign_chunk(dims, noise_power, c) for c in chunks]
    info, mi, tc, ok = (np.concatenate(col) for col in zip(*parts))
    n_failed = int(np.count_nonzero(~ok))
    if n_failed > FAILURE_BUDGET * n_trials:
        raise NumericalError(f"{n_failed} of {n_trials} trials failed")
    index = np.flatnonzero(ok)
    return EmpiricalRun(
        dims=dims,
        noise_power=noise_power,
        n_trials=n_trials,
        master_seed=master_seed,
        info_density=info[index],
        mi_term=mi[index],
        trace_c_sq_over_m=tc[index],
        seeds=np.array(seeds, dtype=np.uint64)[index],
        trial_index=index,
        n_failed=n_failed,
    )


def mutual_information_samples(
    dims: ChannelDims, noise_power: float, n_trials: int, master_seed: int
) -> np.ndarray:
    """(1/M) logdet(I + HH^H / sigma^2) over independent Haar-truncated draws."""
    n, big_n = dims.n_avail, dims.n_rx
    out = []
    for start in range(0, n_trials, DEFAULT_CHUNK):
        stop = min(start + DEFAULT_CHUNK, n_trials)
        parents = np.empty((stop - start, n, n), dtype=np.complex128)
        for j, i in enumerate(range(start, stop)):
            parents[j] = complex_gaussian(generator(derive_seed(master_seed, i)), (n, n))
        u, ok = _haar_from_gaussian(parents)
        if not ok.all():
            raise NumericalError("orthonormalization breakdown")
        h = u[:, :big_n, : dims.n_tx]
        out.append(_logdet_from_cholesky(_snr_cholesky(h, noise_power)) / dims.n_tx)
    return np.concatenate(out)


def empirical_error_probability(
    dims: ChannelDims,
    noise_power: float,
    rate: float,
    n_trials: int,
    seed: int,
    *,
    run: EmpiricalRun | None = None,
) -> float:
    """Fraction of trials with sqrt(ML)(ID - C̄) <= r, i.e. with ID <= R."""
    if n_trials < 1000:
        raise DomainError("empirical error probability needs at least 1000 trials")
    if run is None:
        run = run_clt_campaign(dims, noise_power, n_trials, seed)
    return float(np.count_nonzero(run.info_density <= rate)) / len(run)


# ---------------------------------------------------------------- empirical distributions


@dataclass(frozen=True, eq=False)
class EmpiricalCDF:
    """Right-continuous step function over a sorted sample."""

    samples: np.ndarray

    def __call__(self, x):
        counts = np.searchsorted(self.samples, x, side="right")
        return counts / len(self.samples)

    def __len__(self) -> int:
        return len(self.samples)


def empirical_cdf(run: EmpiricalRun, center: float, scale: float) -> EmpiricalCDF:
    if not scale > 0:
        raise DomainError("scale must be positive")
    if len(run) == 0:
        raise DomainError("empty run")
    return EmpiricalCDF(np.sort(run.normalized(center, scale)))


def ks_distance(samples, cdf) -> float:
    """sup_x |F_hat(x) - F(x)| for a continuous reference CDF ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    f = np.asarray(cdf(x), dtype=float)
    above = np.arange(1, n + 1) / n - f
    below = f - np.arange(n) / n
    return float(max(above.max(), below.max()))


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


# ---------------------------------------------------------------- resolvent traces


def _inverse_cholesky(a: np.ndarray) -> np.ndarray:
    chol = np.linalg.cholesky(a)
    eye = np.broadcast_to(np.eye(a.shape[-1]), a.shape)
    return np.linalg.solve(chol, eye)


def _inverse_trace(a: np.ndarray) -> np.ndarray:
    li = _inverse_cholesky(a)
    return np.sum(li.real**2 + li.imag**2, axis=(-2, -1))


def _resolvent_dims(dim_n: int, c1: float, c2: float) -> tuple[int, int]:
    p = int(round(c1 * dim_n))
    q = int(round(c2 * dim_n))
    if p < dim_n or q < 1:
        raise DomainError(f"need c1*N >= N and c2*N >= 1, got p={p}, q={q}")
    return p, q


def _gram_pairs(rng, batch: int, dim_n: int, p: int, q: int):
    x = complex_gaussian(rng, (batch, dim_n, p), 1.0 / dim_n)
    y = complex_gaussian(rng, (batch, dim_n, q), 1.0 / dim_n)
    return x @ x.conj().swapaxes(-1, -2), y @ y.conj().swapaxes(-1, -2)


def _chunked(n_trials: int, seed: int, chunk: int):
    for k, start in enumerate(range(0, n_trials, chunk)):
        yield generator(derive_seed(seed, k)), min(chunk, n_trials - start)


def _retrying(fn, rng_batch, seed_tag):
    try:
        return fn(*rng_batch)
    except np.linalg.LinAlgError:
        pass
    rng, b = rng_batch
    try:
        return fn(generator(derive_seed(seed_tag, 1)), b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular resolvent draw after retry") from exc


def resolvent_trace_samples(
    a: float, b: float, dim_n: int, c1: float, c2: float, n_trials: int, seed: int,
    *, with_controls: bool = False, chunk: int = 1000,
):
    """Per-trial (1/N) Tr (a XX^H + b YY^H)^{-1}, optionally with control variates.

    The controls are centred normalized traces of (XX^H + YY^H)^{-1} and
    (XX^H)^{-1}, whose expectations are exact inverse-Wishart moments.
    """
    if not (a > 0 and b > 0):
        raise DomainError("a and b must be positive")
    p, q = _resolvent_dims(dim_n, c1, c2)
    values, controls = [], []
    for k, (rng, bsz) in enumerate(_chunked(n_trials, seed, chunk)):
        def one(rng_, bsz_):
            wx, wy = _gram_pairs(rng_, bsz_, dim_n, p, q)
            f = _inverse_trace(a * wx + b * wy) / dim_n
            if not with_controls:
                return f, None
            cols = []
            if p + q - dim_n >= 2:
                cols.append(_inverse_trace(wx + wy) / dim_n - dim_n / (p + q - dim_n))
            if p - dim_n >= 2:
                cols.append(_inverse_trace(wx) / dim_n - dim_n / (p - dim_n))
            return f, np.stack(cols, axis=-1) if cols else np.empty((bsz_, 0))
        f, ctl = _retrying(one, (rng, bsz), derive_seed(seed, k))
        values.append(f)
        if ctl is not None:
            controls.append(ctl)
    f = np.concatenate(values)
    return (f, np.concatenate(controls)) if with_controls else f


def _mean_and_se(f: np.ndarray, controls: np.ndarray | None = None) -> tuple[float, float]:
    n = len(f)
    if controls is not None and controls.shape[1] > 0:
        centered = controls - controls.mean(axis=0)
        coef, *_ = np.linalg.lstsq(centered, f - f.mean(), rcond=None)
        f = f - controls @ coef
    return float(f.mean()), float(f.std(ddof=1) / math.sqrt(n))


def resolvent_trace_mc(
    a: float, b: float, dim_n: int, c1: float, c2: float, n_trials: int, seed: int,
    *, control_variates: bool = False,
) -> tuple[float, float]:
    """MC estimate (mean, std_err) of (1/N) E Tr (a XX^H + b YY^H)^{-1}.

    X is N x round(c1 N), Y is N x round(c2 N), entries of variance 1/N.
    With ``control_variates`` the estimate subtracts a regression on
    controls of exactly known mean, which leaves the expectation unchanged
    and shrinks the standard error.
    """
    if not a > b > 0:
        raise DomainError(f"need a > b > 0, got a={a!r}, b={b!r}")
    if control_variates:
        f, ctl = resolvent_trace_samples(a, b, dim_n, c1, c2, n_trials, seed, with_controls=True)
        return _mean_and_se(f, ctl)
    return _mean_and_se(resolvent_trace_samples(a, b, dim_n, c1, c2, n_trials, seed))


def second_order_trace_mc(
    ab: tuple[float, float], cd: tuple[float, float],
    dim_n: int, c1: float, c2: float, n_trials: int, seed: int,
) -> tuple[float, float]:
    """MC estimate (mean, std_err) of (1/N) E Tr G(a, b) G(c, d) on shared X, Y."""
    p, q = _resolvent_dims(dim_n, c1, c2)
    values = []
    for k, (rng, bsz) in enumerate(_chunked(n_trials, seed, 1000)):
        def one(rng_, bsz_):
            wx, wy = _gram_pairs(rng_, bsz_, dim_n, p, q)
            l1 = _inverse_cholesky(ab[0] * wx + ab[1] * wy)
            l2 = _inverse_cholesky(cd[0] * wx + cd[1] * wy)
            g1 = l1.conj().swapaxes(-1, -2) @ l1
            g2 = l2.conj().swapaxes(-1, -2) @ l2
            return np.sum(g1 * g2.conj(), axis=(-2, -1)).real / dim_n
        values.append(_retrying(one, (rng, bsz), derive_seed(seed, k)))
    return _mean_and_se(np.concatenate(values))
