import math

import numpy as np
import pytest
from scipy import stats

from jacobi_fbl._seeding import derive_seed, splitmix64
from jacobi_fbl.bounds import dispersion_components
from jacobi_fbl.errors import DimensionError, DomainError
from jacobi_fbl.montecarlo import (
    ChannelSource,
    beta_gram_eigs_batch,
    complex_gaussian,
    empirical_cdf,
    empirical_error_probability,
    haar_gram_eigs_batch,
    information_density,
    ks_distance,
    ks_two_sample,
    mutual_information_samples,
    resolvent_trace_mc,
    run_clt_campaign,
    sample_beta_equivalent_gram_eigs,
    sample_haar_truncated,
    second_order_trace_mc,
    spherical_gaussian_codeword,
)
from jacobi_fbl.spectral import (
    capacity_approx,
    edge_support,
    make_dims,
    second_order_resolvent,
    solve_general_resolvent,
)

SNR5 = 10 ** -0.5


def test_splitmix_known_value():
    # First output of the reference splitmix64 stream seeded with 0.
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_derived_seeds_distinct():
    seeds = {derive_seed(123, i) for i in range(10_000)}
    assert len(seeds) == 10_000


def test_complex_gaussian_moments():
    x = complex_gaussian(np.random.default_rng(0), (200_000,), 2.0)
    assert np.mean(np.abs(x) ** 2) == pytest.approx(2.0, rel=0.01)
    assert abs(np.mean(x.real**2) - np.mean(x.imag**2)) < 0.02
    assert abs(np.mean(x * x)) < 0.02


def test_haar_parent_unitary_and_block():
    d = make_dims(4, 6, 12)
    ch = sample_haar_truncated(d, 5)
    assert ch.source is ChannelSource.HAAR_TRUNCATION
    assert ch.entries.shape == (4, 6)
    k = ch.parent
    assert np.max(np.abs(k.conj().T @ k - np.eye(12))) < 1e-10
    assert np.all(np.linalg.svd(ch.entries, compute_uv=False) <= 1 + 1e-10)
    np.testing.assert_array_equal(ch.entries, k[:4, :6])


def test_haar_large_parent_unitary():
    k = sample_haar_truncated(make_dims(3, 3, 512), 1).parent
    assert np.max(np.abs(k.conj().T @ k - np.eye(512))) < 1e-10


def test_haar_reproducible():
    d = make_dims(4, 6, 12)
    np.testing.assert_array_equal(sample_haar_truncated(d, 9).entries, sample_haar_truncated(d, 9).entries)


def test_haar_column_energy():
    d = make_dims(4, 6, 12)
    energy = np.array([np.sum(np.abs(sample_haar_truncated(d, s).entries[:, 0]) ** 2) for s in range(10_000)])
    se = energy.std() / math.sqrt(len(energy))
    assert abs(energy.mean() - 4 / 12) < 3 * se


def test_haar_phase_invariance():
    # Haar entries have uniformly distributed phase; naive QR would bias the diagonal.
    d = make_dims(1, 1, 4)
    vals = np.array([sample_haar_truncated(d, s).entries[0, 0] for s in range(4000)])
    assert abs(np.mean(vals)) < 4 * math.sqrt(0.25 / 4000)


def test_haar_spectrum_concentrates():
    d = make_dims(64, 96, 256)
    lo, hi = edge_support(d)
    eigs = haar_gram_eigs_batch(d, 4, 3).ravel()
    outside = np.mean((eigs < lo - 0.05) | (eigs > hi + 0.05))
    assert outside < 0.01
    assert eigs.min() > -1e-10 and eigs.max() < 1 + 1e-10


@pytest.mark.parametrize("dims", [(4, 6, 12), (6, 4, 12), (3, 3, 9)])
def test_beta_eigs_in_unit_interval(dims):
    d = make_dims(*dims)
    eigs = beta_gram_eigs_batch(d, 200, 4)
    assert eigs.shape == (200, min(dims[:2]))
    assert eigs.min() >= -1e-12 and eigs.max() <= 1 + 1e-12
    assert sample_beta_equivalent_gram_eigs(d, 1).shape == (min(dims[:2]),)


def test_gram_trace_moment():
    d = make_dims(4, 6, 12)
    tr_h = haar_gram_eigs_batch(d, 4000, 1).sum(axis=1)
    tr_b = beta_gram_eigs_batch(d, 4000, 2).sum(axis=1)
    for tr in (tr_h, tr_b):
        assert abs(tr.mean() - 4 * 6 / 12) < 3 * tr.std() / math.sqrt(len(tr))


def test_spherical_codeword():
    s = spherical_gaussian_codeword(6, 60, 3)
    assert np.sum(np.abs(s) ** 2) / 360 == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_array_equal(s, spherical_gaussian_codeword(6, 60, 3))


def test_codeword_trace_c_squared():
    m, l = 8, 80
    vals = []
    for seed in range(2000):
        s = spherical_gaussian_codeword(m, l, seed)
        c = np.eye(m) - s @ s.conj().T / l
        vals.append(np.trace(c @ c).real / m)
    # Exact for the normalized codeword: E||SS^H||_F^2 = (ML)^2 (M+L) / (ML+1).
    se = np.std(vals) / math.sqrt(len(vals))
    assert abs(np.mean(vals) - (m * m - 1) / (m * l + 1)) < 3 * se
    assert np.mean(vals) == pytest.approx(m / l, rel=0.1)


def test_id_zero_channel():
    rng = np.random.default_rng(1)
    s = spherical_gaussian_codeword(3, 10, 1)
    w = complex_gaussian(rng, (2, 10))
    rec = information_density(np.zeros((2, 3)), s, w, 0.5)
    assert rec.info_density == pytest.approx(0.0, abs=1e-14)
    assert rec.mi_term == 0.0


def test_id_no_noise_orthogonal_codeword():
    d = make_dims(3, 4, 10)
    h = sample_haar_truncated(d, 2).entries
    l = 8
    # rows of a scaled DFT give S S^H = L I
    s = np.exp(-2j * np.pi * np.outer(np.arange(4), np.arange(l)) / l)
    z = 0.3
    rec = information_density(h, s, np.zeros((3, l)), z)
    hh = h @ h.conj().T
    mi = np.linalg.slogdet(np.eye(3) + hh / z)[1] / 4
    extra = np.trace(np.linalg.solve(hh + z * np.eye(3), hh)).real / 4
    assert rec.mi_term == pytest.approx(mi, rel=1e-12)
    assert rec.info_density == pytest.approx(mi + extra, rel=1e-12)
    assert rec.trace_c_sq_over_m == pytest.approx(0.0, abs=1e-12)


def test_id_matches_direct_formula():
    rng = np.random.default_rng(7)
    h = sample_haar_truncated(make_dims(4, 6, 16), 3).entries
    s = spherical_gaussian_codeword(6, 12, 4)
    w = complex_gaussian(rng, (4, 12))
    z = SNR5
    y = h @ s + math.sqrt(z) * w
    k = h @ h.conj().T + z * np.eye(4)
    expected = (
        np.linalg.slogdet(np.eye(4) + h @ h.conj().T / z)[1] / 6
        + np.trace(np.linalg.inv(k) @ y @ y.conj().T).real / 72
        - np.trace(w @ w.conj().T).real / 72
    )
    assert information_density(h, s, w, z).info_density == pytest.approx(expected, rel=1e-12)


def test_id_shape_mismatch():
    with pytest.raises(DimensionError):
        information_density(np.zeros((2, 3)), np.zeros((4, 5)), np.zeros((2, 5)), 1.0)
    with pytest.raises(DimensionError):
        information_density(np.zeros((2, 3)), np.zeros((3, 5)), np.zeros((2, 4)), 1.0)


@pytest.fixture(scope="module")
def small_run():
    return run_clt_campaign(make_dims(4, 6, 16, 60), SNR5, 20_000, 11)


def test_campaign_reproducible_and_chunk_independent(small_run):
    d = make_dims(4, 6, 16, 60)
    a = run_clt_campaign(d, SNR5, 500, 3, chunk_size=64)
    b = run_clt_campaign(d, SNR5, 500, 3, chunk_size=500, workers=3)
    np.testing.assert_array_equal(a.info_density, b.info_density)
    np.testing.assert_array_equal(a.seeds, b.seeds)
    assert a.trials == b.trials


def test_campaign_record_matches_single_trial():
    d = make_dims(4, 6, 16, 60)
    run = run_clt_campaign(d, SNR5, 100, 5)
    rec = run.record(17)
    assert rec.seed == derive_seed(5, 17)
    assert rec.mi_term >= 0 and rec.trace_c_sq_over_m >= 0


def test_campaign_needs_trials():
    with pytest.raises(DomainError):
        run_clt_campaign(make_dims(4, 6, 16, 60), SNR5, 50, 1)


def test_campaign_moments(small_run):
    d = small_run.dims
    cbar = capacity_approx(d, SNR5).cbar
    comp = dispersion_components(d, SNR5)
    x = small_run.normalized(cbar)
    xi = np.mean([comp.realized_xi(t) for t in small_run.trace_c_sq_over_m])
    assert np.var(x) == pytest.approx(xi, rel=0.05)
    se = small_run.info_density.std() / math.sqrt(len(small_run))
    # finite-size shift of order 1/M^2 is added to the statistical band
    assert abs(small_run.info_density.mean() - cbar) < 3 * se + 1e-3


def test_empirical_cdf_queries(small_run):
    cbar = capacity_approx(small_run.dims, SNR5).cbar
    f = empirical_cdf(small_run, cbar, 1.0)
    assert f(-1e9) == 0.0 and f(1e9) == 1.0
    med = np.median(f.samples)
    assert abs(f(med) - 0.5) <= 1 / len(f)


def test_ks_distance_matches_scipy():
    x = np.random.default_rng(3).standard_normal(5000)
    assert ks_distance(x, stats.norm.cdf) == pytest.approx(stats.kstest(x, "norm").statistic, rel=1e-12)


def test_ks_two_sample_matches_scipy():
    rng = np.random.default_rng(4)
    a, b = rng.standard_normal(3000), rng.standard_normal(2000) + 0.05
    assert ks_two_sample(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, rel=1e-12)


def test_error_probability_extremes(small_run):
    d = small_run.dims
    cbar = capacity_approx(d, SNR5).cbar
    assert empirical_error_probability(d, SNR5, cbar + 10, 20_000, 0, run=small_run) == 1.0
    p = empirical_error_probability(d, SNR5, cbar, 20_000, 0, run=small_run)
    assert abs(p - 0.5) < 3 * math.sqrt(0.25 / 20_000) + 0.01


def test_capacity_mc_mean():
    d = make_dims(4, 6, 16)
    mi = mutual_information_samples(d, SNR5, 20_000, 2)
    se = mi.std() / math.sqrt(len(mi))
    assert abs(mi.mean() - capacity_approx(d, SNR5).cbar) < 3 * se + 1e-3


def test_resolvent_mc_close_to_deterministic():
    p = solve_general_resolvent(1.316, 0.316, 1.5, 1.0)
    mean, se = resolvent_trace_mc(1.316, 0.316, 32, 1.5, 1.0, 2000, 1)
    assert abs(mean - p.delta_ab) < 3 * se + 10 / 32**2


def test_resolvent_mc_homogeneity():
    m1, s1 = resolvent_trace_mc(1.316, 0.316, 16, 1.5, 1.0, 4000, 5)
    m2, s2 = resolvent_trace_mc(2.632, 0.632, 16, 1.5, 1.0, 4000, 5)
    # same seed, same draws: exact scaling
    assert m2 == pytest.approx(m1 / 2, rel=1e-12)
    m3, s3 = resolvent_trace_mc(2.632, 0.632, 16, 1.5, 1.0, 4000, 6)
    assert abs(m3 - m1 / 2) < 3 * math.hypot(s3, s1 / 2)


def test_resolvent_control_variates_shrink_error():
    plain = resolvent_trace_mc(1.316, 0.316, 8, 1.5, 1.0, 20_000, 2)
    cv = resolvent_trace_mc(1.316, 0.316, 8, 1.5, 1.0, 20_000, 2, control_variates=True)
    assert cv[1] < plain[1] / 2
    assert abs(cv[0] - plain[0]) < 3 * plain[1]


def test_resolvent_bias_rate_small_dims():
    # The O(N^-2) correction is resolvable at N = 4, 8 with control variates.
    delta = solve_general_resolvent(1.316, 0.316, 1.5, 1.0).delta_ab
    b4 = resolvent_trace_mc(1.316, 0.316, 4, 1.5, 1.0, 400_000, 3, control_variates=True)[0] - delta
    b8 = resolvent_trace_mc(1.316, 0.316, 8, 1.5, 1.0, 200_000, 3, control_variates=True)[0] - delta
    assert 2.5 < b4 / b8 < 6


def test_second_order_trace_mc():
    p = solve_general_resolvent(1.316, 0.316, 1.5, 1.0)
    q = solve_general_resolvent(2.0, 0.5, 1.5, 1.0)
    mean, se = second_order_trace_mc((1.316, 0.316), (2.0, 0.5), 32, 1.5, 1.0, 3000, 4)
    assert abs(mean - second_order_resolvent(p, q)) < 3 * se + 10 / 32**2


def test_resolvent_mc_domain():
    with pytest.raises(DomainError):
        resolvent_trace_mc(0.3, 1.3, 8, 1.5, 1.0, 10, 1)
