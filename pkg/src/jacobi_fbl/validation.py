"""Self-contained validation suites used by ``jacobi-fbl validate``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import dispersion_components, gallager_comparison, rayleigh_dispersion, std_normal_cdf
from .montecarlo import ks_distance, resolvent_trace_mc, run_clt_campaign
from .spectral import (
    capacity_approx,
    make_dims,
    normalized_noise_power,
    rayleigh_branch_delta,
    snr_db_to_noise_power,
    solve_delta,
    solve_general_resolvent,
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def resolvent_suite(trials: int = 10_000, seed: int = 7, dim_n: int = 64) -> list[Check]:
    a, b, c1, c2 = 1.316, 0.316, 1.5, 1.0
    delta = solve_general_resolvent(a, b, c1, c2).delta_ab
    mean, se = resolvent_trace_mc(a, b, dim_n, c1, c2, trials, seed)
    slack = 3 * se + 10 / dim_n**2
    checks = [
        Check(
            f"resolvent trace N={dim_n}",
            abs(mean - delta) < slack,
            f"|{mean:.6f} - {delta:.6f}| = {abs(mean - delta):.2e} vs {slack:.2e}",
        )
    ]
    mean2, se2 = resolvent_trace_mc(2 * a, 2 * b, dim_n, c1, c2, trials, seed + 1)
    gap = abs(mean2 - mean / 2)
    tol = 3 * math.hypot(se2, se / 2)
    checks.append(Check("homogeneity G(2a,2b) = G(a,b)/2", gap < tol, f"gap {gap:.2e} vs {tol:.2e}"))
    return checks


def clt_suite(trials: int = 100_000, seed: int = 7) -> list[Check]:
    dims = make_dims(4, 6, 16, 60)
    sigma2 = snr_db_to_noise_power(5.0)
    cbar = capacity_approx(dims, sigma2).cbar
    comp = dispersion_components(dims, sigma2)
    run = run_clt_campaign(dims, sigma2, trials, seed)
    x = run.normalized(cbar)
    xi = float(np.mean(comp.beta * comp.v1 + comp.v2 + run.trace_c_sq_over_m * comp.beta * comp.v3))
    ratio = float(np.var(x)) / xi
    ks = ks_distance(x / math.sqrt(xi), np.vectorize(std_normal_cdf))
    return [
        Check("variance vs realized Xi", abs(ratio - 1) < 0.05, f"ratio {ratio:.4f}"),
        Check("KS vs standard normal", ks < 0.03, f"KS {ks:.4f}"),
    ]


def rayleigh_suite() -> list[Check]:
    norm_noise = snr_db_to_noise_power(10.0)
    limit = rayleigh_dispersion(2.0, 4.5, norm_noise)
    target = rayleigh_branch_delta(2.0, norm_noise)
    gaps_d, gaps_v3 = [], []
    for n in (128, 512, 2048):
        dims = make_dims(16, 8, n, 36)
        sigma2 = normalized_noise_power(dims, norm_noise)
        gaps_d.append(abs(solve_delta(dims, sigma2) - target))
        gaps_v3.append(abs(dispersion_components(dims, sigma2).v3 - limit.v3))
    out = []
    for label, gaps in (("delta", gaps_d), ("V3", gaps_v3)):
        ok = gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-3
        out.append(Check(f"{label} -> Rayleigh limit", ok, ", ".join(f"{g:.2e}" for g in gaps)))
    return out


def gallager_suite(points: int = 50, seed: int = 7) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst_omega = worst_identity = 0.0
    for _ in range(points):
        m = int(rng.integers(1, 40))
        big_n = int(rng.integers(1, m + 1))
        dims = make_dims(big_n, m, big_n + m, int(rng.integers(1, 200)))
        sigma2 = 10 ** rng.uniform(-2, 2)
        g = gallager_comparison(dims, sigma2)
        xi_plus = dispersion_components(dims, sigma2).xi_plus
        worst_omega = max(worst_omega, abs(g.omega - g.omega_closed_form))
        worst_identity = max(
            worst_identity,
            abs(g.xi_plus_over_beta - (g.e_g - g.omega**2 / dims.beta)),
            abs(g.xi_plus_over_beta - xi_plus / dims.beta),
        )
    return [
        Check("omega closed forms agree", worst_omega < 1e-12, f"max gap {worst_omega:.1e}"),
        Check("Xi+/beta = E_G - omega^2/beta", worst_identity < 1e-12, f"max gap {worst_identity:.1e}"),
    ]


SUITES = {
    "lemma1": lambda trials, seed: resolvent_suite(trials or 10_000, seed),
    "clt": lambda trials, seed: clt_suite(trials or 100_000, seed),
    "rayleigh": lambda trials, seed: rayleigh_suite(),
    "gallager": lambda trials, seed: gallager_suite(seed=seed),
}
