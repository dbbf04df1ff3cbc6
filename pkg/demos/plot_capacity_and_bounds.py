"""
Capacity and finite-blocklength bounds
======================================

Deterministic capacity approximation of a 4 x 6 block of a 16-port
lossless coupler, then the error-probability bounds at a fixed rate as
the blocklength grows.
"""
# %%
import numpy as np

from jacobi_fbl.bounds import dispersion_components, error_probability_bounds
from jacobi_fbl.spectral import capacity_approx, make_dims, snr_db_to_noise_power

dims = make_dims(4, 6, 16)
for snr_db in np.arange(-5.0, 26.0, 5.0):
    sol = capacity_approx(dims, snr_db_to_noise_power(snr_db))
    print(f"SNR {snr_db:5.1f} dB  delta {sol.delta:.5f}  C̄ {sol.cbar:.5f} nat/s/Hz per tx antenna")

# %%
# Bounds at R = 0.37 and 5 dB. The outage probability is the long-block limit.
z = snr_db_to_noise_power(5.0)
print("\n beta      L    lower     upper    outage")
for beta in (2, 6, 10, 14, 18, 22):
    d = make_dims(4, 6, 16, 6 * beta)
    ev = error_probability_bounds(d, z, 0.37)
    print(f"{beta:5d} {d.blocklen:6d}  {ev.lower_bound:.5f}  {ev.upper_bound:.5f}  {ev.outage:.5f}")

# %%
comp = dispersion_components(make_dims(4, 6, 16, 60), z)
print(f"\nV1 {comp.v1:.5f}  V2 {comp.v2:.5f}  V3 {comp.v3:.5f}  Xi- {comp.xi_minus:.5f}  Xi+ {comp.xi_plus:.5f}")
