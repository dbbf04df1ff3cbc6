"""
Large-coupler limit
===================

With the noise scaled as (M/n) times a fixed value, the Jacobi-channel
quantities approach their i.i.d. Rayleigh counterparts as the number of
available ports n grows.
"""
# %%
from jacobi_fbl.bounds import dispersion_components, rayleigh_dispersion
from jacobi_fbl.spectral import (
    capacity_approx,
    make_dims,
    normalized_noise_power,
    rayleigh_branch_delta,
    snr_db_to_noise_power,
    solve_delta,
)

norm_noise = snr_db_to_noise_power(10.0)
limit = rayleigh_dispersion(2.0, 4.5, norm_noise)
target = rayleigh_branch_delta(2.0, norm_noise)
print(f"Rayleigh limits: C {limit.cbar:.5f}  V1 {limit.v1:.5f}  V2 {limit.v2:.5f}  V3 {limit.v3:.5f}")

# %%
print("\n    n   |delta gap|   |C gap|    |V3 gap|")
for n in (32, 128, 512, 2048, 8192):
    d = make_dims(16, 8, n, 36)
    z = normalized_noise_power(d, norm_noise)
    comp = dispersion_components(d, z)
    print(
        f"{n:5d}  {abs(solve_delta(d, z) - target):.3e}  "
        f"{abs(capacity_approx(d, z).cbar - limit.cbar):.3e}  {abs(comp.v3 - limit.v3):.3e}"
    )
