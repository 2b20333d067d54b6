"""Moving-frame extraction and its exact identities.

An orthonormal tangent frame {X, Y} along m turns derivatives of m into a
complex field u and a real connection a. Three identities must hold for
any smooth field: zero torsion D_k u_l = D_l u_k, the curvature relation
d_k a_l - d_l a_k = Im(u_k conj(u_l)), and the time-component relation
u_0 = (lam - i) sum_k D_k u_k. On the grid they hold up to spectral
truncation, so the residuals collapse when the resolution doubles.
"""

import numpy as np

from llgflow import (
    GridSpec,
    ScenarioSpec,
    SolverConfig,
    construct_frame,
    derive_connection,
    evolve,
    make_initial,
    verify_curvature,
    verify_torsion,
    verify_u0_consistency,
)

lam = 1.0
print("evolve the same rough initial data at two resolutions, then extract\n"
      "the frame at t = 0.04 and measure the identity residuals:\n")
print("   N    torsion      curvature    u0-consistency")
rows = {}
for n_pts in (32, 64):
    grid = GridSpec(dimension=3, points_per_axis=n_pts, box_length=2 * np.pi)
    sf = make_initial(ScenarioSpec(kind="random-small", amplitude=0.1, kmax=3, seed=11), grid)
    cfg = SolverConfig(lam=lam, dt=4e-4, t_end=0.04, record_every=10**6, snapshot_every=1)
    snap = evolve(sf, cfg).final()
    frame = construct_frame(snap)
    conn, der = derive_connection(snap, frame, lam)
    rows[n_pts] = (
        verify_torsion(der, conn),
        verify_curvature(der, conn),
        verify_u0_consistency(der, conn, lam).residual,
    )
    print(f"  {n_pts:3d}   {rows[n_pts][0]:.3e}   {rows[n_pts][1]:.3e}   {rows[n_pts][2]:.3e}")

ratios = [a / b for a, b in zip(rows[32], rows[64])]
print(f"\nrefinement ratios: {[f'{r:.1e}' for r in ratios]} (spectral collapse)")
