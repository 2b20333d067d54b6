"""Weighted-in-time norms, the bootstrap comparison and decay rates.

Along a small-data run we track K(t) = sup tau^{(1-delta)/2} ||u||_{n/delta},
K'(t) = sup tau^{1/2} ||grad u||_n and R = max(K, K'), together with the
same quantities R0 for the purely linear evolution S(t) u(0). Small data
sits in the regime R <= 2 R0. The sup-in-time bound constant and the
decay rate of ||m - m_inf||_inf (fitted before the spectral-gap time,
after which the box forces exponential decay) round out the picture.
"""

import numpy as np

from llgflow import (
    GridSpec,
    ScenarioSpec,
    SolverConfig,
    check_bootstrap,
    check_decay_bound,
    check_theorem_bounds,
    evolve,
    extract_gauged,
    make_initial,
    r0_series,
    spectral_gap_time,
    u_norm_series,
    weighted_norms,
)

lam, delta = 1.0, 0.62
grid = GridSpec(dimension=3, points_per_axis=32, box_length=2 * np.pi)

sf = make_initial(ScenarioSpec(kind="random-small", kmax=1, seed=31, target_grad_ln=0.05), grid)
cfg = SolverConfig(lam=lam, dt=1e-3, t_end=0.5, record_every=10, snapshot_every=1)
traj = evolve(sf, cfg)

series = u_norm_series(traj, delta)
K, Kp, R = weighted_norms(series, delta)
u0 = extract_gauged(traj.snapshot(0), lam).derived.u
r0 = r0_series(u0, series.times, delta, lam, grid)
series.add_column("R", R)
series.add_column("R0", r0.R0)

print("   t       K(t)       K'(t)      R(t)       R0(t)")
for i in range(0, len(series.times), 10):
    t = series.times[i]
    print(f"  {t:4.2f}   {K[i]:.3e}  {Kp[i]:.3e}  {R[i]:.3e}  {r0.R0[i]:.3e}")

boot = check_bootstrap(series, delta)
print(f"\nbootstrap R <= 2 R0: {'holds' if boot.ok else 'violated'} "
      f"(worst margin {boot.worst_margin:.3e})")
print(f"linear-bound constant sup R0 / ||u(0)||_n = {r0.fitted_c:.3f}")

rep = check_theorem_bounds(series)
print(f"sup_t (sqrt(t) ||u||_inf + ||u||_n) / ||u(0)||_n = {rep.c_u:.3f}")
print(f"||m - m_inf||_H1 non-increasing: {rep.h1_nonincreasing}")

t_gap = spectral_gap_time(grid, lam)
dec = check_decay_bound(series, "linf_dev", (0.1, t_gap / 2), grid, lam)
print(f"\ndecay fit on [0.1, {t_gap / 2}] (gap time {t_gap:.2f}): "
      f"exponent {dec.fit.exponent:.3f} vs target <= {dec.target_exponent + 0.05:.3f}")
