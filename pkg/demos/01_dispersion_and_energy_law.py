"""Linearized dispersion and the energy law.

A small transverse wave on top of the uniform state evolves, to leading
order, like dpsi/dt = (lam - i) Lap psi: its single Fourier mode should
decay by e^{-lam |k|^2 t} while the phase advances by |k|^2 t. We run the
full nonlinear flow and compare against that exact linear solution, then
check the energy law (1 + lam^2) dE/dt = -lam ||dm/dt||_2^2 on the same
trajectory.
"""

import numpy as np

from llgflow import (
    GridSpec,
    ScenarioSpec,
    SolverConfig,
    energy_law_residual,
    evolve,
    get_workspace,
    make_initial,
)

lam = 1.0
grid = GridSpec(dimension=3, points_per_axis=32, box_length=2 * np.pi)
ws = get_workspace(grid)

eps = 1e-3
sf = make_initial(ScenarioSpec(kind="linear-wave", amplitude=eps, wavevector=(1, 0, 0)), grid)
print(f"initial wave: amplitude {eps}, |k|^2 = 1, lam = {lam}")

cfg = SolverConfig(lam=lam, dt=1e-3, t_end=1.0, record_every=50, snapshot_every=4)
traj = evolve(sf, cfg)

mode = np.exp(-1j * ws.x[0])
psi0 = np.mean((sf.m[0] + 1j * sf.m[1]) * mode)
print("\n   t      amplitude/exact      phase error (rad)")
for i, t in enumerate(traj.times):
    if t == 0:
        continue
    m = traj.fields[i]
    psi = np.mean((m[0] + 1j * m[1]) * mode)
    target = psi0 * np.exp((1j - lam) * t)
    print(f"  {t:4.2f}   {abs(psi) / abs(target):14.6f}   {np.angle(psi / target):18.2e}")

t_res, res = energy_law_residual(traj)
norm = lam * traj.series["dm_l2"][1:-1] ** 2
print(f"\nenergy-law residual (normalized): max {np.max(res / norm):.2e}")
print("the identity holds up to the first-order time-discretization error")
