"""Time integration of the damped spin flow

    dm/dt = lam (Lap m + |grad m|^2 m) - m x Lap m,   |m| = 1,

on the periodic box, with energy-law, Sobolev-norm and two-trajectory
stability monitors. Spatial operators are spectral with 2/3-rule
dealiasing of pointwise products; the sphere constraint is enforced by
pointwise renormalization after each step.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUpSuspected, NonFinite, ProjectionDegenerate
from .grid import GridSpec, SpectralWorkspace, get_workspace
from .monitor import NormSeries

DEFAULT_UNIT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class SpinField:
    """Unit 3-vector field m with far-field value m_inf.

    m has shape (3, *grid.shape); |m| = 1 pointwise to within the stated
    tolerance after every public operation.
    """

    m: np.ndarray
    m_inf: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        m_inf = np.asarray(self.m_inf, dtype=float)
        if m.shape != (3,) + self.grid.shape:
            raise ValueError(f"m must have shape (3, *grid.shape), got {m.shape}")
        if m_inf.shape != (3,):
            raise ValueError("m_inf must be a 3-vector")
        if abs(np.linalg.norm(m_inf) - 1.0) > 1e-12:
            raise ValueError("m_inf must be a unit vector")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "m_inf", m_inf)

    def unit_defect(self) -> float:
        """max | |m| - 1 | over the grid."""
        return float(np.max(np.abs(np.sqrt(np.sum(self.m**2, axis=0)) - 1.0)))

    def validate(self, tolerance=1e-10) -> None:
        if not np.all(np.isfinite(self.m)):
            raise NonFinite("spin field contains NaN or Inf")
        defect = self.unit_defect()
        if defect > tolerance:
            raise ValueError(f"|m| deviates from 1 by {defect:.3e} > {tolerance:.0e}")

    def deviation(self) -> np.ndarray:
        """m - m_inf, the field with far-field value zero."""
        return self.m - self.m_inf.reshape((3,) + (1,) * self.grid.dimension)

    def workspace(self) -> SpectralWorkspace:
        return get_workspace(self.grid)


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping parameters.

    scheme 'imex' advances the stiff linear part lam*Lap exactly through
    the Fourier multiplier e^{-lam |k|^2 dt} (applied to the deviation
    from m_inf; the zero mode is untouched either way) and the remaining
    terms by an explicit Euler increment inside the multiplier
    (Lawson-type exponential Euler, first order). scheme 'rk4' is classic
    explicit RK4 on the full right-hand side. Both project back to the
    sphere after the step.
    """

    lam: float
    dt: float
    t_end: float
    scheme: str = "imex"
    projection_tolerance: float = 1e-10
    record_every: int = 1
    snapshot_every: int = 10
    grad_ceiling: float | None = None  # default 1e3 / h at run time

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("damping lam must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least dt")
        if self.scheme not in ("imex", "rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.record_every < 1 or self.snapshot_every < 1:
            raise ValueError("record_every and snapshot_every must be >= 1")


@dataclass
class Trajectory:
    """Snapshots plus the densely recorded norm series of one run."""

    grid: GridSpec
    m_inf: np.ndarray
    lam: float
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    series: NormSeries | None = None
    config: SolverConfig | None = None

    def snapshot(self, i: int) -> SpinField:
        return SpinField(m=self.fields[i], m_inf=self.m_inf, grid=self.grid)

    def final(self) -> SpinField:
        return self.snapshot(len(self.fields) - 1)

    def __len__(self) -> int:
        return len(self.fields)


# -- right-hand side ---------------------------------------------------------


def _nonlinear_hat(ws: SpectralWorkspace, m, mhat, lam):
    """Half-spectrum transform of lam |grad m|^2 m - m x Lap m, dealiased.

    |grad m|^2 is truncated before the triple product; the assembled
    nonlinearity is truncated once more. mhat is the rfft of m.
    """
    kb = ws.rk[:, None]  # broadcast over the 3 spin components
    grad = ws.irfft(1j * kb * mhat[None])  # (n, 3, *shape)
    lap = ws.irfft(-ws.rk2 * mhat)
    p = np.sum(grad * grad, axis=(0, 1))
    p = ws.irfft(ws.rdealias_mask * ws.rfft(p))
    nonlin = lam * p * m - np.cross(m, lap, axis=0)
    return ws.rdealias_mask * ws.rfft(nonlin)


def rhs_llg(sf: SpinField, lam: float) -> np.ndarray:
    """Right-hand side lam (Lap m + |grad m|^2 m) - m x Lap m.

    Computed spectrally with dealiased products; for unit m the result is
    pointwise tangent to m. Inputs violating |m| = 1 beyond 1e-6 are
    rejected.
    """
    sf.validate(DEFAULT_UNIT_TOLERANCE)
    return _rhs_raw(sf.workspace(), sf.m, lam)


def _rhs_raw(ws: SpectralWorkspace, m, lam):
    """rhs on a bare array without unit-length validation (RK4 stages)."""
    mhat = ws.rfft(m)
    nhat = _nonlinear_hat(ws, m, mhat, lam)
    return ws.irfft(-lam * ws.rk2 * mhat + nhat)


def _project(m, time=None):
    modulus = np.sqrt(np.sum(m**2, axis=0))
    if not np.all(np.isfinite(modulus)):
        raise NonFinite(f"NaN/Inf during step at t={time}")
    min_mod = float(np.min(modulus))
    if min_mod < 0.5:
        raise ProjectionDegenerate(
            f"pointwise modulus fell to {min_mod:.3f} < 0.5 at t={time}",
            time=time,
            min_modulus=min_mod,
        )
    defect = float(np.max(np.abs(modulus - 1.0)))
    return m / modulus, defect


def _step_array(ws, m, cfg: SolverConfig, time=None):
    """Advance a bare m array one step; returns (m_new, pre-projection defect)."""
    lam, dt = cfg.lam, cfg.dt
    if cfg.scheme == "imex":
        mhat = ws.rfft(m)
        nhat = _nonlinear_hat(ws, m, mhat, lam)
        decay = ws.decay_multiplier(lam, dt)
        m_new = ws.irfft(decay * (mhat + dt * nhat))
    else:  # rk4
        k1 = _rhs_raw(ws, m, lam)
        k2 = _rhs_raw(ws, m + 0.5 * dt * k1, lam)
        k3 = _rhs_raw(ws, m + 0.5 * dt * k2, lam)
        k4 = _rhs_raw(ws, m + dt * k3, lam)
        m_new = m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _project(m_new, time=time)


def step(sf: SpinField, cfg: SolverConfig) -> SpinField:
    """One time step of the selected scheme, projected back to the sphere."""
    sf.validate(DEFAULT_UNIT_TOLERANCE)
    ws = sf.workspace()
    m_new, _ = _step_array(ws, sf.m, cfg)
    return replace(sf, m=m_new)


# -- diagnostics --------------------------------------------------------------


def energy(sf: SpinField) -> float:
    """Dirichlet energy (1/2) sum |grad m|^2 h^n."""
    sf.validate(DEFAULT_UNIT_TOLERANCE)
    ws = sf.workspace()
    grad = ws.gradient(sf.m)
    return 0.5 * ws.lp_norm(grad, 2) ** 2


def _record_row(ws, sf, lam):
    n = ws.grid.dimension
    grad = ws.gradient(sf.m)
    dev = sf.deviation()
    rhs = _rhs_raw(ws, sf.m, lam)
    return {
        "E": 0.5 * ws.lp_norm(grad, 2) ** 2,
        "linf_grad": ws.lp_norm(grad, np.inf),
        "ln_grad": ws.lp_norm(grad, n),
        "h1_dev": ws.sobolev_norm(dev, 1),
        "linf_dev": ws.lp_norm(dev, np.inf),
        "dm_l2": ws.lp_norm(rhs, 2),
    }


def evolve(sf0: SpinField, cfg: SolverConfig) -> Trajectory:
    """Run the flow to t_end, recording norms and field snapshots.

    Norm rows are recorded every `record_every` steps, field snapshots
    every `snapshot_every` records (both always include t = 0 and the
    final time). Raises BlowUpSuspected when ||grad m||_inf crosses the
    resolvability ceiling (default 1e3 / h, checked at record times), and
    surfaces ProjectionDegenerate / NonFinite with the failure time; the
    partial trajectory is attached to BlowUpSuspected.
    """
    sf0.validate(DEFAULT_UNIT_TOLERANCE)
    ws = sf0.workspace()
    ceiling = cfg.grad_ceiling
    if ceiling is None:
        ceiling = 1e3 / sf0.grid.spacing

    n_steps = int(round(cfg.t_end / cfg.dt))
    traj = Trajectory(grid=sf0.grid, m_inf=sf0.m_inf, lam=cfg.lam, config=cfg)
    rec_times = [0.0]
    rows = [_record_row(ws, sf0, cfg.lam)]
    rows[0]["unit_defect"] = sf0.unit_defect()
    traj.times.append(0.0)
    traj.fields.append(sf0.m.copy())

    m = sf0.m
    records_seen = 0
    for i in range(1, n_steps + 1):
        t = i * cfg.dt
        try:
            m, defect = _step_array(ws, m, cfg, time=t)
        except (ProjectionDegenerate, NonFinite):
            traj.series = _finalize_series(rec_times, rows)
            raise
        if i % cfg.record_every == 0 or i == n_steps:
            records_seen += 1
            sf = SpinField(m=m, m_inf=sf0.m_inf, grid=sf0.grid)
            row = _record_row(ws, sf, cfg.lam)
            row["unit_defect"] = defect
            rec_times.append(t)
            rows.append(row)
            if records_seen % cfg.snapshot_every == 0 or i == n_steps:
                traj.times.append(t)
                traj.fields.append(m.copy())
            if row["linf_grad"] > ceiling:
                traj.series = _finalize_series(rec_times, rows)
                raise BlowUpSuspected(
                    f"||grad m||_inf = {row['linf_grad']:.3e} exceeded the "
                    f"ceiling {ceiling:.3e} at t={t:.6g}",
                    time=t,
                    trajectory=traj,
                )
    traj.series = _finalize_series(rec_times, rows)
    return traj


def _finalize_series(times, rows):
    cols = {key: np.array([r[key] for r in rows]) for key in rows[0]}
    return NormSeries(times=np.asarray(times), columns=cols)


def energy_law_residual(traj: Trajectory):
    """Residual of (1 + lam^2) dE/dt + lam ||dm/dt||_2^2 at interior samples.

    dE/dt uses centered differences of the recorded energies; dm/dt was
    evaluated as the spatial right-hand side at record time, so the
    residual isolates time-discretization error from identity error.
    Returns (times, residuals).
    """
    s = traj.series
    if s is None or len(s.times) < 3:
        raise ValueError("need a trajectory with at least 3 recorded samples")
    t = s.times
    E = s["E"]
    dm2 = s["dm_l2"] ** 2
    dEdt = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
    res = np.abs((1.0 + traj.lam**2) * dEdt + traj.lam * dm2[1:-1])
    return t[1:-1], res


def _fit_gronwall_rate(log_ratio, growth, n_fit):
    """Nonnegative least-squares slope of log_ratio against growth.

    The envelope is a one-sided upper bound, so a negative fitted rate
    (decaying data) is clipped to zero.
    """
    g = growth[1:n_fit]
    z = log_ratio[1:n_fit]
    if g.size == 0 or np.sum(g**2) == 0:
        return 0.0
    return float(max(0.0, np.sum(g * z) / np.sum(g**2)))


def _cumtrapz(y, t):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


@dataclass
class SobolevMonitorReport:
    times: np.ndarray
    hs_minus1_sq: np.ndarray  # ||grad m||_{H^{sigma-1}}^2
    hs_sq: np.ndarray  # ||grad m||_{H^sigma}^2
    linf_grad: np.ndarray
    envelope: np.ndarray
    fitted_rate: float
    violations: np.ndarray  # bool mask, 5% slack


def sobolev_monitor(traj: Trajectory, sigma: int) -> SobolevMonitorReport:
    """Track ||grad m||_{H^{sigma-1}}^2 against its Gronwall envelope.

    The envelope is exp(c * int (1 + ||grad m||_inf^2)) times the initial
    value, with c fitted (nonnegative least squares) on the first quarter
    of the snapshots and tested on the rest.
    """
    if sigma < 2:
        raise ValueError("sigma must be >= 2")
    ws = get_workspace(traj.grid)
    times = np.asarray(traj.times)
    a = np.empty(len(traj))
    b = np.empty(len(traj))
    g_inf = np.empty(len(traj))
    for i in range(len(traj)):
        grad = ws.gradient(traj.fields[i])
        a[i] = ws.sobolev_norm(grad, sigma - 1) ** 2
        b[i] = ws.sobolev_norm(grad, sigma) ** 2
        g_inf[i] = ws.lp_norm(grad, np.inf)
    growth = _cumtrapz(1.0 + g_inf**2, times)
    if a[0] > 0:
        log_ratio = np.log(np.maximum(a, 1e-300) / a[0])
        n_fit = max(2, len(times) // 4)
        c = _fit_gronwall_rate(log_ratio, growth, n_fit)
        envelope = a[0] * np.exp(c * growth)
    else:
        c = 0.0
        envelope = np.zeros_like(a)
    violations = a > envelope * 1.05 + 1e-300
    return SobolevMonitorReport(
        times=times,
        hs_minus1_sq=a,
        hs_sq=b,
        linf_grad=g_inf,
        envelope=envelope,
        fitted_rate=c,
        violations=violations,
    )


@dataclass
class StabilityReport:
    times: np.ndarray
    dist_sq: np.ndarray
    envelope: np.ndarray
    fitted_rate: float
    violations: np.ndarray
    nonincreasing: bool


def stability_distance(traj1: Trajectory, traj2: Trajectory) -> StabilityReport:
    """||m1 - m2||_2^2 per shared snapshot, with its Gronwall envelope.

    The envelope rate multiplies int sum_i ||grad m_i||_inf^2 ds and is
    fitted on the first quarter (clipped nonnegative), then tested on the
    remainder. In the small-gradient regime the distance itself should be
    non-increasing, which the report also records.
    """
    if traj1.grid != traj2.grid or abs(traj1.lam - traj2.lam) > 1e-15:
        raise ValueError("trajectories must share grid and damping")
    t1 = np.asarray(traj1.times)
    t2 = np.asarray(traj2.times)
    if t1.shape != t2.shape or np.max(np.abs(t1 - t2)) > 1e-12:
        raise ValueError("trajectories must share snapshot times")
    ws = get_workspace(traj1.grid)
    d = np.array(
        [ws.lp_norm(traj1.fields[i] - traj2.fields[i], 2) ** 2 for i in range(len(t1))]
    )
    s1, s2 = traj1.series, traj2.series
    g_dense = s1["linf_grad"] ** 2 + s2["linf_grad"] ** 2
    g_cum_dense = _cumtrapz(g_dense, s1.times)
    growth = np.interp(t1, s1.times, g_cum_dense)
    if d[0] > 0:
        log_ratio = np.log(np.maximum(d, 1e-300) / d[0])
        c = _fit_gronwall_rate(log_ratio, growth, max(2, len(t1) // 4))
        envelope = d[0] * np.exp(c * growth)
    else:
        c = 0.0
        envelope = np.zeros_like(d)
    violations = d > envelope * 1.05 + 1e-300
    nonincreasing = bool(np.all(np.diff(d) <= 1e-12 * max(d[0], 1e-300)))
    return StabilityReport(
        times=t1,
        dist_sq=d,
        envelope=envelope,
        fitted_rate=c,
        violations=violations,
        nonincreasing=nonincreasing,
    )


@dataclass
class LocalEnergyReport:
    lhs: float
    rhs_over_r2: float
    implied_c: float
    n_snapshots_used: int


def local_energy_check(traj: Trajectory, center, radius: float) -> LocalEnergyReport:
    """Both sides of the localized energy inequality on a space-time cylinder.

    The cylinder P_r(z0) is (t0, t0 + r^2) x B_r(x0) with periodic balls.
    The left side combines the boundary-in-time gradient energy on the
    half ball (at the snapshot nearest t0 + (r/2)^2) with the time-volume
    integral of |dm/dt|^2 over the half cylinder; dm/dt is the spatial
    right-hand side at each snapshot. Quadrature is trapezoid in time over
    the recorded snapshots inside the window.
    """
    t0, x0 = float(center[0]), np.asarray(center[1], dtype=float)
    r = float(radius)
    grid = traj.grid
    if x0.shape != (grid.dimension,):
        raise ValueError("center position must have one coordinate per dimension")
    if 2 * r > grid.box_length:
        raise ValueError("ball diameter exceeds the box")
    times = np.asarray(traj.times)
    t_top = t0 + r**2
    if t0 < times[0] - 1e-12 or t_top > times[-1] + 1e-12:
        raise ValueError(
            f"cylinder window [{t0}, {t_top}] not covered by snapshots "
            f"[{times[0]}, {times[-1]}]"
        )
    ws = get_workspace(grid)

    # periodic min-image distance to x0
    delta = ws.x - x0.reshape((grid.dimension,) + (1,) * grid.dimension)
    delta = (delta + grid.box_length / 2) % grid.box_length - grid.box_length / 2
    dist2 = np.sum(delta**2, axis=0)
    ball_r = dist2 <= r**2
    ball_half = dist2 <= (r / 2) ** 2

    sel = np.where((times >= t0 - 1e-12) & (times <= t_top + 1e-12))[0]
    if sel.size < 2:
        raise ValueError("need at least 2 snapshots inside the cylinder window")
    hv = grid.cell_volume

    grad_ball = np.empty(sel.size)
    dm_half = np.empty(sel.size)
    grad_half_at = {}
    for j, idx in enumerate(sel):
        m = traj.fields[idx]
        grad = ws.gradient(m)
        gsq = np.sum(grad**2, axis=(0, 1))
        grad_ball[j] = np.sum(gsq[ball_r]) * hv
        grad_half_at[idx] = np.sum(gsq[ball_half]) * hv
        rhs = _rhs_raw(ws, m, traj.lam)
        dm_half[j] = np.sum(np.sum(rhs**2, axis=0)[ball_half]) * hv

    t_sel = times[sel]
    rhs_int = np.trapezoid(grad_ball, t_sel)

    t_half_top = t0 + (r / 2) ** 2
    half_mask = t_sel <= t_half_top + 1e-12
    if np.count_nonzero(half_mask) < 2:
        raise ValueError("need at least 2 snapshots inside the half cylinder")
    lhs_time = np.trapezoid(dm_half[half_mask], t_sel[half_mask])
    idx_top = sel[np.argmin(np.abs(t_sel - t_half_top))]
    lhs_boundary = grad_half_at[idx_top]

    lhs = lhs_boundary + lhs_time
    rhs_over_r2 = rhs_int / r**2
    implied_c = lhs / rhs_over_r2 if rhs_over_r2 > 0 else 0.0
    return LocalEnergyReport(
        lhs=float(lhs),
        rhs_over_r2=float(rhs_over_r2),
        implied_c=float(implied_c),
        n_snapshots_used=int(sel.size),
    )
