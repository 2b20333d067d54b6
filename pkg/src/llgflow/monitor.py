"""Time-series records and the weighted-in-time norm monitors.

A NormSeries carries one row per recorded sample time: energy, gradient
norms, deviation norms and (once a frame extraction has run) the norms of
the complex derivative field u. On top of it this module computes the
weighted quantities

    K(t)  = sup_{tau<=t} tau^{(1-delta)/2} ||u(tau)||_{L^{n/delta}}
    K'(t) = sup_{tau<=t} tau^{1/2}         ||grad u(tau)||_{L^n}
    R(t)  = max(K, K')

their linear-evolution counterpart R0, the bootstrap comparison
R <= 2 R0, the sup-in-time bound constants, and log-log decay-rate fits.

Suprema are taken over recorded samples only; sampling density is a
config knob, not an interpolation problem.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, get_workspace

# Leading CSV columns, in order, when present.
_CANONICAL = ("E", "linf_grad", "ln_grad", "h1_dev")


@dataclass
class NormSeries:
    """Per-sample-time records of norms along a trajectory."""

    times: np.ndarray
    columns: dict = field(default_factory=dict)
    delta: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("sample times must be strictly increasing")
        for name, vals in self.columns.items():
            vals = np.asarray(vals, dtype=float)
            if vals.shape != self.times.shape:
                raise ValueError(f"column {name!r} length does not match times")
            self.columns[name] = vals

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def add_column(self, name: str, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != self.times.shape:
            raise ValueError(f"column {name!r} length does not match times")
        self.columns[name] = values

    def column_names(self):
        ordered = [c for c in _CANONICAL if c in self.columns]
        ordered += [c for c in self.columns if c not in _CANONICAL]
        return ordered

    def to_csv(self, target) -> None:
        """Write RFC-4180 CSV; delta is echoed in every row when set."""
        own = isinstance(target, (str, bytes)) or hasattr(target, "__fspath__")
        fh = open(target, "w", newline="") if own else target
        try:
            names = self.column_names()
            writer = csv.writer(fh)
            header = ["t"] + names + (["delta"] if self.delta is not None else [])
            writer.writerow(header)
            for i, t in enumerate(self.times):
                row = [repr(float(t))] + [repr(float(self.columns[c][i])) for c in names]
                if self.delta is not None:
                    row.append(repr(float(self.delta)))
                writer.writerow(row)
        finally:
            if own:
                fh.close()

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, source) -> "NormSeries":
        own = isinstance(source, (str, bytes)) or hasattr(source, "__fspath__")
        fh = open(source, "r", newline="") if own else source
        try:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader if row]
        finally:
            if own:
                fh.close()
        data = np.array(rows, dtype=float)
        if data.size == 0:
            raise ValueError("empty CSV series")
        cols = {name: data[:, j] for j, name in enumerate(header)}
        times = cols.pop("t")
        delta = None
        if "delta" in cols:
            delta_col = cols.pop("delta")
            delta = float(delta_col[0])
        return cls(times=times, columns=cols, delta=delta)


@dataclass
class DecayFit:
    """Result of a log-log least-squares fit value ~ constant * t^exponent."""

    exponent: float
    constant: float
    window: tuple
    residual: float


def _require_delta(delta, lo=0.5, hi=1.0):
    if not (lo < delta < hi):
        raise ValueError(f"delta must lie in ({lo}, {hi}), got {delta}")


def weighted_norms(series: NormSeries, delta: float):
    """Running suprema K(t), K'(t), R(t) over the recorded samples.

    Requires the u-columns 'u_lnd' (||u||_{L^{n/delta}}) and 'u_grad_ln'
    (||grad u||_{L^n}). The t = 0 sample contributes zero weight.
    """
    _require_delta(delta)
    if series.delta is not None and abs(series.delta - delta) > 1e-12:
        raise ValueError(
            f"series was recorded at delta={series.delta}, asked for {delta}"
        )
    t = series.times
    wk = np.where(t > 0, t, 0.0) ** ((1.0 - delta) / 2.0) * series["u_lnd"]
    wkp = np.where(t > 0, t, 0.0) ** 0.5 * series["u_grad_ln"]
    K = np.maximum.accumulate(wk)
    Kp = np.maximum.accumulate(wkp)
    R = np.maximum(K, Kp)
    return K, Kp, R


@dataclass
class R0Series:
    times: np.ndarray
    R0: np.ndarray
    K0: np.ndarray
    K0p: np.ndarray
    fitted_c: float
    u0_ln: float


def r0_series(u0, times, delta: float, lam: float, grid: GridSpec) -> R0Series:
    """Weighted norms of the purely linear evolution S(t) u0.

    Also reports the fitted constant sup_t R0(t) / ||u0||_{L^n}.
    """
    _require_delta(delta)
    ws = get_workspace(grid)
    n = grid.dimension
    times = np.asarray(times, dtype=float)
    wk = np.zeros_like(times)
    wkp = np.zeros_like(times)
    for i, tau in enumerate(times):
        if tau <= 0:
            continue
        ulin = ws.semigroup_apply(u0, tau, lam)
        wk[i] = tau ** ((1.0 - delta) / 2.0) * ws.lp_norm(ulin, n / delta)
        wkp[i] = tau**0.5 * ws.lp_norm(ws.gradient(ulin), n)
    K0 = np.maximum.accumulate(wk)
    K0p = np.maximum.accumulate(wkp)
    R0 = np.maximum(K0, K0p)
    u0_ln = ws.lp_norm(u0, n)
    fitted_c = float(np.max(R0) / u0_ln) if u0_ln > 0 else 0.0
    return R0Series(times=times, R0=R0, K0=K0, K0p=K0p, fitted_c=fitted_c, u0_ln=u0_ln)


@dataclass
class BootstrapReport:
    ok: bool
    worst_margin: float
    worst_time: float


def check_bootstrap(series: NormSeries, delta: float) -> BootstrapReport:
    """Check R(t) <= 2 R0(t) at every recorded sample.

    The margin at a sample is 2 R0 - R; the report carries the worst one
    over samples with R0 > 0 (the t = 0 sample is vacuously 0 = 0).
    Requires columns 'R' and 'R0'.
    """
    _require_delta(delta)
    R = series["R"]
    R0 = series["R0"]
    margin = 2.0 * R0 - R
    ok = bool(np.all(margin >= 0))
    live = R0 > 0
    if np.any(live):
        idx = np.where(live)[0]
        worst = idx[int(np.argmin(margin[live]))]
    else:
        worst = int(np.argmin(margin))
    return BootstrapReport(
        ok=ok,
        worst_margin=float(margin[worst]),
        worst_time=float(series.times[worst]),
    )


@dataclass
class TheoremBoundsReport:
    c_u: float
    c_grad_m: float
    c_ln: float
    h1_nonincreasing: bool
    h1_worst_increase: float
    reference_u_ln: float
    reference_grad_ln: float


def check_theorem_bounds(series: NormSeries) -> TheoremBoundsReport:
    """Empirical constants in the sup-in-time a priori bounds.

    Computes sup_t (sqrt(t) ||u||_inf + ||u||_n) / ||u(first)||_n and the
    analogous constant for grad m, the constant in ||u(t)||_n <= c ||u(first)||_n,
    and whether ||m - m_inf||_{H1} is non-increasing sample to sample.
    """
    t = series.times
    sqrt_t = np.sqrt(np.where(t > 0, t, 0.0))
    u_ref = float(series["u_ln"][0]) if "u_ln" in series else 0.0
    g_ref = float(series["ln_grad"][0])

    c_u = float("nan")
    c_ln = float("nan")
    if "u_ln" in series and u_ref > 0:
        c_u = float(np.max(sqrt_t * series["u_linf"] + series["u_ln"]) / u_ref)
        c_ln = float(np.max(series["u_ln"]) / u_ref)

    c_grad = float("nan")
    if g_ref > 0:
        c_grad = float(np.max(sqrt_t * series["linf_grad"] + series["ln_grad"]) / g_ref)

    h1 = series["h1_dev"]
    increases = np.diff(h1)
    tol = 1e-10 * max(float(np.max(h1)), 1e-300)
    worst = float(np.max(increases)) if increases.size else 0.0
    return TheoremBoundsReport(
        c_u=c_u,
        c_grad_m=c_grad,
        c_ln=c_ln,
        h1_nonincreasing=bool(worst <= tol),
        h1_worst_increase=worst,
        reference_u_ln=u_ref,
        reference_grad_ln=g_ref,
    )


def fit_decay_exponent(series: NormSeries, field_name: str, window) -> DecayFit:
    """Least-squares slope of log(value) against log(t) inside the window."""
    t0, t1 = window
    if not (t0 < t1):
        raise ValueError(f"bad fit window {window}")
    t = series.times
    mask = (t >= t0) & (t <= t1) & (t > 0)
    if np.count_nonzero(mask) < 2:
        raise ValueError("fit window contains fewer than 2 samples")
    vals = series[field_name][mask]
    if np.any(vals <= 0):
        raise ValueError(f"column {field_name!r} has nonpositive values in the window")
    x = np.log(t[mask])
    y = np.log(vals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return DecayFit(
        exponent=float(slope),
        constant=float(np.exp(intercept)),
        window=(float(t0), float(t1)),
        residual=resid,
    )


def spectral_gap_time(grid: GridSpec, lam: float) -> float:
    """Time L^2 / (4 pi^2 lam) past which the box's lowest mode dominates.

    On the periodic box the slowest mode decays like e^{-lam (2 pi / L)^2 t},
    turning algebraic whole-space decay into exponential decay; decay-rate
    fits are only meaningful before this time.
    """
    return grid.box_length**2 / (4.0 * np.pi**2 * lam)


@dataclass
class DecayBoundReport:
    fit: DecayFit
    target_exponent: float
    exponent_ok: bool
    bound_constant: float
    gap_time: float


def check_decay_bound(
    series: NormSeries,
    field_name: str,
    window,
    grid: GridSpec,
    lam: float,
    slack: float = 0.05,
) -> DecayBoundReport:
    """One-sided decay check against c * t^{-(n-2)/(2n)}.

    Fits the empirical exponent on the window (which must end before the
    spectral-gap time) and accepts when it is at most the target plus
    `slack`; the bound constant is the max of value * t^{(n-2)/(2n)} over
    the window.
    """
    t_gap = spectral_gap_time(grid, lam)
    t0, t1 = window
    if t1 > t_gap:
        raise ValueError(
            f"fit window end {t1} exceeds the spectral-gap time {t_gap:.4g}; "
            "the torus decays exponentially there"
        )
    n = grid.dimension
    target = -(n - 2) / (2.0 * n)
    fit = fit_decay_exponent(series, field_name, window)
    t = series.times
    mask = (t >= t0) & (t <= t1) & (t > 0)
    c_bound = float(np.max(series[field_name][mask] * t[mask] ** (-target)))
    return DecayBoundReport(
        fit=fit,
        target_exponent=target,
        exponent_ok=bool(fit.exponent <= target + slack),
        bound_constant=c_bound,
        gap_time=t_gap,
    )
