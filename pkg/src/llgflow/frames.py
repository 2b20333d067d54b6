"""Orthonormal tangent frames along m and the derived gauge fields.

A frame {X, Y} with m = X x Y turns derivatives of m into complex
coefficients u_k = <d_k m, X> + i <d_k m, Y> and real connection
coefficients a_k = <d_k X, Y>. Time components use dm/dt evaluated as the
flow's right-hand side. The Coulomb gauge change solves -Lap theta = div a
and rotates u by e^{-i theta}.

The frame here is algebraic, X = (e x m)/|e x m|, valid while m stays away
from +-e; gauge covariance, verified by the identity checks, makes the
downstream system independent of this choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FrameDegenerate
from .grid import GridSpec, get_workspace
from .llg import SpinField, _rhs_raw
from .monitor import NormSeries

FRAME_DEGENERACY_THRESHOLD = 0.1


@dataclass(frozen=True)
class TangentFrame:
    """Orthonormal pair spanning the tangent plane along m."""

    X: np.ndarray
    Y: np.ndarray
    grid: GridSpec

    def validate(self, m, tolerance=1e-10) -> None:
        X, Y = self.X, self.Y
        checks = {
            "|X|-1": np.abs(np.sum(X * X, axis=0) - 1.0),
            "|Y|-1": np.abs(np.sum(Y * Y, axis=0) - 1.0),
            "<X,Y>": np.abs(np.sum(X * Y, axis=0)),
            "<X,m>": np.abs(np.sum(X * m, axis=0)),
            "<Y,m>": np.abs(np.sum(Y * m, axis=0)),
            "m-XxY": np.max(np.abs(m - np.cross(X, Y, axis=0)), axis=0),
        }
        for name, vals in checks.items():
            worst = float(np.max(vals))
            if worst > tolerance:
                raise ValueError(f"frame check {name} fails: {worst:.3e} > {tolerance:.0e}")


@dataclass(frozen=True)
class ConnectionField:
    """Connection coefficients a_alpha = <d_alpha X, Y>; a0 may be absent."""

    a: np.ndarray  # (n, *shape) real
    a0: np.ndarray | None
    grid: GridSpec


@dataclass(frozen=True)
class DerivedField:
    """Complex derivative coefficients u_alpha; u0 may be absent."""

    u: np.ndarray  # (n, *shape) complex
    u0: np.ndarray | None
    grid: GridSpec


@dataclass(frozen=True)
class GaugePotential:
    """Mean-zero gauge function theta of one Coulomb fix."""

    theta: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        if abs(float(np.mean(self.theta))) > 1e-10 * max(1.0, float(np.max(np.abs(self.theta)))):
            raise ValueError("gauge potential must have zero mean")


def default_reference(m_inf) -> np.ndarray:
    """Coordinate axis most orthogonal to the far-field value."""
    axis = int(np.argmin(np.abs(m_inf)))
    e = np.zeros(3)
    e[axis] = 1.0
    return e


def construct_frame(sf: SpinField, reference=None) -> TangentFrame:
    """Algebraic frame X = (e x m)/|e x m|, Y = m x X.

    Requires min |e x m| > 0.1 so the normalization stays resolvable;
    otherwise FrameDegenerate reports the worst grid point.
    """
    sf.validate(1e-6)
    e = default_reference(sf.m_inf) if reference is None else np.asarray(reference, dtype=float)
    e = e / np.linalg.norm(e)
    eb = e.reshape((3,) + (1,) * sf.grid.dimension)
    cross = np.cross(np.broadcast_to(eb, sf.m.shape), sf.m, axis=0)
    norm = np.sqrt(np.sum(cross**2, axis=0))
    worst_flat = int(np.argmin(norm))
    worst = float(norm.flat[worst_flat])
    if worst <= FRAME_DEGENERACY_THRESHOLD:
        idx = np.unravel_index(worst_flat, sf.grid.shape)
        raise FrameDegenerate(
            f"|e x m| = {worst:.4f} <= {FRAME_DEGENERACY_THRESHOLD} at grid index {idx}",
            worst_index=idx,
            worst_value=worst,
        )
    X = cross / norm
    Y = np.cross(sf.m, X, axis=0)
    return TangentFrame(X=X, Y=Y, grid=sf.grid)


def derive_connection(sf: SpinField, frame: TangentFrame, lam: float, reference=None):
    """Spatial and time components of (a, u) from one snapshot.

    Spatial derivatives are spectral. Time components use dm/dt given by
    the flow's right-hand side and the chain rule through the algebraic
    frame construction, which needs the reference axis; pass the same
    `reference` used in construct_frame (default: the axis chosen by
    default_reference).
    """
    sf.validate(1e-6)
    frame.validate(sf.m, tolerance=1e-8)
    ws = sf.workspace()
    X, Y, m = frame.X, frame.Y, sf.m

    grad_m = ws.gradient(m)  # (n, 3, *shape)
    grad_X = ws.gradient(X)
    a = np.sum(grad_X * Y[None], axis=1)
    u = np.sum(grad_m * X[None], axis=1) + 1j * np.sum(grad_m * Y[None], axis=1)

    mt = _rhs_raw(ws, m, lam)
    u0 = np.sum(mt * X, axis=0) + 1j * np.sum(mt * Y, axis=0)

    e = default_reference(sf.m_inf) if reference is None else np.asarray(reference, dtype=float)
    e = e / np.linalg.norm(e)
    eb = np.broadcast_to(e.reshape((3,) + (1,) * sf.grid.dimension), m.shape)
    cross = np.cross(eb, m, axis=0)
    norm = np.sqrt(np.sum(cross**2, axis=0))
    w = np.cross(eb, mt, axis=0)
    Xt = (w - X * np.sum(X * w, axis=0)) / norm
    a0 = np.sum(Xt * Y, axis=0)

    return (
        ConnectionField(a=a, a0=a0, grid=sf.grid),
        DerivedField(u=u, u0=u0, grid=sf.grid),
    )


def coulomb_gauge(conn: ConnectionField, der: DerivedField):
    """Gauge change to div a = 0: theta solves -Lap theta = div a.

    Returns (a*, u*, theta) with a* = a + grad theta and u* = e^{-i theta} u
    (u0 rotates by the same phase). a0 is dropped: this is a single-time
    gauge fix, and the Coulomb-gauge a0 is re-derived from u* by the
    elliptic decomposition downstream rather than by differentiating
    theta in time.
    """
    ws = get_workspace(conn.grid)
    theta = ws.solve_poisson_div(conn.a)
    grad_theta = ws.gradient(theta)
    a_star = conn.a + grad_theta
    phase = np.exp(-1j * theta)
    u_star = phase * der.u
    u0_star = phase * der.u0 if der.u0 is not None else None
    return (
        ConnectionField(a=a_star, a0=None, grid=conn.grid),
        DerivedField(u=u_star, u0=u0_star, grid=der.grid),
        GaugePotential(theta=theta, grid=conn.grid),
    )


def coulomb_residual(conn: ConnectionField) -> float:
    """||div a||_inf, for checking the gauge condition."""
    ws = get_workspace(conn.grid)
    return ws.lp_norm(ws.divergence(conn.a), np.inf)


def verify_torsion(der: DerivedField, conn: ConnectionField) -> float:
    """max over spatial pairs of ||D_k u_l - D_l u_k||_inf (0 when n = 1)."""
    ws = get_workspace(der.grid)
    n = der.grid.dimension
    if n == 1:
        return 0.0
    grad_u = ws.gradient(der.u)  # (n, n, *shape): [k, l] = d_k u_l
    D = grad_u + 1j * conn.a[:, None] * der.u[None]
    worst = 0.0
    for k in range(n):
        for l in range(k + 1, n):
            worst = max(worst, float(np.max(np.abs(D[k, l] - D[l, k]))))
    return worst


def verify_curvature(der: DerivedField, conn: ConnectionField) -> float:
    """max over spatial pairs of ||d_k a_l - d_l a_k - Im(u_k conj(u_l))||_inf."""
    ws = get_workspace(der.grid)
    n = der.grid.dimension
    if n == 1:
        return 0.0
    grad_a = ws.gradient(conn.a)  # [k, l] = d_k a_l
    worst = 0.0
    for k in range(n):
        for l in range(k + 1, n):
            res = grad_a[k, l] - grad_a[l, k] - np.imag(der.u[k] * np.conj(der.u[l]))
            worst = max(worst, float(np.max(np.abs(res))))
    return worst


@dataclass
class U0ConsistencyReport:
    residual: float
    relative: float


def verify_u0_consistency(der: DerivedField, conn: ConnectionField, lam: float) -> U0ConsistencyReport:
    """||u0 - (lam - i) sum_k D_k u_k||_inf, absolute and relative."""
    if der.u0 is None:
        raise ValueError("u0 component missing")
    ws = get_workspace(der.grid)
    div_u = ws.divergence(der.u)
    a_dot_u = np.sum(conn.a * der.u, axis=0)
    pred = (lam - 1j) * (div_u + 1j * a_dot_u)
    res = float(np.max(np.abs(der.u0 - pred)))
    scale = float(np.max(np.abs(der.u0)))
    return U0ConsistencyReport(residual=res, relative=res / scale if scale > 0 else 0.0)


# -- trajectory-level extraction ----------------------------------------------


@dataclass
class GaugedSnapshot:
    time: float
    frame: TangentFrame
    connection: ConnectionField  # Coulomb-gauged, a0 = None
    derived: DerivedField  # Coulomb-gauged
    theta: GaugePotential
    raw_connection: ConnectionField
    raw_derived: DerivedField


def extract_gauged(sf: SpinField, lam: float, reference=None) -> GaugedSnapshot:
    """construct_frame -> derive_connection -> coulomb_gauge for one snapshot."""
    frame = construct_frame(sf, reference=reference)
    conn, der = derive_connection(sf, frame, lam, reference=reference)
    conn_g, der_g, theta = coulomb_gauge(conn, der)
    return GaugedSnapshot(
        time=float("nan"),
        frame=frame,
        connection=conn_g,
        derived=der_g,
        theta=theta,
        raw_connection=conn,
        raw_derived=der,
    )


def extract_u_trajectory(traj, reference=None):
    """Gauge-fixed u at every snapshot of an evolved trajectory.

    Returns (times, [u arrays]) in the per-snapshot Coulomb gauge.
    """
    out = []
    for i in range(len(traj)):
        snap = extract_gauged(traj.snapshot(i), traj.lam, reference=reference)
        out.append(snap.derived.u)
    return np.asarray(traj.times), out


def u_norm_series(traj, delta: float, reference=None) -> NormSeries:
    """Norm series over snapshot times including the u-field columns.

    Columns: the m-based records (E, linf_grad, ln_grad, h1_dev, linf_dev)
    plus u_lnd = ||u||_{L^{n/delta}}, u_grad_ln = ||grad u||_{L^n},
    u_ln = ||u||_{L^n}, u_linf = ||u||_inf, all in the per-snapshot
    Coulomb gauge (norms are gauge-invariant anyway).
    """
    ws = get_workspace(traj.grid)
    n = traj.grid.dimension
    times = np.asarray(traj.times)
    cols = {
        key: np.empty(len(traj))
        for key in (
            "E",
            "linf_grad",
            "ln_grad",
            "h1_dev",
            "linf_dev",
            "u_lnd",
            "u_grad_ln",
            "u_ln",
            "u_linf",
        )
    }
    for i in range(len(traj)):
        sf = traj.snapshot(i)
        grad = ws.gradient(sf.m)
        dev = sf.deviation()
        snap = extract_gauged(sf, traj.lam, reference=reference)
        u = snap.derived.u
        cols["E"][i] = 0.5 * ws.lp_norm(grad, 2) ** 2
        cols["linf_grad"][i] = ws.lp_norm(grad, np.inf)
        cols["ln_grad"][i] = ws.lp_norm(grad, n)
        cols["h1_dev"][i] = ws.sobolev_norm(dev, 1)
        cols["linf_dev"][i] = ws.lp_norm(dev, np.inf)
        cols["u_lnd"][i] = ws.lp_norm(u, n / delta)
        cols["u_grad_ln"][i] = ws.lp_norm(ws.gradient(u), n)
        cols["u_ln"][i] = ws.lp_norm(u, n)
        cols["u_linf"][i] = ws.lp_norm(u, np.inf)
    return NormSeries(times=times, columns=cols, delta=delta)
