"""The gauged semilinear system for the derivative field u.

Under the Coulomb gauge the derivative coefficients of the spin flow
solve du/dt = (lam - i) Lap u + F(a, u) with

    F_l = (lam - i) { i sum_k Im(u_l conj(u_k)) u_k + 2i (a.grad) u_l
                      - |a|^2 u_l } - i a0 u_l,

where a = a(u) comes from the elliptic system -Lap a_l = d_k Im(u_l conj(u_k))
and a0 = a0_1 + a0_2 from its own pair of elliptic solves. F regroups as
f1 (cubic, local), f2 (quadratic times grad u), f3 (quintic); mild
solutions are computed from the Duhamel integral by Picard iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoContraction
from .grid import GridSpec, get_workspace


@dataclass(frozen=True)
class NonlinearitySplit:
    """F = f1 + f2 + f3 with the homogeneity grouping above."""

    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.f1 + self.f2 + self.f3


@dataclass(frozen=True)
class A0Decomposition:
    """a0 = a0_1 + a0_2, mean-zero elliptic solves."""

    a0_1: np.ndarray
    a0_2: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.a0_1 + self.a0_2


@dataclass
class PicardState:
    """One Picard iterate's bookkeeping."""

    index: int
    diff_norm: float
    ratio: float  # vs previous diff; nan for the first


@dataclass
class PicardResult:
    times: np.ndarray
    u: np.ndarray  # (len(times), n, *shape) complex
    history: list  # of PicardState
    converged: bool

    @property
    def ratios(self):
        return np.array([s.ratio for s in self.history])


def connection_from_u(u, grid: GridSpec) -> np.ndarray:
    """Coulomb-gauge spatial connection: -Lap a_l = sum_k d_k Im(u_l conj(u_k)).

    Mean-zero solves; the result is divergence-free because the source
    matrix Im(u_l conj(u_k)) is antisymmetric. That is asserted, not
    assumed.
    """
    ws = get_workspace(grid)
    n = grid.dimension
    # source[k, l] = Im(u_l conj(u_k)); axis 0 is the derivative index
    source = np.imag(u[None, :] * np.conj(u[:, None]))
    source = ws.dealias(source)
    a = ws.solve_poisson_div(source)
    div_norm = ws.lp_norm(ws.divergence(a), np.inf)
    scale = max(ws.lp_norm(a, np.inf), 1e-300)
    if div_norm > 1e-10 * scale:
        raise RuntimeError(
            f"connection_from_u lost divergence-freeness: {div_norm:.3e} vs scale {scale:.3e}"
        )
    return a


def a0_decompose(u, a, lam: float, grid: GridSpec) -> A0Decomposition:
    """Mean-zero solves for the two pieces of the time-component potential.

    -Lap a0_1 = div( lam Im(conj(u) div u) - Re(conj(u) div u) )
    -Lap a0_2 = div( lam Re(conj(u) (a.u)) + Im(conj(u) (a.u)) )
    """
    ws = get_workspace(grid)
    div_u = ws.divergence(u)
    cu = np.conj(u)
    s1 = ws.dealias(cu * div_u)
    f1 = lam * np.imag(s1) - np.real(s1)
    a_dot_u = ws.dealias(np.sum(a * u, axis=0))
    s2 = ws.dealias(cu * a_dot_u)
    f2 = lam * np.real(s2) + np.imag(s2)
    return A0Decomposition(a0_1=ws.solve_poisson_div(f1), a0_2=ws.solve_poisson_div(f2))


def a0_residual(dec: A0Decomposition, u, a, lam: float, grid: GridSpec) -> float:
    """||-Lap(a0_1 + a0_2) - d_k Im(u0 conj(u_k))||_inf with u0 = (lam-i) D_k u_k."""
    ws = get_workspace(grid)
    u0 = (lam - 1j) * (ws.divergence(u) + 1j * np.sum(a * u, axis=0))
    source = ws.divergence(np.imag(u0[None] * np.conj(u)))
    lhs = -ws.laplacian(dec.total)
    return ws.lp_norm(lhs - source, np.inf)


def assemble_F(u, a, a0split: A0Decomposition, lam: float, grid: GridSpec) -> NonlinearitySplit:
    """Evaluate the three nonlinearity groups with dealiased products."""
    ws = get_workspace(grid)
    lam_i = lam - 1j

    cubic = np.sum(np.imag(u[None, :] * np.conj(u[:, None])) * u[:, None], axis=0)
    f1 = lam_i * 1j * ws.dealias(cubic)

    grad_u = ws.gradient(u)  # [k, l] = d_k u_l
    a_grad_u = ws.dealias(np.sum(a[:, None] * grad_u, axis=0))
    f2 = lam_i * 2j * a_grad_u - 1j * ws.dealias(a0split.a0_1 * u)

    a_sq = ws.dealias(np.sum(a * a, axis=0))
    f3 = -lam_i * ws.dealias(a_sq * u) - 1j * ws.dealias(a0split.a0_2 * u)
    return NonlinearitySplit(f1=f1, f2=f2, f3=f3)


def nonlinearity_direct(u, a, a0, lam: float, grid: GridSpec) -> np.ndarray:
    """F evaluated straight from its defining expression (cross-check path)."""
    ws = get_workspace(grid)
    lam_i = lam - 1j
    cubic = np.sum(np.imag(u[None, :] * np.conj(u[:, None])) * u[:, None], axis=0)
    grad_u = ws.gradient(u)
    a_grad_u = np.sum(a[:, None] * grad_u, axis=0)
    a_sq = np.sum(a * a, axis=0)
    raw = lam_i * (1j * cubic + 2j * a_grad_u - a_sq * u) - 1j * a0 * u
    return ws.dealias(raw)


def evaluate_forcing(u, lam: float, grid: GridSpec):
    """a(u), the a0 split and F(a(u), u) for one time slice."""
    a = connection_from_u(u, grid)
    a0split = a0_decompose(u, a, lam, grid)
    F = assemble_F(u, a, a0split, lam, grid)
    return a, a0split, F


def duhamel_convolve(f_samples, times, t: float, lam: float, grid: GridSpec, refine_last: int = 4):
    """Quadrature of int_0^t S(t - s) f(s) ds over the sample mesh.

    Composite trapezoid on the (possibly nonuniform) mesh, with the final
    interval near s = t subdivided `refine_last` times using linear
    interpolation of f in s. Exact for f = 0; second order in the mesh
    width otherwise.
    """
    times = np.asarray(times, dtype=float)
    if t < 0:
        raise ValueError("t must be >= 0")
    j = int(np.searchsorted(times, t - 1e-14))
    if j >= len(times) or abs(times[j] - t) > 1e-12:
        raise ValueError(f"t={t} is not a mesh point of the forcing samples")
    if j == 0:
        return np.zeros_like(np.asarray(f_samples[0]))
    ws = get_workspace(grid)
    fhat = [ws.fft(np.asarray(f_samples[i])) for i in range(j + 1)]
    k2 = ws.k2
    acc = np.zeros_like(fhat[0])

    def mult(s):
        return np.exp((1j - lam) * k2 * (t - s))

    for i in range(j - 1):
        ds = times[i + 1] - times[i]
        acc += 0.5 * ds * (mult(times[i]) * fhat[i] + mult(times[i + 1]) * fhat[i + 1])
    # refined last interval
    s0, s1 = times[j - 1], times[j]
    sub = np.linspace(s0, s1, refine_last + 1)
    for i in range(refine_last):
        sa, sb = sub[i], sub[i + 1]
        wa = (s1 - sa) / (s1 - s0)
        wb = (s1 - sb) / (s1 - s0)
        fa = wa * fhat[j - 1] + (1.0 - wa) * fhat[j]
        fb = wb * fhat[j - 1] + (1.0 - wb) * fhat[j]
        acc += 0.5 * (sb - sa) * (mult(sa) * fa + mult(sb) * fb)
    return ws.ifft(acc)


def graded_mesh(t_end: float, n_base: int) -> np.ndarray:
    """Uniform mesh with doubled density over the first 10% of [0, t_end].

    The Duhamel weights are most singular near s = 0, so the head of the
    interval carries 2x the points of the uniform body.
    """
    if n_base < 10:
        raise ValueError("n_base must be >= 10")
    t_head = 0.1 * t_end
    n_head = max(2, int(round(0.1 * n_base)) * 2)
    head = np.linspace(0.0, t_head, n_head + 1)
    body = np.linspace(t_head, t_end, n_base - n_head + 1)[1:]
    return np.concatenate([head, body])


def picard_solve(
    u0,
    t_end: float,
    lam: float,
    grid: GridSpec,
    mesh=None,
    max_iter: int = 25,
    tol: float = 1e-8,
    smallness_gate: float | None = 0.5,
) -> PicardResult:
    """Mild solution u(t) = S(t) u(0) + (S * F)(t) by Picard iteration.

    The connection a(u) and the a0 split are recomputed from scratch at
    every mesh time of every iterate. Iteration stops when the sup over
    mesh times of ||u_new - u_old||_{L^n} drops below tol; NoContraction
    is raised when that difference grows three times in a row (data too
    large) or max_iter is exhausted.
    """
    ws = get_workspace(grid)
    n = grid.dimension
    if mesh is None:
        mesh = graded_mesh(t_end, 40)
    mesh = np.asarray(mesh, dtype=float)
    if abs(mesh[0]) > 1e-14 or abs(mesh[-1] - t_end) > 1e-12:
        raise ValueError("mesh must start at 0 and end at t_end")
    if smallness_gate is not None:
        u0_ln = ws.lp_norm(u0, n)
        if u0_ln >= smallness_gate:
            raise ValueError(
                f"||u0||_Ln = {u0_ln:.3g} exceeds the smallness gate {smallness_gate}; "
                "pass smallness_gate=None to override"
            )

    m_pts = len(mesh)
    linear = np.stack([ws.semigroup_apply(u0, t, lam) for t in mesh])
    u_cur = linear.copy()
    history: list[PicardState] = []
    prev_diff = None
    grew = 0
    for it in range(1, max_iter + 1):
        forcing = np.stack(
            [evaluate_forcing(u_cur[i], lam, grid)[2].total for i in range(m_pts)]
        )
        u_next = linear.copy()
        for i in range(1, m_pts):
            u_next[i] += duhamel_convolve(forcing[: i + 1], mesh[: i + 1], mesh[i], lam, grid)
        diff = max(ws.lp_norm(u_next[i] - u_cur[i], n) for i in range(m_pts))
        ratio = float("nan") if prev_diff is None else diff / prev_diff
        history.append(PicardState(index=it, diff_norm=diff, ratio=ratio))
        u_cur = u_next
        if diff < tol:
            return PicardResult(times=mesh, u=u_cur, history=history, converged=True)
        if prev_diff is not None and diff > prev_diff:
            grew += 1
            if grew >= 3:
                raise NoContraction(
                    f"Picard differences grew {grew} consecutive iterates "
                    f"(last {diff:.3e})",
                    history=history,
                )
        else:
            grew = 0
        prev_diff = diff
    raise NoContraction(
        f"Picard did not reach tol={tol:.1e} within {max_iter} iterates "
        f"(last difference {prev_diff:.3e})",
        history=history,
    )


@dataclass
class NonlinearBoundReport:
    """Left/right ratios of the homogeneity estimates for one field."""

    f1_ratio: float
    f2_ratio: float
    f3_ratio: float
    a_ratio: float
    a0_1_ratio: float
    a0_2_ratio: float
    delta: float

    def as_dict(self):
        return {
            "f1": self.f1_ratio,
            "f2": self.f2_ratio,
            "f3": self.f3_ratio,
            "a": self.a_ratio,
            "a0_1": self.a0_1_ratio,
            "a0_2": self.a0_2_ratio,
        }


def verify_nonlinear_bounds(u, delta: float, lam: float, grid: GridSpec) -> NonlinearBoundReport:
    """Empirical constants in the Lp estimates of the nonlinearity pieces.

    Ratios of ||f1||_{n/(3 delta)} to ||u||^3, ||f2||_{n/(2 delta)} to
    ||u||^2 ||grad u||_n, ||f3||_{n/(5 delta - 2)} to ||u||^5, plus the
    connection and a0-piece estimates. Requires delta in (3/5, 2/3) and
    n >= 3; ensembles take running maxima of the returned ratios.
    """
    if not (0.6 < delta < 2.0 / 3.0):
        raise ValueError(f"delta must lie in (3/5, 2/3), got {delta}")
    n = grid.dimension
    if n < 3:
        raise ValueError("the homogeneity estimates require n >= 3")
    ws = get_workspace(grid)
    a, a0split, F = evaluate_forcing(u, lam, grid)
    u_nd = ws.lp_norm(u, n / delta)
    gu_n = ws.lp_norm(ws.gradient(u), n)

    def ratio(value, denom):
        return float(value / denom) if denom > 0 else 0.0

    return NonlinearBoundReport(
        f1_ratio=ratio(ws.lp_norm(F.f1, n / (3 * delta)), u_nd**3),
        f2_ratio=ratio(ws.lp_norm(F.f2, n / (2 * delta)), u_nd**2 * gu_n),
        f3_ratio=ratio(ws.lp_norm(F.f3, n / (5 * delta - 2)), u_nd**5),
        a_ratio=ratio(ws.lp_norm(a, n / (2 * delta - 1)), u_nd**2),
        a0_1_ratio=ratio(ws.lp_norm(a0split.a0_1, n / delta), u_nd * gu_n),
        a0_2_ratio=ratio(ws.lp_norm(a0split.a0_2, n / (4 * delta - 2)), u_nd**2),
        delta=delta,
    )
