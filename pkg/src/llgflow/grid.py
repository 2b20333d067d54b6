"""Periodic-grid field arithmetic and Fourier-side operators.

All fields live on a uniform periodic grid covering the box [0, L)^n.
Arrays store any number of leading component axes followed by the n grid
axes, e.g. a 3-vector field in three dimensions has shape (3, N, N, N).
Transforms, derivatives, elliptic solves and the dissipative Schroedinger
semigroup act on the trailing grid axes and broadcast over components.

Operations are pure functions of their inputs; the workspace only caches
wavenumber arrays and the dealiasing mask, so instances are safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft

from .errors import NonFinite

DEFAULT_MEMORY_BUDGET = 4 << 30  # bytes; generous for desk-scale grids


@dataclass(frozen=True)
class GridSpec:
    """Discretization of a periodic box [0, L)^n.

    Parameters
    ----------
    dimension : int
        Spatial dimension n, one of 1, 2, 3.
    points_per_axis : int
        Grid points N per axis; must be even and >= 8.
    box_length : float
        Side length L of the periodic box.
    memory_budget : int
        Maximum bytes a single complex field may occupy; construction
        fails if 16 * N^n exceeds it.
    """

    dimension: int
    points_per_axis: int
    box_length: float
    memory_budget: int = field(default=DEFAULT_MEMORY_BUDGET, compare=False)

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        n_pts = self.points_per_axis
        if n_pts < 8 or n_pts % 2 != 0:
            raise ValueError(f"points_per_axis must be even and >= 8, got {n_pts}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        if 16 * n_pts**self.dimension > self.memory_budget:
            raise ValueError(
                f"grid with {n_pts}^{self.dimension} points exceeds the "
                f"memory budget of {self.memory_budget} bytes"
            )

    @property
    def spacing(self) -> float:
        """Mesh width h = L / N."""
        return self.box_length / self.points_per_axis

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @property
    def num_points(self) -> int:
        return self.points_per_axis**self.dimension


def _check_finite(f):
    if not np.all(np.isfinite(f)):
        raise NonFinite("field contains NaN or Inf")


def _guarded_inverse(arr):
    """1/arr where arr > 0, else 0 (pins zero modes of elliptic solves)."""
    safe = np.where(arr > 0, arr, 1.0)
    return np.where(arr > 0, 1.0 / safe, 0.0)


class SpectralWorkspace:
    """Cached wavenumbers, grid coordinates and transform helpers for one grid.

    Use :func:`get_workspace` to obtain a shared instance per GridSpec.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        n, N, L = grid.dimension, grid.points_per_axis, grid.box_length
        freqs = np.fft.fftfreq(N, d=1.0 / N)  # integer frequencies
        k1 = 2.0 * np.pi * freqs / L
        mesh = np.meshgrid(*([k1] * n), indexing="ij")
        full_k = np.stack(mesh)  # shape (n, N, ..., N)
        self.k2 = np.sum(full_k**2, axis=0)
        # First-derivative multipliers zero the Nyquist mode: its odd
        # derivative has no conjugate partner and would leak imaginary
        # parts. Even-order symbols (k2) keep the full wavenumber.
        k1_deriv = k1.copy()
        k1_deriv[N // 2] = 0.0
        self.k = np.stack(np.meshgrid(*([k1_deriv] * n), indexing="ij"))
        # div-solves invert the derivative symbol, not the full |k|^2, so
        # that div(f + grad solve(f)) cancels exactly mode by mode
        self._inv_k2_deriv = _guarded_inverse(np.sum(self.k**2, axis=0))

        # 2/3-rule mask: drop modes with any |integer frequency| >= N/3
        fmesh = np.meshgrid(*([freqs] * n), indexing="ij")
        keep = np.ones(grid.shape, dtype=bool)
        for fm in fmesh:
            keep &= np.abs(fm) < N / 3.0
        self.dealias_mask = keep

        x1 = grid.spacing * np.arange(N)
        self.x = np.stack(np.meshgrid(*([x1] * n), indexing="ij"))

        self._axes = tuple(range(-n, 0))

        # half-spectrum layout for real fields (last axis truncated)
        self.rshape = grid.shape[:-1] + (N // 2 + 1,)
        rfreqs = np.arange(N // 2 + 1, dtype=float)
        rk_last = 2.0 * np.pi * rfreqs / L
        rmesh = np.meshgrid(*([k1] * (n - 1) + [rk_last]), indexing="ij")
        self.rk2 = np.sum(np.stack(rmesh)**2, axis=0)
        rk_last_deriv = rk_last.copy()
        rk_last_deriv[-1] = 0.0
        self.rk = np.stack(
            np.meshgrid(*([k1_deriv] * (n - 1) + [rk_last_deriv]), indexing="ij")
        )
        self._inv_rk2_deriv = _guarded_inverse(np.sum(self.rk**2, axis=0))
        rfmesh = np.meshgrid(*([freqs] * (n - 1) + [rfreqs]), indexing="ij")
        rkeep = np.ones(self.rshape, dtype=bool)
        for fm in rfmesh:
            rkeep &= np.abs(fm) < N / 3.0
        self.rdealias_mask = rkeep
        self._decay_cache = {}

    # -- transforms -------------------------------------------------------

    def fft(self, f):
        """Forward transform over the grid axes (components batched)."""
        return scipy.fft.fftn(f, axes=self._axes)

    def ifft(self, fhat, real_output=False):
        out = scipy.fft.ifftn(fhat, axes=self._axes)
        return out.real if real_output else out

    def rfft(self, f):
        """Half-spectrum transform of a real field."""
        return scipy.fft.rfftn(f, axes=self._axes)

    def irfft(self, fhat):
        return scipy.fft.irfftn(fhat, s=self.grid.shape, axes=self._axes)

    def decay_multiplier(self, lam: float, dt: float):
        """Cached e^{-lam |k|^2 dt} on the half-spectrum layout."""
        key = (lam, dt)
        mult = self._decay_cache.get(key)
        if mult is None:
            mult = np.exp(-lam * self.rk2 * dt)
            if len(self._decay_cache) > 8:
                self._decay_cache.clear()
            self._decay_cache[key] = mult
        return mult

    def roundtrip(self, f):
        """fft followed by ifft; used to probe transform accuracy."""
        return self.ifft(self.fft(f), real_output=np.isrealobj(f))

    def dealias(self, f):
        """Apply the 2/3-rule truncation to a physical-space field."""
        if np.isrealobj(f):
            return self.irfft(self.rdealias_mask * self.rfft(f))
        return self.ifft(self.dealias_mask * self.fft(f))

    def mean(self, f):
        return np.mean(f, axis=self._axes)

    # -- differential operators -------------------------------------------

    def _spectra(self, f, extra_leading):
        """Pick the real or complex transform set for a field.

        Returns (fhat, k broadcastable over `extra_leading` axes, k2,
        inv_k2, inverse transform).
        """
        n = self.grid.dimension
        if np.isrealobj(f):
            fhat = self.rfft(f)
            kb = self.rk.reshape((n,) + (1,) * extra_leading + self.rshape)
            return fhat, kb, self.rk2, self._inv_rk2_deriv, self.irfft
        fhat = self.fft(f)
        kb = self.k.reshape((n,) + (1,) * extra_leading + self.grid.shape)
        return fhat, kb, self.k2, self._inv_k2_deriv, self.ifft

    def gradient(self, f):
        """Spectral gradient; returns a new leading axis of length n.

        A scalar field of shape (*grid.shape) maps to (n, *grid.shape);
        leading component axes of f are preserved after the derivative axis.
        """
        _check_finite(f)
        fhat, kb, _, _, inv = self._spectra(f, f.ndim - self.grid.dimension)
        return inv(1j * kb * fhat[None])

    def divergence(self, v):
        """Divergence of a field with leading component axis of length n."""
        _check_finite(v)
        vhat, kb, _, _, inv = self._spectra(v, v.ndim - 1 - self.grid.dimension)
        return inv(np.sum(1j * kb * vhat, axis=0))

    def laplacian(self, f):
        _check_finite(f)
        fhat, _, k2, _, inv = self._spectra(f, 0)
        return inv(-k2 * fhat)

    def solve_poisson_div(self, f):
        """Solve -Delta v = div f on the torus with mean-zero v.

        The zero Fourier mode of div f vanishes identically, so the system
        is solvable; the zero mode of v is pinned to 0.
        """
        _check_finite(f)
        fhat, kb, _, inv_k2, inv = self._spectra(f, f.ndim - 1 - self.grid.dimension)
        div_hat = np.sum(1j * kb * fhat, axis=0)
        return inv(div_hat * inv_k2)

    def semigroup_apply(self, f, t: float, lam: float):
        """Apply the dissipative Schroedinger semigroup multiplier e^{(i-lam)|k|^2 t}.

        t = 0 is the identity; the L2 norm is strictly decreasing in t for
        nonconstant fields since lam > 0.
        """
        if t < 0:
            raise ValueError(f"semigroup time must be >= 0, got {t}")
        if not lam > 0:
            raise ValueError(f"damping must be positive, got {lam}")
        _check_finite(f)
        if t == 0:
            return np.array(f, copy=True)
        mult = np.exp((1j - lam) * self.k2 * t)
        return self.ifft(mult * self.fft(f))

    # -- norms --------------------------------------------------------------

    def pointwise_magnitude(self, f):
        """Euclidean modulus over all leading component axes."""
        ncomp_axes = tuple(range(f.ndim - self.grid.dimension))
        if not ncomp_axes:
            return np.abs(f)
        return np.sqrt(np.sum(np.abs(f) ** 2, axis=ncomp_axes))

    def lp_norm(self, f, p) -> float:
        """Lp norm (sum |f|^p h^n)^{1/p}; p = inf is the collocation max."""
        _check_finite(f)
        if p != np.inf and p < 1:
            raise ValueError(f"p must be >= 1 or inf, got {p}")
        mag = self.pointwise_magnitude(f)
        if p == np.inf:
            return float(np.max(mag))
        return float((np.sum(mag**p) * self.grid.cell_volume) ** (1.0 / p))

    def sobolev_norm(self, f, sigma: int) -> float:
        """H^sigma norm via the Fourier symbol (1 + |k|^2)^{sigma/2}.

        sigma = 0 reproduces the L2 norm. Component axes are summed.
        """
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        _check_finite(f)
        fhat = self.fft(f)
        power = np.abs(fhat) ** 2
        ncomp_axes = tuple(range(f.ndim - self.grid.dimension))
        if ncomp_axes:
            power = np.sum(power, axis=ncomp_axes)
        weight = (1.0 + self.k2) ** sigma
        total = np.sum(weight * power) * self.grid.cell_volume / self.grid.num_points
        return float(np.sqrt(total))


@lru_cache(maxsize=32)
def _workspace_cache(grid: GridSpec) -> SpectralWorkspace:
    return SpectralWorkspace(grid)


def get_workspace(grid: GridSpec) -> SpectralWorkspace:
    """Shared workspace per grid; cached since wavenumber setup is not free."""
    return _workspace_cache(grid)
