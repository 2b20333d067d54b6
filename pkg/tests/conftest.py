import numpy as np
import pytest

from llgflow import GridSpec, get_workspace


class BandLimitedField:
    """Random trigonometric polynomial with an exact analytic evaluator.

    Frequencies are drawn with |f_j| <= kmax, so the same continuum field
    can be sampled on grids of different resolution; spectral operations
    on any grid with N > 2*kmax resolve it exactly.
    """

    def __init__(self, dimension, kmax=2, n_modes=6, seed=0, box_length=2 * np.pi):
        rng = np.random.default_rng(seed)
        self.L = box_length
        self.dimension = dimension
        freqs = rng.integers(-kmax, kmax + 1, size=(n_modes, dimension))
        keep = np.any(freqs != 0, axis=1)
        self.freqs = freqs[keep]
        ncoef = len(self.freqs)
        self.coeffs = rng.standard_normal(ncoef) + 1j * rng.standard_normal(ncoef)
        self.coeffs /= max(ncoef, 1)

    def __call__(self, x):
        """Evaluate at points x of shape (dimension, ...)."""
        out = np.zeros(x.shape[1:])
        for f, c in zip(self.freqs, self.coeffs):
            phase = np.tensordot(2 * np.pi / self.L * f.astype(float), x, axes=(0, 0))
            out = out + (c * np.exp(1j * phase)).real
        return out

    def on_grid(self, grid):
        return self(get_workspace(grid).x)


@pytest.fixture
def grid3():
    return GridSpec(dimension=3, points_per_axis=16, box_length=2 * np.pi)


@pytest.fixture
def grid2():
    return GridSpec(dimension=2, points_per_axis=32, box_length=2 * np.pi)


@pytest.fixture
def grid1():
    return GridSpec(dimension=1, points_per_axis=64, box_length=2 * np.pi)
