"""Pseudo-spectral simulation and diagnostics for the damped spin flow
on the periodic box, its moving-frame reduction to a covariant complex
Ginzburg-Landau system, and the weighted-in-time norm monitors."""

from .errors import (
    BlowUpSuspected,
    ConfigError,
    FrameDegenerate,
    LLGFlowError,
    MollifierDegenerate,
    NoContraction,
    NonFinite,
    ProjectionDegenerate,
)
from .fieldio import read_field, write_field
from .grid import GridSpec, SpectralWorkspace, get_workspace
from .llg import (
    SolverConfig,
    SpinField,
    Trajectory,
    energy,
    energy_law_residual,
    evolve,
    local_energy_check,
    rhs_llg,
    sobolev_monitor,
    stability_distance,
    step,
)
from .frames import (
    ConnectionField,
    DerivedField,
    GaugePotential,
    TangentFrame,
    construct_frame,
    coulomb_gauge,
    coulomb_residual,
    derive_connection,
    extract_gauged,
    extract_u_trajectory,
    u_norm_series,
    verify_curvature,
    verify_torsion,
    verify_u0_consistency,
)
from .cgl import (
    A0Decomposition,
    NonlinearitySplit,
    PicardResult,
    PicardState,
    a0_decompose,
    assemble_F,
    connection_from_u,
    duhamel_convolve,
    graded_mesh,
    picard_solve,
    verify_nonlinear_bounds,
)
from .monitor import (
    DecayFit,
    NormSeries,
    check_bootstrap,
    check_decay_bound,
    check_theorem_bounds,
    fit_decay_exponent,
    r0_series,
    spectral_gap_time,
    weighted_norms,
)
from .scenarios import ScenarioSpec, make_initial, mollify_project

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
