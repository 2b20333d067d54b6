"""Run configuration: a flat key = value file with dotted section names.

Grammar (one entry per line):

    # comment                 blank lines and '#' comments are skipped
    section.key = value       value types are fixed per key (see REFERENCE)

Values: integers, floats ('1e-3' accepted), strings (unquoted), booleans
(true/false), comma-separated tuples ('1,0,0'), or empty (meaning "use
the built-in default"). Unknown or duplicated keys are errors; all
diagnostics carry the line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .grid import GridSpec
from .llg import SolverConfig
from .scenarios import ScenarioSpec


def _parse_bool(text):
    if text.lower() in ("true", "yes", "1"):
        return True
    if text.lower() in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_tuple(text):
    return tuple(int(part.strip()) for part in text.split(","))


def _parse_float_tuple(text):
    return tuple(float(part.strip()) for part in text.split(","))


# key -> (parser, default, comment); None default means "optional"
_SCHEMA = {
    "grid.dimension": (int, 3, "spatial dimension n in {1,2,3}"),
    "grid.points_per_axis": (int, 32, "grid points N per axis (even, >= 8)"),
    "grid.box_length": (float, 2 * np.pi, "periodic box side length L"),
    "solver.lam": (float, 1.0, "damping parameter (> 0)"),
    "solver.dt": (float, 1e-3, "time step"),
    "solver.t_end": (float, 0.5, "final time"),
    "solver.scheme": (str, "imex", "imex | rk4"),
    "solver.projection_tolerance": (float, 1e-10, "post-step unit-length tolerance"),
    "solver.record_every": (int, 10, "steps between norm records"),
    "solver.snapshot_every": (int, 1, "records between field snapshots"),
    "solver.grad_ceiling": (float, None, "blow-up ceiling for ||grad m||_inf (default 1e3/h)"),
    "scenario.kind": (str, "random-small", "linear-wave | bubble | random-small | custom-file"),
    "scenario.amplitude": (float, 0.05, "raw amplitude (ignored when target set)"),
    "scenario.wavevector": (_parse_int_tuple, (1, 0, 0), "integer wavevector for linear-wave"),
    "scenario.support_radius": (float, 1.0, "bubble support radius"),
    "scenario.center": (_parse_float_tuple, None, "bubble center (default box center)"),
    "scenario.seed": (int, 0, "random seed"),
    "scenario.kmax": (int, 1, "band limit for random-small"),
    "scenario.target_grad_ln": (float, None, "target ||grad m0||_{L^n}"),
    "scenario.m_inf": (_parse_float_tuple, (0.0, 0.0, 1.0), "far-field direction"),
    "scenario.path": (str, None, "field file for custom-file"),
    "monitor.delta": (float, 0.62, "weight exponent delta in (3/5, 2/3)"),
    "monitor.weighted": (_parse_bool, True, "extract u and compute K/K'/R/R0"),
    "monitor.sigma": (int, 3, "Sobolev monitor order (0 disables)"),
    "monitor.decay_window": (_parse_float_tuple, None, "t0,t1 for the decay fit"),
    "picard.mesh_points": (int, 40, "base points of the graded time mesh"),
    "picard.tol": (float, 1e-9, "sup-difference stopping tolerance"),
    "picard.max_iter": (int, 25, "iteration cap"),
    "picard.smallness_gate": (float, 0.5, "reject ||u0||_Ln above this (0 disables)"),
    "output.dir": (str, "out", "output directory"),
    "output.checkpoint_every": (int, 0, "snapshots between field checkpoints (0 = final only)"),
}


def parse_config_text(text: str) -> dict:
    """Parse the key = value format; raises ConfigError with line numbers."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        parser, default, _ = _SCHEMA[key]
        if val == "":
            values[key] = default
            continue
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    for key, (_, default, _) in _SCHEMA.items():
        values.setdefault(key, default)
    return values


def reference_config_text() -> str:
    """The fully commented reference config with every default explicit."""
    lines = ["# llgflow run configuration (all defaults explicit)"]
    section = None
    for key, (_, default, comment) in _SCHEMA.items():
        sec = key.split(".", 1)[0]
        if sec != section:
            lines.append("")
            lines.append(f"# [{sec}]")
            section = sec
        if default is None:
            rendered = ""
        elif isinstance(default, tuple):
            rendered = ",".join(repr(v) if isinstance(v, float) else str(v) for v in default)
        elif isinstance(default, bool):
            rendered = "true" if default else "false"
        elif isinstance(default, float):
            rendered = repr(default)
        else:
            rendered = str(default)
        lines.append(f"{key} = {rendered:<24} # {comment}")
    lines.append("")
    return "\n".join(lines)


@dataclass
class RunConfig:
    """Everything one run needs, assembled from a parsed config."""

    grid: GridSpec
    solver: SolverConfig
    scenario: ScenarioSpec
    delta: float
    monitor_weighted: bool
    monitor_sigma: int
    decay_window: tuple | None
    picard_mesh_points: int
    picard_tol: float
    picard_max_iter: int
    picard_smallness_gate: float | None
    output_dir: str
    checkpoint_every: int
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, v: dict) -> "RunConfig":
        try:
            grid = GridSpec(
                dimension=v["grid.dimension"],
                points_per_axis=v["grid.points_per_axis"],
                box_length=v["grid.box_length"],
            )
            solver = SolverConfig(
                lam=v["solver.lam"],
                dt=v["solver.dt"],
                t_end=v["solver.t_end"],
                scheme=v["solver.scheme"],
                projection_tolerance=v["solver.projection_tolerance"],
                record_every=v["solver.record_every"],
                snapshot_every=v["solver.snapshot_every"],
                grad_ceiling=v["solver.grad_ceiling"],
            )
            scenario = ScenarioSpec(
                kind=v["scenario.kind"],
                amplitude=v["scenario.amplitude"],
                wavevector=v["scenario.wavevector"],
                support_radius=v["scenario.support_radius"],
                center=v["scenario.center"],
                seed=v["scenario.seed"],
                kmax=v["scenario.kmax"],
                target_grad_ln=v["scenario.target_grad_ln"],
                m_inf=v["scenario.m_inf"],
                path=v["scenario.path"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        gate = v["picard.smallness_gate"]
        return cls(
            grid=grid,
            solver=solver,
            scenario=scenario,
            delta=v["monitor.delta"],
            monitor_weighted=v["monitor.weighted"],
            monitor_sigma=v["monitor.sigma"],
            decay_window=v["monitor.decay_window"],
            picard_mesh_points=v["picard.mesh_points"],
            picard_tol=v["picard.tol"],
            picard_max_iter=v["picard.max_iter"],
            picard_smallness_gate=None if gate == 0 else gate,
            output_dir=v["output.dir"],
            checkpoint_every=v["output.checkpoint_every"],
            raw=dict(v),
        )

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls.from_values(parse_config_text(text))

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text)

    def echo(self) -> dict:
        """JSON-safe copy of the parsed key/value map."""
        out = {}
        for key, val in sorted(self.raw.items()):
            if isinstance(val, tuple):
                out[key] = list(val)
            else:
                out[key] = val
        return out
