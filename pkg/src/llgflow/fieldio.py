"""Flat binary serialization of grid fields.

Layout (little-endian):
    magic   4 bytes  b"LLGF"
    version u32      currently 1
    n       u32      spatial dimension
    N       u32      points per axis
    L       f64      box length
followed by the row-major (C-order) field values: 64-bit floats for real
fields, interleaved re/im pairs (i.e. complex128) for complex fields.
Component axes, if any, come first in the flattened order; the reader is
told whether to expect real or complex data since the byte stream alone
cannot distinguish a real field with 2k components from a complex one
with k.
"""

from __future__ import annotations

import struct

import numpy as np

from .grid import GridSpec

MAGIC = b"LLGF"
VERSION = 1
_HEADER = struct.Struct("<4sIII d")


def write_field(path, values: np.ndarray, grid: GridSpec) -> None:
    """Write a field (leading component axes allowed) to `path`."""
    values = np.asarray(values)
    if values.shape[values.ndim - grid.dimension:] != grid.shape:
        raise ValueError(
            f"field shape {values.shape} does not end with grid shape {grid.shape}"
        )
    if np.iscomplexobj(values):
        payload = np.ascontiguousarray(values, dtype="<c16")
    else:
        payload = np.ascontiguousarray(values, dtype="<f8")
    header = _HEADER.pack(
        MAGIC, VERSION, grid.dimension, grid.points_per_axis, grid.box_length
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_field(path, kind: str = "real"):
    """Read a field written by :func:`write_field`.

    Parameters
    ----------
    kind : "real" or "complex"
        Interpretation of the payload; see the module docstring.

    Returns
    -------
    (values, grid) : the array with shape (ncomp, *grid.shape) -- or just
    (*grid.shape) when there is a single component -- and the GridSpec.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n, n_pts, box_length = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    grid = GridSpec(dimension=n, points_per_axis=n_pts, box_length=box_length)
    dtype = np.dtype("<c16") if kind == "complex" else np.dtype("<f8")
    if kind not in ("real", "complex"):
        raise ValueError(f"kind must be 'real' or 'complex', got {kind!r}")
    payload = np.frombuffer(raw, dtype=dtype, offset=_HEADER.size)
    if payload.size % grid.num_points != 0:
        raise ValueError(f"{path}: payload size {payload.size} does not tile the grid")
    ncomp = payload.size // grid.num_points
    shape = grid.shape if ncomp == 1 else (ncomp,) + grid.shape
    values = payload.reshape(shape).astype(dtype.newbyteorder("="))
    return values, grid
