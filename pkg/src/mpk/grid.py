"""Sampled functions on centred uniform grids and their file formats.

A grid of ``n`` points per axis on the box ``[-L, L)^d`` has nodes
``x_k = -L + k h`` with ``h = 2L / n``.  Frequencies live on an identical grid.
The grid is self-dual (the DFT maps it onto itself exactly) when ``n = 4 L^2``.
"""
from __future__ import annotations

import struct
import warnings
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.signal import resample

from .errors import AliasRisk, DimensionMismatch, GridMismatch, MPKError

UPSAMPLE = 4
ALIAS_EDGE_RTOL = 1e-8
# computed outputs carry a noise floor of about 1e-7 of their peak, so only
# boundary mass well above it signals a result that does not fit the box
OUTPUT_EDGE_RTOL = 1e-5
MAGIC = b"MPGF"
VERSION = 1


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class GridFunction:
    """Complex samples of a function on ``[-L, L)^d`` with ``n`` points per axis.

    Parameters
    ----------
    samples : array_like, shape (n,) * d
    L : float
        Half-width of the box.

    Notes
    -----
    Instances are treated as immutable; the sample array is made read-only.
    """

    def __init__(self, samples, L: float):
        a = np.array(samples, dtype=complex)
        if a.ndim < 1 or len(set(a.shape)) != 1:
            raise GridMismatch(f"samples must have equal extent on every axis, got {a.shape}")
        n = a.shape[0]
        if not _is_pow2(n):
            raise GridMismatch(f"points per axis must be a power of two, got {n}")
        if not (L > 0 and np.isfinite(L)):
            raise GridMismatch("box half-width L must be positive")
        a.flags.writeable = False
        self.samples = a
        self.L = float(L)

    @classmethod
    def from_function(cls, fn, d: int, n: int, L: float) -> "GridFunction":
        """Sample ``fn`` (called on an array of points with last axis d)."""
        x = grid_axis(n, L)
        pts = np.stack(np.meshgrid(*([x] * d), indexing="ij"), axis=-1)
        return cls(np.asarray(fn(pts), dtype=complex).reshape((n,) * d), L)

    @property
    def dim(self) -> int:
        return self.samples.ndim

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def axis(self) -> np.ndarray:
        return grid_axis(self.n, self.L)

    def points(self) -> np.ndarray:
        """All grid nodes as an array of shape ``(n**d, d)``."""
        x = self.axis
        return np.stack(np.meshgrid(*([x] * self.dim), indexing="ij"), axis=-1).reshape(-1, self.dim)

    @property
    def self_dual(self) -> bool:
        return abs(self.n * self.spacing**2 - 1.0) < 1e-12

    def norm(self) -> float:
        """Discrete L2 norm ``h^{d/2} ||samples||``."""
        return float(np.linalg.norm(self.samples) * self.spacing ** (self.dim / 2))

    def inner(self, other: "GridFunction") -> complex:
        check_same_grid(self, other)
        return complex(np.vdot(other.samples, self.samples) * self.spacing**self.dim)

    def with_samples(self, samples) -> "GridFunction":
        return GridFunction(samples, self.L)

    def same_grid(self, other: "GridFunction") -> bool:
        return self.dim == other.dim and self.n == other.n and abs(self.L - other.L) < 1e-12 * self.L

    @cached_property
    def upsampled(self) -> np.ndarray:
        """Band-limited ``UPSAMPLE``-fold refinement on the same box.

        Obtained by zero-padding the DFT along each axis (the Nyquist bin is
        split evenly).  Node ``k`` of the refined grid sits at
        ``-L + k h / UPSAMPLE``.
        """
        a = np.asarray(self.samples)
        for ax in range(self.dim):
            a = resample(a, UPSAMPLE * self.n, axis=ax)
        a.flags.writeable = False
        return a

    @property
    def fine_step(self) -> float:
        return self.spacing / UPSAMPLE

    def edge_ratio(self) -> float:
        """Largest boundary sample relative to the peak modulus."""
        a = np.abs(self.samples)
        peak = a.max()
        if peak == 0:
            return 0.0
        edge = 0.0
        for ax in range(self.dim):
            edge = max(edge, np.take(a, 0, axis=ax).max(), np.take(a, -1, axis=ax).max())
        return float(edge / peak)

    def warn_if_edgy(self, what: str = "input", rtol: float = ALIAS_EDGE_RTOL) -> None:
        r = self.edge_ratio()
        if r > rtol:
            warnings.warn(
                f"{what} reaches the grid edge (edge/peak = {r:.2e}); periodic wrap-around may alias",
                AliasRisk,
                stacklevel=3,
            )

    def support_box(self, rtol: float = 1e-13, margin: int = 3) -> tuple[np.ndarray, np.ndarray]:
        """Bounding box of the samples with modulus above ``rtol * peak``.

        The box is widened by ``margin`` grid spacings and clipped to the grid.
        An all-zero function gets an empty box (``lo > hi``).
        """
        a = np.abs(self.samples)
        peak = a.max()
        d = self.dim
        if peak == 0:
            return np.full(d, 1.0), np.full(d, -1.0)
        mask = a > rtol * peak
        x = self.axis
        h = self.spacing
        lo, hi = np.empty(d), np.empty(d)
        for ax in range(d):
            other = tuple(i for i in range(d) if i != ax)
            hit = np.nonzero(mask.any(axis=other) if other else mask)[0]
            lo[ax] = max(x[hit[0]] - margin * h, -self.L)
            hi[ax] = min(x[hit[-1]] + margin * h, self.L)
        return lo, hi

    def __repr__(self) -> str:
        return f"GridFunction(d={self.dim}, n={self.n}, L={self.L:g})"


def grid_axis(n: int, L: float) -> np.ndarray:
    return -L + (2.0 * L / n) * np.arange(n)


def check_same_grid(f: GridFunction, g: GridFunction) -> None:
    if not f.same_grid(g):
        raise GridMismatch(f"grids differ: {f!r} vs {g!r}")


def check_dim(f: GridFunction, d: int) -> None:
    if f.dim != d:
        raise DimensionMismatch(f"function lives in dimension {f.dim}, matrix acts in dimension {d}")


# ---------------------------------------------------------------- binary and CSV I/O


def write_grid(f: GridFunction, path) -> Path:
    """Write the ``MPGF`` binary format.

    Layout: magic ``b"MPGF"``, u32 version, u32 d, u32 n, f64 L, then
    ``n**d`` little-endian (re, im) float64 pairs in row-major order.
    """
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIId", VERSION, f.dim, f.n, f.L))
        fh.write(np.ascontiguousarray(f.samples, dtype="<c16").tobytes())
    return path


def read_grid(path) -> GridFunction:
    """Read a grid function written by :func:`write_grid`."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise MPKError("not an MPGF grid file")
    version, d, n, L = struct.unpack("<IIId", raw[4:24])
    if version != VERSION:
        raise MPKError(f"unsupported MPGF version {version}")
    count = n**d
    data = np.frombuffer(raw, dtype="<c16", count=count, offset=24)
    if data.size != count:
        raise MPKError("MPGF payload is truncated")
    return GridFunction(data.reshape((n,) * d), L)


def write_grid_csv(f: GridFunction, path) -> Path:
    """CSV export for d <= 2 with columns ``x[, y], re, im``."""
    if f.dim > 2:
        raise DimensionMismatch("CSV export is only defined for d <= 2")
    path = Path(path)
    pts = f.points()
    vals = f.samples.reshape(-1)
    cols = ["x", "y"][: f.dim] + ["re", "im"]
    table = np.column_stack([pts, vals.real, vals.imag])
    np.savetxt(path, table, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
    return path
