"""Cross-Wigner distributions and the symplectic covariance check.

The cross-Wigner distribution is

    W(f, g)(x, xi) = 2^d int f(x + t) conj(g(x - t)) exp(-4 pi i xi.t) dt,

so that ``W(S^f) = W(f) o S^{-1}`` for every metaplectic operator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import GridMismatch
from .grid import GridFunction, check_dim, check_same_grid
from .metaplectic import apply_metaplectic, centered_dft, fourier_transform
from .symplectic import _as_sm

MAX_PHASE_SPACE_POINTS = 1 << 24
SUPPORT_RTOL = 1e-10
# covariance sums drop samples below this fraction of the peak; it sits under
# the ~1e-8 accuracy of the operator itself, whose noise floor would otherwise
# stretch the lag box across the whole grid
COVARIANCE_SUPPORT_RTOL = 1e-8


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Samples on a product grid ``x_axis^d x xi_axis^d``.

    ``values`` has shape ``(nx,) * d + (n,) * d``.
    """

    values: np.ndarray
    x_axis: np.ndarray
    xi_axis: np.ndarray
    dim: int

    def marginal_x(self) -> np.ndarray:
        """Integral over the frequency variables."""
        h = self.xi_axis[1] - self.xi_axis[0]
        axes = tuple(range(self.dim, 2 * self.dim))
        return self.values.sum(axis=axes) * h**self.dim


def wigner(f: GridFunction, g: GridFunction | None = None, x_stride: int = 1) -> PhaseSpaceGrid:
    """Cross-Wigner distribution on the phase-space grid.

    Lags run over ``t = k h / 2``, read exactly from the 4x refinement, and the
    lag integral is evaluated by a centred DFT onto the frequency grid.  The
    ``x`` nodes may be thinned with ``x_stride``.  Intended for ``d = 1`` or
    small grids; the output has ``(n / x_stride)^d n^d`` entries.
    """
    g = f if g is None else g
    check_same_grid(f, g)
    d, n, L, h = f.dim, f.n, f.L, f.spacing
    xi_idx = np.arange(0, n, x_stride)
    nx = xi_idx.size
    if float(nx) ** d * float(n) ** d > MAX_PHASE_SPACE_POINTS:
        raise GridMismatch("phase-space grid too large; raise x_stride or use wigner_at")
    ff, gg = f.upsampled, g.upsampled
    m = ff.shape[0]
    # lag t_k = (k - n) h / 2, k = 0..2n-1, i.e. fine-grid offset 2(k - n)
    k = np.arange(2 * n) - n
    prod = np.ones((nx,) * d + (2 * n,) * d, dtype=complex)
    idx_p = 4 * xi_idx[:, None] + 2 * k[None, :]
    idx_m = 4 * xi_idx[:, None] - 2 * k[None, :]
    ok = (idx_p >= 0) & (idx_p < m) & (idx_m >= 0) & (idx_m < m)
    ip = np.clip(idx_p, 0, m - 1)
    im = np.clip(idx_m, 0, m - 1)
    # broadcast the per-axis index tables over the (x, t) product grid
    grids_p = []
    grids_m = []
    for ax in range(d):
        shape = [1] * (2 * d)
        shape[ax] = nx
        shape[d + ax] = 2 * n
        grids_p.append(ip.reshape(shape))
        grids_m.append(im.reshape(shape))
        prod = prod * ok.reshape(shape)
    prod = prod * ff[tuple(grids_p)] * np.conj(gg[tuple(grids_m)])
    # W = sum_k P_k exp(-2 pi i xi s_k) h^d with s_k = 2 t_k = -2L + k h
    for ax in range(d):
        prod = centered_dft(prod, d + ax, -2.0 * L, h, -L, h, n, sign=-1)
    return PhaseSpaceGrid(prod, f.axis[xi_idx], f.axis, d)


def wigner_at(f: GridFunction, g: GridFunction | None, x, xi, backend=None,
              rtol: float = SUPPORT_RTOL) -> np.ndarray:
    """Cross-Wigner values at arbitrary phase-space points.

    Parameters
    ----------
    x, xi : ndarray, shape (P, d)
        Position and frequency parts of the evaluation points.
    rtol : float
        Samples below ``rtol`` times the peak modulus are treated as zero when
        bounding the lag range.
    """
    g = f if g is None else g
    check_same_grid(f, g)
    x = np.asarray(x, dtype=float).reshape(-1, f.dim)
    xi = np.asarray(xi, dtype=float).reshape(-1, f.dim)
    box_f = f.support_box(rtol)
    box_g = g.support_box(rtol)
    return kernels.wigner_sum(
        f.upsampled, g.upsampled, -f.L, f.fine_step, x, xi, f.spacing / 2, box_f, box_g, backend=backend
    )


def phase_space_sample(f: GridFunction, size: int | None = None, seed: int = 0, rtol: float = 1e-6):
    """Uniform random points in a box covering the effective support of ``W(f)``.

    Position ranges come from the support box of ``f`` and frequency ranges from
    that of its Fourier transform (both at ``rtol`` of the peak).  Returns an
    array of shape ``(size, 2d)``.
    """
    d = f.dim
    size = size or (512 if d == 1 else 128)
    xlo, xhi = f.support_box(rtol, margin=0)
    klo, khi = fourier_transform(f).support_box(rtol, margin=0)
    lo, hi = np.r_[xlo, klo], np.r_[xhi, khi]
    rng = np.random.default_rng(seed)
    return lo + (hi - lo) * rng.random((size, 2 * d))


def check_covariance(S, f: GridFunction, Sf: GridFunction | None = None, size: int | None = None,
                     seed: int = 0, backend=None) -> float:
    """Relative L2 defect of ``W(S^f)(S w) = W(f)(w)`` over sampled phase-space points.

    The points ``w`` are drawn uniformly from a box covering the effective
    support of ``W(f)``.  Evaluating both sides pointwise avoids forming the
    full ``n^{2d}`` phase-space grid, which is out of reach for ``d >= 2``.

    Returns
    -------
    float
        ``||W(S^f)(S w) - W(f)(w)|| / ||W(f)(w)||`` over the sample.
    """
    S = _as_sm(S)
    check_dim(f, S.dim)
    d = S.dim
    if Sf is None:
        Sf = apply_metaplectic(S, f, backend=backend)
    check_same_grid(f, Sf)
    w = phase_space_sample(f, size, seed)
    z = w @ S.matrix.T
    rt = COVARIANCE_SUPPORT_RTOL
    rhs = wigner_at(f, f, w[:, :d], w[:, d:], backend=backend, rtol=rt)
    lhs = wigner_at(Sf, Sf, z[:, :d], z[:, d:], backend=backend, rtol=rt)
    den = np.linalg.norm(rhs)
    if den == 0:
        return float(np.linalg.norm(lhs))
    return float(np.linalg.norm(lhs - rhs) / den)
