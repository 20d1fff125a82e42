"""Metaplectic operators acting on grid functions.

Conventions: the Fourier transform is ``Ff(xi) = int f(x) exp(-2 pi i x.xi) dx``
and a metaplectic operator ``S^`` satisfies ``W(S^ f)(z) = W(f)(S^{-1} z)``.
With this normalisation

* ``F`` corresponds to ``J``,
* the chirp ``f -> exp(i pi Qx.x) f`` to ``V_Q = [[I, 0], [Q, I]]``,
* the rescaling ``f -> |det E|^{1/2} f(E .)`` to ``D_E = diag(E^{-1}, E^T)``,
* the Fourier multiplier ``F^{-1} exp(-i pi P xi.xi) F`` to ``U_P = [[I, P], [0, I]]``.

:func:`apply_metaplectic` evaluates the operator of an arbitrary symplectic
matrix through an integral over ``(ker B)^perp``, with fast special routes for
``B = 0`` and invertible ``B``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.signal import czt

from . import kernels
from .errors import AliasRisk, GridMismatch
from .grid import OUTPUT_EDGE_RTOL, GridFunction, check_dim
from .symplectic import SymplecticMatrix, _as_sm, mu_S, output_split, pseudo_inverse

MAX_SPECTRAL_POINTS = 1 << 24


def centered_dft(a, axis: int, x0: float, hx: float, xi0: float, hxi: float, m: int, sign: int = -1):
    """Riemann sum ``hx * sum_k a_k exp(sign 2 pi i xi_m x_k)`` along one axis.

    Input nodes are ``x_k = x0 + k hx`` and output nodes ``xi_m = xi0 + m hxi``
    for ``m = 0..m-1``.  Uses a plain FFT when ``hx * hxi * len = 1`` and the
    output has the input length, a chirp-z transform otherwise.
    """
    a = np.moveaxis(np.asarray(a, dtype=complex), axis, -1)
    n = a.shape[-1]
    k = np.arange(n)
    mm = np.arange(m)
    s = float(sign)
    a = a * np.exp(s * 2j * np.pi * xi0 * hx * k)
    if m == n and abs(n * hx * hxi - 1.0) < 1e-12:
        out = np.fft.fft(a, axis=-1) if sign < 0 else np.fft.ifft(a, axis=-1) * n
    else:
        out = czt(a, m=m, w=np.exp(s * 2j * np.pi * hx * hxi), a=1.0, axis=-1)
    out = out * (hx * np.exp(s * 2j * np.pi * (xi0 * x0 + hxi * x0 * mm)))
    return np.moveaxis(out, -1, axis)


def _grid_dft(a, axis: int, f: GridFunction, sign: int):
    """Transform one axis onto the identical grid, keeping only the Nyquist band.

    The samples determine a band-limited function whose spectrum lives in
    ``|xi| <= 1 / (2h)``.  When the grid is coarser than self-dual
    (``n < 4 L^2``) the frequency box is wider than that band and the Riemann
    sum would repeat the spectrum with period ``1 / h``; those copies are
    zeroed.
    """
    h, L, n = f.spacing, f.L, f.n
    out = centered_dft(a, axis, -L, h, -L, h, n, sign)
    nyq = 0.5 / h
    if nyq < L:
        keep = np.abs(f.axis) <= nyq * (1 + 1e-12)
        shape = [1] * out.ndim
        shape[axis] = n
        out = out * keep.reshape(shape)
    return out


def fourier_transform(f: GridFunction, sign: int = -1) -> GridFunction:
    """Fourier transform onto the identical frequency grid.

    ``sign=-1`` gives ``F`` and ``sign=+1`` its inverse.  Exact on band-limited
    samples; on grids with ``n < 4 L^2`` frequencies beyond ``1 / (2h)`` are zero.
    """
    a = f.samples
    for ax in range(f.dim):
        a = _grid_dft(a, ax, f, sign)
    return f.with_samples(a)


def inverse_fourier_transform(f: GridFunction) -> GridFunction:
    return fourier_transform(f, sign=+1)


def _sym(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return 0.5 * (M + M.T)


def _quad(M, x):
    """Row-wise quadratic form ``x_p . M x_p``."""
    return np.einsum("pi,ij,pj->p", x, M, x)


def _chirp_bandwidth_check(f: GridFunction, Q, step: float, what: str) -> None:
    lo, hi = f.support_box()
    if np.any(lo > hi):
        return
    ext = np.maximum(np.abs(lo), np.abs(hi))
    slope = float(np.max(np.abs(Q) @ ext))
    if slope > 0.5 / step:
        warnings.warn(
            f"{what}: chirp frequency up to {slope:.3g} exceeds the Nyquist limit {0.5 / step:.3g}",
            AliasRisk,
            stacklevel=3,
        )


def chirp_multiply(f: GridFunction, Q) -> GridFunction:
    """Multiply by ``exp(i pi Qx.x)``; the operator of ``V_Q``."""
    Q = _sym(Q)
    check_dim(f, Q.shape[0])
    _chirp_bandwidth_check(f, Q, f.spacing, "chirp_multiply")
    x = f.points()
    return f.with_samples(f.samples * np.exp(1j * np.pi * _quad(Q, x)).reshape(f.samples.shape))


def rescale(f: GridFunction, E, backend=None) -> GridFunction:
    """``t -> |det E|^{1/2} f(E t)``; the operator of ``D_E``.

    Off-grid values come from cubic interpolation of the 4x band-limited
    refinement of ``f``.  Points mapped outside the box read as zero.
    """
    E = np.atleast_2d(np.asarray(E, dtype=float))
    check_dim(f, E.shape[0])
    if np.array_equal(E, np.eye(f.dim)):
        return f
    f.warn_if_edgy("rescale input")
    pts = f.points() @ E.T
    vals = kernels.interp_cubic(f.upsampled, -f.L, f.fine_step, pts, backend=backend)
    out = np.sqrt(abs(np.linalg.det(E))) * vals
    return f.with_samples(out.reshape(f.samples.shape))


def multiplier(f: GridFunction, P) -> GridFunction:
    """Fourier multiplier ``F^{-1}(exp(-i pi P xi.xi) Ff)``; the operator of ``U_P``."""
    P = _sym(P)
    check_dim(f, P.shape[0])
    fh = fourier_transform(f)
    x = f.points()
    fh = fh.with_samples(fh.samples * np.exp(-1j * np.pi * _quad(P, x)).reshape(f.samples.shape))
    return inverse_fourier_transform(fh)


# ---------------------------------------------------------------- general operator


def apply_metaplectic(S, f: GridFunction, method: str = "auto", backend=None) -> GridFunction:
    """Apply the metaplectic operator of ``S`` to ``f``.

    Parameters
    ----------
    S : SymplecticMatrix or array_like
    f : GridFunction
        Input samples; the output lives on the same grid.
    method : {"auto", "fiber", "free"}
        ``"fiber"`` evaluates the integral over ``(ker B)^perp`` for every output
        point and works for any ``B != 0``.  ``"free"`` uses the
        chirp/transform/chirp factorisation and needs an invertible ``B``.
        ``"auto"`` picks a route, see :func:`plan_route`.
    backend : {"numba", "numpy"}, optional

    Notes
    -----
    Operators are normalised with a positive amplitude factor.  Metaplectic
    operators are only defined up to a unimodular constant, and routes that
    insert exact partial Fourier transforms may differ from the direct route
    by such a constant.
    """
    S = _as_sm(S)
    check_dim(f, S.dim)
    f.warn_if_edgy("metaplectic input")
    if method not in ("auto", "fiber", "free"):
        raise ValueError(f"unknown method {method!r}")
    g = _dispatch(S, f, method, backend)
    g.warn_if_edgy("metaplectic output", OUTPUT_EDGE_RTOL)
    return g


def _dispatch(S: SymplecticMatrix, f: GridFunction, method: str, backend) -> GridFunction:
    if S.rank_B == 0:
        return _apply_rescaling(S, f, backend)
    if method == "fiber":
        return _apply_fiber(S, f, backend)
    if method == "free":
        if S.rank_B != S.dim:
            raise GridMismatch("the free route needs an invertible B block")
        if not free_route_ok(S, f):
            warnings.warn("B is too small for the grid: the free route replicates its output onto the grid",
                          AliasRisk, stacklevel=3)
        return _apply_free(S, f, backend)
    route = plan_route(S, f)
    g = partial_fourier(f, route.pre) if route.pre else f
    if route.kind == "free":
        g = _apply_free(route.inner, g, backend)
    elif route.kind == "fiber":
        g = _apply_fiber(route.inner, g, backend)
    else:
        g = _apply_rescaling(route.inner, g, backend)
    return partial_fourier(g, route.post) if route.post else g


def partial_fourier(f: GridFunction, axes, sign: int = -1) -> GridFunction:
    """Fourier transform along the listed axes only."""
    a = f.samples
    for ax in axes:
        a = _grid_dft(a, ax, f, sign)
    return f.with_samples(a)


def partial_fourier_matrix(d: int, axes) -> np.ndarray:
    """Symplectic matrix of the partial Fourier transform along ``axes``."""
    P = np.zeros((d, d))
    for ax in axes:
        P[ax, ax] = 1.0
    Q = np.eye(d) - P
    return np.block([[Q, P], [-P, Q]])


@dataclass(frozen=True)
class Route:
    """Factorisation ``S^ = F_post o inner^ o F_pre`` chosen by :func:`plan_route`."""

    kind: str
    inner: SymplecticMatrix
    pre: tuple = ()
    post: tuple = ()


FIBER_BUDGET = 2e8


def fiber_cost(S: SymplecticMatrix, f: GridFunction) -> float:
    """Rough count of interpolations the fiber route needs."""
    r = S.rank_B
    lo, hi = f.support_box()
    span = float(np.linalg.norm(np.maximum(hi - lo, 0.0)))
    return float(f.n) ** S.dim * (span / fiber_step(S, f) + 1.0) ** r


def plan_route(S: SymplecticMatrix, f: GridFunction) -> Route:
    """Choose how to evaluate ``S^f``.

    The direct route is used when it is alias-free and affordable: the free
    factorisation for invertible ``B``, the fiber integral for singular ``B``.
    Otherwise ``S`` is rewritten as ``J_post S' J_pre`` with partial Fourier
    transforms ``J_I`` (exact on the grid) so that the upper-right block of
    ``S'`` is as well conditioned as possible.  This handles nearly singular
    ``B``, where both direct routes need excessively fine sampling.
    """
    d, r = S.dim, S.rank_B
    if r == d and free_route_ok(S, f):
        return Route("free", S)
    if r < d and fiber_cost(S, f) <= FIBER_BUDGET:
        return Route("fiber", S)
    subsets = [tuple(c) for k in range(d + 1) for c in combinations(range(d), k)]
    best, best_s = None, -1.0
    for pre in subsets:
        for post in subsets:
            if not pre and not post:
                continue
            M = np.linalg.inv(partial_fourier_matrix(d, post)) @ S.matrix @ np.linalg.inv(
                partial_fourier_matrix(d, pre))
            s = np.linalg.svd(M[:d, d:], compute_uv=False)[-1]
            if s > best_s:
                best, best_s = (pre, post, M), s
    pre, post, M = best
    inner = SymplecticMatrix(M)
    g = partial_fourier(f, pre) if pre else f
    if inner.rank_B == d and free_route_ok(inner, g):
        return Route("free", inner, pre, post)
    if fiber_cost(S, f) <= 10 * FIBER_BUDGET:
        return Route("fiber", S)
    raise GridMismatch("no affordable alias-free route for this matrix on this grid; refine the grid")


def _spectral_grid(S: SymplecticMatrix, f: GridFunction):
    """Auxiliary frequency grid (origin, spacing, counts) used by the free route."""
    lo, hi = f.support_box()
    X = float(np.max(np.maximum(np.abs(lo), np.abs(hi))))
    hf = f.fine_step
    dlt = min(hf, 1.0 / (32.0 * max(X, hf)))
    R = np.abs(np.linalg.inv(S.B)) @ np.full(S.dim, f.L) + 3 * dlt
    m = np.ceil(2 * R / dlt).astype(int) + 1
    return R, dlt, m


def free_route_ok(S: SymplecticMatrix, f: GridFunction) -> bool:
    """Whether the chirp/transform/chirp route is alias-free and affordable.

    The Riemann sum over the refined grid replicates the output at shifts
    ``B j / h_fine``; these must clear the output box (diameter ``2 sqrt(d) L``).
    """
    smin = S.subspaces().singular_values[-1]
    if smin < 2.0 * np.sqrt(S.dim) * f.L * f.fine_step:
        return False
    _, _, m = _spectral_grid(S, f)
    return bool(np.prod(m.astype(float)) <= MAX_SPECTRAL_POINTS)


def _apply_rescaling(S: SymplecticMatrix, f: GridFunction, backend) -> GridFunction:
    """``B = 0``: ``S^f(xi) = |det A|^{-1/2} exp(i pi C A^{-1} xi.xi) f(A^{-1} xi)``."""
    Ainv = np.linalg.inv(S.A)
    g = rescale(f, Ainv, backend=backend)
    CA = _sym(S.C @ Ainv)
    if not np.any(CA):
        return g
    x = f.points()
    return g.with_samples(g.samples * np.exp(1j * np.pi * _quad(CA, x)).reshape(f.samples.shape))


def _apply_free(S: SymplecticMatrix, f: GridFunction, backend) -> GridFunction:
    """Invertible ``B``: chirp, Fourier transform, rescale by ``B^{-1}``, chirp.

    The transform of the chirped refinement is evaluated by chirp-z transforms
    on an auxiliary frequency grid covering ``B^{-1}`` of the output box, then
    interpolated at ``B^{-1} xi``.
    """
    d, L = S.dim, f.L
    Binv = np.linalg.inv(S.B)
    K = _sym(Binv @ S.A)
    fine = f.upsampled
    hf = f.fine_step
    lo, hi = f.support_box()
    if np.any(lo > hi):
        return f.with_samples(np.zeros_like(f.samples))

    # crop the refined table to the support box
    i0 = np.clip(np.floor((lo + L) / hf).astype(int), 0, fine.shape[0] - 1)
    i1 = np.clip(np.ceil((hi + L) / hf).astype(int) + 1, 1, fine.shape[0])
    sl = tuple(slice(a, b) for a, b in zip(i0, i1))
    g = np.array(fine[sl])
    x0 = -L + i0 * hf
    axes = [x0[j] + hf * np.arange(i1[j] - i0[j]) for j in range(d)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
    g *= np.exp(1j * np.pi * _quad(K, pts)).reshape(g.shape)

    # frequency grid for the transform: spacing resolves the support extent
    R, dlt, m = _spectral_grid(S, f)
    if np.prod(m.astype(float)) > MAX_SPECTRAL_POINTS:
        raise GridMismatch(
            f"B^-1 maps the grid onto a frequency box needing {int(np.prod(m.astype(float)))} samples;"
            " refine the grid or use method='fiber'"
        )
    F = g
    for j in range(d):
        F = centered_dft(F, j, x0[j], hf, -R[j], dlt, int(m[j]), sign=-1)

    xi = f.points()
    eta = xi @ Binv.T
    vals = kernels.interp_cubic(F, -R, dlt, eta, backend=backend)
    amp = abs(np.linalg.det(S.B)) ** -0.5
    DB = S.D @ Binv
    out = amp * np.exp(1j * np.pi * np.einsum("pi,pi->p", xi @ DB.T, xi)) * vals
    return f.with_samples(out.reshape(f.samples.shape))


def fiber_step(S: SymplecticMatrix, f: GridFunction) -> float:
    """Quadrature spacing along ``(ker B)^perp``.

    A Riemann sum with spacing ``du`` replicates the output at shifts of at least
    ``sigma_min(B) / du``; requiring this to exceed the output box diameter
    ``2 sqrt(d) L`` keeps the replicas off the grid.
    """
    sub = S.subspaces()
    smin = sub.singular_values[sub.rank - 1]
    return float(min(f.spacing, smin / (2.0 * np.sqrt(S.dim) * f.L)))


def _apply_fiber(S: SymplecticMatrix, f: GridFunction, backend) -> GridFunction:
    """General route: integrate over ``(ker B)^perp`` for each output point.

    Each frequency splits as ``xi = xi1 + xi2`` with ``xi1`` in ``R(B)`` and
    ``xi2`` in ``A(ker B)``, and::

        S^f(xi) = mu_S exp(i pi (D B^+ xi1.xi1 + D C^T xi2.xi2))
                  * int f(s + D^T xi2) exp(i pi B^+ A s.s)
                                     exp(-2 pi i (B^+ xi1 - C^T xi2).s) ds

    with ``s`` ranging over ``(ker B)^perp``.
    """
    d = S.dim
    sub = S.subspaces()
    V = sub.ker_perp.basis
    Bp = pseudo_inverse(S.B, S.rank_tol)
    split = output_split(S)
    xi = f.points()
    xi1, xi2 = split.split(xi)
    Y = xi2 @ S.D  # rows are D^T xi2
    Wv = (xi1 @ Bp.T - xi2 @ S.C) @ V
    K = _sym(V.T @ Bp @ S.A @ V)
    lo, hi = f.support_box()
    if np.any(lo > hi):
        return f.with_samples(np.zeros_like(f.samples))
    du = fiber_step(S, f)
    vals = kernels.fiber_sum(f.upsampled, -f.L, f.fine_step, lo, hi, V, K, Y, Wv, du, backend=backend)
    phase = np.einsum("pi,pi->p", xi1 @ (S.D @ Bp).T, xi1) + np.einsum("pi,pi->p", xi2 @ (S.D @ S.C.T).T, xi2)
    out = mu_S(S) * np.exp(1j * np.pi * phase) * vals
    return f.with_samples(out.reshape(f.samples.shape))
