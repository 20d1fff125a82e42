"""Independent reference computations used by the test-suite.

None of these share code paths with the routes inside ``apply_metaplectic``:
Gaussians are pushed through closed-form matrix formulas, generator products
are applied one elementary operator at a time, the integral representation is
summed by brute force on analytic inputs, and Schroedinger dynamics is
integrated by Strang splitting.
"""
from __future__ import annotations

import numpy as np

from mpk.grid import GridFunction
from mpk.metaplectic import chirp_multiply, fourier_transform, multiplier, rescale
from mpk.symplectic import SymplecticMatrix, mu_S, pseudo_inverse


def gaussian_image(S: SymplecticMatrix, G, pts) -> np.ndarray:
    """``S^`` applied to ``exp(-pi G x.x)`` (complex symmetric G, Re G > 0).

    With ``Z = i G`` the image is ``det(A + BZ)^{-1/2} exp(i pi Z' x.x)``,
    ``Z' = (C + DZ)(A + BZ)^{-1}``; the square-root branch is irrelevant
    after phase alignment.
    """
    Z = 1j * np.asarray(G, dtype=complex)
    W = S.A + S.B @ Z
    Zp = (S.C + S.D @ Z) @ np.linalg.inv(W)
    Zp = (Zp + Zp.T) / 2
    amp = np.linalg.det(W) ** -0.5
    return amp * np.exp(1j * np.pi * np.einsum("pi,ij,pj->p", pts, Zp, pts))


def gaussian_grid(d: int, n: int, L: float, G=None) -> GridFunction:
    G = np.eye(d) if G is None else np.asarray(G)
    return GridFunction.from_function(lambda x: np.exp(-np.pi * np.einsum("...i,ij,...j->...", x, G, x)), d, n, L)


def aligned_error(a, b) -> float:
    """Relative L2 error after removing the best global unimodular factor."""
    a, b = np.ravel(a), np.ravel(b)
    z = np.vdot(a, b)
    ph = z / abs(z) if abs(z) > 0 else 1.0
    return float(np.linalg.norm(a * ph - b) / np.linalg.norm(b))


def modulus_error(a, b) -> float:
    a, b = np.ravel(a), np.ravel(b)
    return float(np.linalg.norm(np.abs(a) - np.abs(b)) / np.linalg.norm(b))


def apply_word(word, f: GridFunction) -> GridFunction:
    """Apply a product of generators right to left.

    ``word`` is a list of ``(kind, param)`` with kind in ``J``, ``V``
    (chirp), ``D`` (dilation), ``U`` (Fourier multiplier), matching the
    matrix product ``S = S_1 S_2 ... S_k`` read left to right.
    """
    for kind, p in reversed(word):
        if kind == "J":
            f = fourier_transform(f)
        elif kind == "V":
            f = chirp_multiply(f, p)
        elif kind == "D":
            f = rescale(f, p)
        elif kind == "U":
            f = multiplier(f, p)
        else:
            raise ValueError(kind)
    return f


def integral_quadrature(S: SymplecticMatrix, fn, xi, du: float = 2e-3, U: float = 6.0) -> np.ndarray:
    """Riemann sum of the integral over ``(ker B)^perp``.

    ``S^f(xi) = mu e^{i pi D C^T xi.xi} int f(t + D^T xi) e^{i pi B^+ A t.t}
    e^{2 pi i C^T xi.t} dt`` with ``t = V u``, ``u`` on ``c + [-U, U]^r`` where
    ``c = -V^T D^T xi`` centres the window on the input's bulk for inputs
    concentrated near the origin; ``fn`` must be an analytic function of
    points ``(..., d)``.  Only ``r = 1`` and
    ``r = 2`` are supported (the grid over ``u`` is a full product).
    """
    sub = S.subspaces()
    V = sub.ker_perp.basis
    r = sub.rank
    Bp = pseudo_inverse(S.B)
    K = V.T @ Bp @ S.A @ V
    K = (K + K.T) / 2
    u1 = np.arange(-U, U + du / 2, du)
    u = np.stack(np.meshgrid(*([u1] * r), indexing="ij"), axis=-1).reshape(-1, r)
    out = np.empty(len(xi), dtype=complex)
    for k, x in enumerate(np.asarray(xi, dtype=float)):
        uc = u - V.T @ (S.D.T @ x)
        t = uc @ V.T
        base = np.exp(1j * np.pi * np.einsum("pi,ij,pj->p", uc, K, uc))
        y = t + S.D.T @ x
        ph = np.exp(2j * np.pi * t @ (S.C.T @ x))
        out[k] = np.sum(fn(y) * base * ph) * du**r
        out[k] *= np.exp(1j * np.pi * x @ S.D @ S.C.T @ x)
    return mu_S(S) * out


def split_step(u0: GridFunction, P, K, t: float, dt: float = 1e-3) -> GridFunction:
    """Strang splitting for ``i hbar u_t = Op(H) u`` with ``hbar = 1/(2 pi)``.

    ``H = P x.x / 2 + K xi.xi / 2``; in units of ``hbar = 1/(2 pi)`` this is
    ``u_t = -2 pi i (P x.x / 2 + K D.D / 2) u`` where ``D`` is frequency in the
    ``exp(2 pi i x xi)`` convention.  Periodic FFT on the grid of ``u0``.
    """
    d, n, h = u0.dim, u0.n, u0.spacing
    x = u0.points()
    P, K = np.atleast_2d(P), np.atleast_2d(K)
    pot = np.einsum("pi,ij,pj->p", x, P, x).reshape((n,) * d) / 2
    k1 = np.fft.fftfreq(n, d=h)
    kk = np.stack(np.meshgrid(*([k1] * d), indexing="ij"), axis=-1)
    kin = np.einsum("...i,ij,...j->...", kk, K, kk) / 2
    steps = int(round(abs(t) / dt))
    step = t / steps if steps else 0.0
    half = np.exp(-1j * np.pi * step * pot)
    full = np.exp(-2j * np.pi * step * kin)
    u = np.array(u0.samples)
    for _ in range(steps):
        u = half * u
        u = np.fft.ifftn(full * np.fft.fftn(u))
        u = half * u
    return u0.with_samples(u)
