"""Hot loops: cubic interpolation, fiber quadrature and pointwise Wigner sums.

Every kernel exists twice, as a numba ``@njit`` loop and as a vectorised numpy
twin with the same signature.  The numba versions are used by default; set
``MPK_BACKEND=numpy`` to force the numpy path (or pass ``backend=``).  The
numba thread count can be capped with ``MPK_THREADS``.

All kernels read a complex sample table on a uniform grid with origin ``lo[j]``
and spacing ``step[j]`` along axis j.  Values outside the table are zero.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False

_env_backend = os.environ.get("MPK_BACKEND", "numba").strip().lower()
DEFAULT_BACKEND = "numba" if (HAVE_NUMBA and _env_backend != "numpy") else "numpy"

if HAVE_NUMBA and "NUMBA_THREADING_LAYER" not in os.environ:
    # avoid the noisy TBB version probe; workqueue is always available
    numba.config.THREADING_LAYER = "workqueue"

if HAVE_NUMBA and os.environ.get("MPK_THREADS"):
    try:
        numba.set_num_threads(max(1, min(int(os.environ["MPK_THREADS"]), numba.config.NUMBA_NUM_THREADS)))
    except ValueError:
        pass


def _resolve(backend):
    backend = (backend or DEFAULT_BACKEND).lower()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        backend = "numpy"
    return backend


def _lagrange4(t):
    """Cubic Lagrange weights for nodes -1, 0, 1, 2 at offset t (vectorised)."""
    return np.stack(
        [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ],
        axis=-1,
    )


# ---------------------------------------------------------------- numpy twins


def _interp_np(tab, lo, step, pts):
    d = tab.ndim
    shape = np.array(tab.shape)
    strides = np.array([int(np.prod(tab.shape[j + 1 :])) for j in range(d)])
    flat = tab.ravel()
    s = (pts - lo) / step
    i0 = np.floor(s)
    w = _lagrange4(s - i0)  # (N, d, 4)
    base = i0.astype(np.int64) - 1
    out = np.zeros(pts.shape[0], dtype=complex)
    for tap in np.ndindex(*(4,) * d):
        idx = np.zeros(pts.shape[0], dtype=np.int64)
        wt = np.ones(pts.shape[0])
        ok = np.ones(pts.shape[0], dtype=bool)
        for j, k in enumerate(tap):
            ii = base[:, j] + k
            ok &= (ii >= 0) & (ii < shape[j])
            idx += np.clip(ii, 0, shape[j] - 1) * strides[j]
            wt = wt * w[:, j, k]
        out += np.where(ok, wt * flat[idx], 0.0)
    return out


def _u_ranges(Y, V, blo, bhi, du):
    """Integer index ranges of the fiber parameter u for every point.

    Points are ``Y + V u``; the range covers the part of the fiber that meets
    the box ``[blo, bhi]``.  For one-dimensional fibers the exact intersection
    is used, otherwise the box bound of the orthogonal projection.
    """
    P, d = Y.shape
    r = V.shape[1]
    if r == 1:
        v = V[:, 0]
        lo_u = np.full(P, -np.inf)
        hi_u = np.full(P, np.inf)
        empty = np.zeros(P, dtype=bool)
        for j in range(d):
            if abs(v[j]) > 1e-14:
                a = (blo[j] - Y[:, j]) / v[j]
                b = (bhi[j] - Y[:, j]) / v[j]
                lo_u = np.maximum(lo_u, np.minimum(a, b))
                hi_u = np.minimum(hi_u, np.maximum(a, b))
            else:
                empty |= (Y[:, j] < blo[j]) | (Y[:, j] > bhi[j])
        kmin = np.ceil(lo_u / du)
        kmax = np.floor(hi_u / du)
        kmax[empty] = kmin[empty] - 1
        return kmin[:, None].astype(np.int64), kmax[:, None].astype(np.int64)
    mid = 0.5 * (blo + bhi)
    half = np.abs(V).T @ (0.5 * (bhi - blo))
    c = (mid - Y) @ V
    kmin = np.ceil((c - half) / du).astype(np.int64)
    kmax = np.floor((c + half) / du).astype(np.int64)
    return kmin, kmax


def _fiber_np(tab, lo, step, blo, bhi, V, K, Y, W, du, chunk_elems=400_000):
    P, d = Y.shape
    r = V.shape[1]
    kmin, kmax = _u_ranges(Y, V, blo, bhi, du)
    counts = np.maximum(kmax - kmin + 1, 0)
    out = np.zeros(P, dtype=complex)
    p = 0
    while p < P:
        m = int(np.prod(np.maximum(counts[p], 1)))
        step_p = max(1, chunk_elems // max(m, 1))
        q = min(P, p + step_p)
        cmax = counts[p:q].max(axis=0)
        if np.any(cmax == 0):
            p = q
            continue
        offs = np.stack(np.meshgrid(*[np.arange(c) for c in cmax], indexing="ij"), -1).reshape(-1, r)
        kk = kmin[p:q, None, :] + offs[None]  # (c, M, r)
        valid = np.all(offs[None] < counts[p:q, None, :], axis=-1)
        u = kk * du
        x = Y[p:q, None, :] + u @ V.T
        inside = valid & np.all((x >= blo) & (x <= bhi), axis=-1)
        vals = np.zeros(inside.shape, dtype=complex)
        vals[inside] = _interp_np(tab, lo, step, x[inside])
        phase = np.pi * np.einsum("cmi,ij,cmj->cm", u, K, u) - 2 * np.pi * np.einsum("cmi,ci->cm", u, W[p:q])
        out[p:q] = (vals * np.exp(1j * phase)).sum(axis=1)
        p = q
    return out * du**r


def _tau_ranges(X, bf_lo, bf_hi, bg_lo, bg_hi, dtau):
    lo_t = np.maximum(bf_lo - X, X - bg_hi)
    hi_t = np.minimum(bf_hi - X, X - bg_lo)
    return np.ceil(lo_t / dtau).astype(np.int64), np.floor(hi_t / dtau).astype(np.int64)


def _wigner_np(tabf, tabg, lo, step, X, XI, dtau, bf_lo, bf_hi, bg_lo, bg_hi, chunk_elems=300_000):
    P, d = X.shape
    kmin, kmax = _tau_ranges(X, bf_lo, bf_hi, bg_lo, bg_hi, dtau)
    counts = np.maximum(kmax - kmin + 1, 0)
    out = np.zeros(P, dtype=complex)
    p = 0
    while p < P:
        m = int(np.prod(np.maximum(counts[p], 1)))
        q = min(P, p + max(1, chunk_elems // max(m, 1)))
        cmax = counts[p:q].max(axis=0)
        if np.any(cmax == 0):
            p = q
            continue
        offs = np.stack(np.meshgrid(*[np.arange(c) for c in cmax], indexing="ij"), -1).reshape(-1, d)
        valid = np.all(offs[None] < counts[p:q, None, :], axis=-1)
        tau = (kmin[p:q, None, :] + offs[None]) * dtau
        xp = X[p:q, None, :] + tau
        xm = X[p:q, None, :] - tau
        fv = np.zeros(valid.shape, dtype=complex)
        gv = np.zeros(valid.shape, dtype=complex)
        fv[valid] = _interp_np(tabf, lo, step, xp[valid])
        gv[valid] = _interp_np(tabg, lo, step, xm[valid])
        ph = np.exp(-4j * np.pi * np.einsum("cmi,ci->cm", tau, XI[p:q]))
        out[p:q] = (fv * np.conj(gv) * ph).sum(axis=1)
        p = q
    return out * (2.0 * dtau) ** d


# ---------------------------------------------------------------- numba kernels

if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _weights_nb(x, lo, step, base, w):
        d = x.shape[0]
        for j in range(d):
            s = (x[j] - lo[j]) / step[j]
            i0 = np.floor(s)
            t = s - i0
            base[j] = np.int64(i0) - 1
            w[j, 0] = -t * (t - 1.0) * (t - 2.0) / 6.0
            w[j, 1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
            w[j, 2] = -(t + 1.0) * t * (t - 2.0) / 2.0
            w[j, 3] = (t + 1.0) * t * (t - 1.0) / 6.0

    @njit(cache=True, inline="always")
    def _gather_nb(flat, shape, strides, base, w, ntaps):
        d = shape.shape[0]
        acc = 0.0 + 0.0j
        for tap in range(ntaps):
            rem = tap
            idx = 0
            wt = 1.0
            ok = True
            for j in range(d - 1, -1, -1):
                k = rem % 4
                rem //= 4
                ii = base[j] + k
                if ii < 0 or ii >= shape[j]:
                    ok = False
                    break
                idx += ii * strides[j]
                wt *= w[j, k]
            if ok:
                acc += wt * flat[idx]
        return acc

    @njit(parallel=True, cache=True)
    def _interp_nb(flat, shape, strides, lo, step, pts):
        P, d = pts.shape
        ntaps = 4**d
        out = np.zeros(P, dtype=np.complex128)
        for p in prange(P):
            base = np.empty(d, dtype=np.int64)
            w = np.empty((d, 4))
            _weights_nb(pts[p], lo, step, base, w)
            out[p] = _gather_nb(flat, shape, strides, base, w, ntaps)
        return out

    @njit(parallel=True, cache=True)
    def _fiber_nb(flat, shape, strides, lo, step, blo, bhi, V, K, Y, W, du, kmin, kmax):
        P, d = Y.shape
        r = V.shape[1]
        ntaps = 4**d
        out = np.zeros(P, dtype=np.complex128)
        for p in prange(P):
            base = np.empty(d, dtype=np.int64)
            w = np.empty((d, 4))
            x = np.empty(d)
            u = np.empty(r)
            cnt = np.empty(r, dtype=np.int64)
            total = 1
            for k in range(r):
                cnt[k] = kmax[p, k] - kmin[p, k] + 1
                if cnt[k] <= 0:
                    total = 0
                total *= max(cnt[k], 0)
            acc = 0.0 + 0.0j
            for it in range(total):
                rem = it
                for k in range(r - 1, -1, -1):
                    u[k] = (kmin[p, k] + rem % cnt[k]) * du
                    rem //= cnt[k]
                inside = True
                for j in range(d):
                    xj = Y[p, j]
                    for k in range(r):
                        xj += V[j, k] * u[k]
                    if xj < blo[j] or xj > bhi[j]:
                        inside = False
                        break
                    x[j] = xj
                if not inside:
                    continue
                _weights_nb(x, lo, step, base, w)
                val = _gather_nb(flat, shape, strides, base, w, ntaps)
                ph = 0.0
                for a in range(r):
                    ph -= 2.0 * W[p, a] * u[a]
                    for b in range(r):
                        ph += K[a, b] * u[a] * u[b]
                acc += val * np.exp(1j * np.pi * ph)
            out[p] = acc * du**r
        return out

    @njit(parallel=True, cache=True)
    def _wigner_nb(flatf, flatg, shape, strides, lo, step, X, XI, dtau, kstride, kmin, kmax):
        # lags are multiples of dtau = kstride * step, so the cubic weights of
        # x + t and x - t are fixed per point and only the base index moves
        P, d = X.shape
        ntaps = 4**d
        out = np.zeros(P, dtype=np.complex128)
        for p in prange(P):
            wp = np.empty((d, 4))
            wm = np.empty((d, 4))
            bp0 = np.empty(d, dtype=np.int64)
            bm0 = np.empty(d, dtype=np.int64)
            bp = np.empty(d, dtype=np.int64)
            bm = np.empty(d, dtype=np.int64)
            xs = np.empty(d)
            cnt = np.empty(d, dtype=np.int64)
            total = 1
            cmax = 1
            for j in range(d):
                cnt[j] = kmax[p, j] - kmin[p, j] + 1
                if cnt[j] <= 0:
                    total = 0
                total *= max(cnt[j], 0)
                cmax = max(cmax, cnt[j])
            if total == 0:
                continue
            for j in range(d):
                xs[j] = X[p, j] + kmin[p, j] * dtau
            _weights_nb(xs, lo, step, bp0, wp)
            for j in range(d):
                xs[j] = X[p, j] - kmin[p, j] * dtau
            _weights_nb(xs, lo, step, bm0, wm)
            ph = np.empty((d, cmax), dtype=np.complex128)
            for j in range(d):
                for i in range(cnt[j]):
                    ph[j, i] = np.exp(-4j * np.pi * XI[p, j] * (kmin[p, j] + i) * dtau)
            acc = 0.0 + 0.0j
            for it in range(total):
                rem = it
                phase = 1.0 + 0.0j
                for j in range(d - 1, -1, -1):
                    i = rem % cnt[j]
                    rem //= cnt[j]
                    bp[j] = bp0[j] + kstride * i
                    bm[j] = bm0[j] - kstride * i
                    phase *= ph[j, i]
                fv = _gather_nb(flatf, shape, strides, bp, wp, ntaps)
                if fv == 0:
                    continue
                gv = _gather_nb(flatg, shape, strides, bm, wm, ntaps)
                acc += fv * np.conj(gv) * phase
            out[p] = acc * (2.0 * dtau) ** d
        return out


def _axes(lo, step, d):
    lo = np.ascontiguousarray(np.broadcast_to(np.asarray(lo, dtype=float), (d,)))
    step = np.ascontiguousarray(np.broadcast_to(np.asarray(step, dtype=float), (d,)))
    return lo, step


def _layout(tab):
    tab = np.ascontiguousarray(tab, dtype=complex)
    shape = np.array(tab.shape, dtype=np.int64)
    strides = np.array([int(np.prod(tab.shape[j + 1 :])) for j in range(tab.ndim)], dtype=np.int64)
    return tab, tab.ravel(), shape, strides


# ---------------------------------------------------------------- public entry points


def interp_cubic(tab, lo: float, step: float, pts, backend=None) -> np.ndarray:
    """Cubic Lagrange interpolation of a d-dimensional sample table.

    Parameters
    ----------
    tab : ndarray, complex, d-dimensional
        Samples at ``lo[j] + k * step[j]`` along axis j.
    lo, step : float or array of length d
    pts : ndarray, shape (P, d)
        Evaluation points.  Taps falling outside the table count as zero.
    """
    tab, flat, shape, strides = _layout(tab)
    lo, step = _axes(lo, step, tab.ndim)
    pts = np.ascontiguousarray(np.asarray(pts, dtype=float).reshape(-1, tab.ndim))
    if _resolve(backend) == "numba":
        return _interp_nb(flat, shape, strides, lo, step, pts)
    return _interp_np(tab, lo, step, pts)


def fiber_sum(tab, lo, step, box_lo, box_hi, V, K, Y, W, du, backend=None) -> np.ndarray:
    """Riemann sums over affine fibers ``y_p + V u``.

    Computes, for every row ``y_p`` of ``Y`` and ``w_p`` of ``W``::

        du**r * sum_u f(y_p + V u) * exp(i pi u.K u - 2 pi i w_p.u)

    over the lattice ``u in du * Z^r``, restricted to the part of the fiber
    inside ``[box_lo, box_hi]``.  ``V`` must have orthonormal columns.
    """
    tab, flat, shape, strides = _layout(tab)
    lo, step = _axes(lo, step, tab.ndim)
    V = np.ascontiguousarray(V, dtype=float)
    K = np.ascontiguousarray(K, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    W = np.ascontiguousarray(W, dtype=float)
    blo = np.ascontiguousarray(box_lo, dtype=float)
    bhi = np.ascontiguousarray(box_hi, dtype=float)
    if _resolve(backend) == "numba":
        kmin, kmax = _u_ranges(Y, V, blo, bhi, du)
        return _fiber_nb(flat, shape, strides, lo, step, blo, bhi, V, K, Y, W, float(du),
                         np.ascontiguousarray(kmin), np.ascontiguousarray(kmax))
    return _fiber_np(tab, lo, step, blo, bhi, V, K, Y, W, du)


def wigner_sum(tabf, tabg, lo, step, X, XI, dtau, box_f, box_g, backend=None) -> np.ndarray:
    """Cross-Wigner values ``2^d int f(x+t) conj(g(x-t)) exp(-4 pi i xi.t) dt``.

    The integral is a Riemann sum with spacing ``dtau`` (an integer multiple of
    the table step), restricted to lags for
    which both ``x + t`` lies in ``box_f`` and ``x - t`` lies in ``box_g``
    (each a pair ``(lo, hi)`` of coordinate arrays).
    """
    tabf, flatf, shape, strides = _layout(tabf)
    tabg, flatg, _, _ = _layout(tabg)
    lo, step = _axes(lo, step, tabf.ndim)
    X = np.ascontiguousarray(X, dtype=float)
    XI = np.ascontiguousarray(XI, dtype=float)
    bf_lo, bf_hi = (np.asarray(b, dtype=float) for b in box_f)
    bg_lo, bg_hi = (np.asarray(b, dtype=float) for b in box_g)
    ratio = dtau / step
    kstride = np.rint(ratio).astype(np.int64)
    if np.any(np.abs(ratio - kstride) > 1e-9) or np.any(kstride != kstride[0]) or kstride[0] < 1:
        raise ValueError("dtau must be the same positive integer multiple of the table step on every axis")
    if _resolve(backend) == "numba":
        kmin, kmax = _tau_ranges(X, bf_lo, bf_hi, bg_lo, bg_hi, dtau)
        return _wigner_nb(flatf, flatg, shape, strides, lo, step, X, XI, float(dtau), int(kstride[0]),
                          np.ascontiguousarray(kmin), np.ascontiguousarray(kmax))
    return _wigner_np(tabf, tabg, lo, step, X, XI, dtau, bf_lo, bf_hi, bg_lo, bg_hi)
