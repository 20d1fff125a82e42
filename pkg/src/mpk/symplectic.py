"""Symplectic matrices, their blocks and the subspaces attached to them.

A symplectic matrix of size 2d x 2d is stored together with its d x d blocks

    S = [[A, B],
         [C, D]]

and satisfies ``S.T @ J @ S == J`` with ``J = [[0, I], [-I, 0]]``.  Most of the
geometry used by the metaplectic integral formulas lives in the four
fundamental subspaces of the upper-right block ``B``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateGeometry,
    DimensionCollapse,
    DimensionMismatch,
    IllConditionedSplit,
    MPKError,
    NotSymplectic,
)

TAU_SYMP = 1e-9
RANK_RTOL = 1e-12
SPLIT_COND_MAX = 1e10


def standard_J(d: int) -> np.ndarray:
    """Return the standard symplectic form ``[[0, I], [-I, 0]]`` of size 2d."""
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, eye], [-eye, zero]])


def symplectic_residual(S: np.ndarray) -> float:
    """Max-entry defect of ``S^T J S - J`` scaled by ``max(1, |S|_max^2)``."""
    S = np.asarray(S, dtype=float)
    d = S.shape[0] // 2
    J = standard_J(d)
    scale = max(1.0, float(np.abs(S).max()) ** 2)
    return float(np.abs(S.T @ J @ S - J).max() / scale)


def rank_tolerance(d: int, scale: float) -> float:
    """Threshold below which singular values count as zero."""
    return d * scale * RANK_RTOL


class SymplecticMatrix:
    """A validated 2d x 2d symplectic matrix.

    Parameters
    ----------
    entries : array_like
        Square matrix of even size.
    tol : float
        Tolerance for the symplectic test, see :func:`symplectic_residual`.

    Raises
    ------
    DimensionMismatch
        If the matrix is not square of even size.
    NotSymplectic
        If the symplectic defect exceeds ``tol``.
    """

    __slots__ = ("_S", "_d", "_norm", "_subspaces")

    def __init__(self, entries, tol: float = TAU_SYMP):
        S = np.array(entries, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise DimensionMismatch(f"expected a 2d x 2d matrix, got shape {S.shape}")
        if not np.all(np.isfinite(S)):
            raise NotSymplectic("matrix has non-finite entries")
        res = symplectic_residual(S)
        if res > tol:
            raise NotSymplectic(f"S^T J S - J has scaled defect {res:.3e} > {tol:.1e}")
        S.flags.writeable = False
        self._S = S
        self._d = S.shape[0] // 2
        self._norm = float(np.linalg.norm(S, 2))
        self._subspaces = None

    @property
    def dim(self) -> int:
        return self._d

    @property
    def matrix(self) -> np.ndarray:
        return self._S

    def __array__(self, dtype=None, copy=None):
        return self._S if dtype is None else self._S.astype(dtype)

    @property
    def A(self) -> np.ndarray:
        return self._S[: self._d, : self._d]

    @property
    def B(self) -> np.ndarray:
        return self._S[: self._d, self._d :]

    @property
    def C(self) -> np.ndarray:
        return self._S[self._d :, : self._d]

    @property
    def D(self) -> np.ndarray:
        return self._S[self._d :, self._d :]

    @property
    def norm(self) -> float:
        """Spectral norm of S, the scale used for block rank decisions."""
        return self._norm

    @property
    def rank_tol(self) -> float:
        return rank_tolerance(self._d, self._norm)

    def subspaces(self) -> "BlockSubspaces":
        """Range, kernel and their complements for the block ``B`` (cached)."""
        if self._subspaces is None:
            self._subspaces = subspace_bases(self.B, self.rank_tol)
        return self._subspaces

    @property
    def rank_B(self) -> int:
        return self.subspaces().rank

    def inverse(self) -> "SymplecticMatrix":
        """Symplectic inverse ``[[D^T, -B^T], [-C^T, A^T]]``."""
        return SymplecticMatrix(
            np.block([[self.D.T, -self.B.T], [-self.C.T, self.A.T]])
        )

    def __matmul__(self, other):
        if isinstance(other, SymplecticMatrix):
            if other.dim != self.dim:
                raise DimensionMismatch("cannot multiply symplectic matrices of different size")
            return SymplecticMatrix(self._S @ other._S)
        return self._S @ np.asarray(other)

    def __repr__(self) -> str:
        return f"SymplecticMatrix(d={self._d}, rank_B={self.rank_B})"


def _as_sm(S) -> SymplecticMatrix:
    return S if isinstance(S, SymplecticMatrix) else SymplecticMatrix(S)


# ---------------------------------------------------------------- generators


def _square(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {M.shape}")
    return M


def _symmetric(M, name):
    M = _square(M, name)
    if np.abs(M - M.T).max() > 1e-12 * max(1.0, np.abs(M).max()):
        raise DimensionMismatch(f"{name} must be symmetric")
    return 0.5 * (M + M.T)


def chirp_matrix(Q) -> SymplecticMatrix:
    """Lower shear ``V_Q = [[I, 0], [Q, I]]`` for symmetric Q."""
    Q = _symmetric(Q, "Q")
    d = Q.shape[0]
    eye, zero = np.eye(d), np.zeros((d, d))
    return SymplecticMatrix(np.block([[eye, zero], [Q, eye]]))


def multiplier_matrix(P) -> SymplecticMatrix:
    """Upper shear ``U_P = [[I, P], [0, I]]`` for symmetric P."""
    P = _symmetric(P, "P")
    d = P.shape[0]
    eye, zero = np.eye(d), np.zeros((d, d))
    return SymplecticMatrix(np.block([[eye, P], [zero, eye]]))


def dilation(E, cond_max: float = 1e12) -> SymplecticMatrix:
    """``D_E = diag(E^{-1}, E^T)`` for invertible E."""
    E = _square(E, "E")
    if np.linalg.cond(E) > cond_max:
        raise DegenerateGeometry("E is singular or too ill-conditioned")
    d = E.shape[0]
    zero = np.zeros((d, d))
    return SymplecticMatrix(np.block([[np.linalg.inv(E), zero], [zero, E.T]]))


def frft_matrix(theta) -> SymplecticMatrix:
    """Rotation by the angles ``theta_j`` in each (x_j, xi_j) plane."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    c, s = np.diag(np.cos(theta)), np.diag(np.sin(theta))
    return SymplecticMatrix(np.block([[c, s], [-s, c]]))


def tensor(S1, S2) -> SymplecticMatrix:
    """Symplectic matrix of the tensor product of two metaplectic operators.

    Variables are ordered ``(x1, x2, xi1, xi2)``.
    """
    S1, S2 = _as_sm(S1), _as_sm(S2)
    d1, d2 = S1.dim, S2.dim
    z = lambda m, n: np.zeros((m, n))
    top = np.block([[S1.A, z(d1, d2), S1.B, z(d1, d2)], [z(d2, d1), S2.A, z(d2, d1), S2.B]])
    bot = np.block([[S1.C, z(d1, d2), S1.D, z(d1, d2)], [z(d2, d1), S2.C, z(d2, d1), S2.D]])
    return SymplecticMatrix(np.vstack([top, bot]))


def make_generator(kind: str, *, d: int | None = None, Q=None, E=None, P=None, theta=None):
    """Build one of the standard generators by name.

    ``kind`` is one of ``"J"``, ``"V_Q"``, ``"D_E"``, ``"U_P"``, ``"FrFT"``.
    """
    if kind == "J":
        if d is None or d < 1:
            raise DimensionMismatch("J needs a positive dimension d")
        return SymplecticMatrix(standard_J(d))
    if kind == "V_Q":
        return chirp_matrix(Q)
    if kind == "D_E":
        return dilation(E)
    if kind == "U_P":
        return multiplier_matrix(P)
    if kind == "FrFT":
        return frft_matrix(theta)
    raise ValueError(f"unknown generator kind {kind!r}")


# ---------------------------------------------------------------- subspaces


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of a subspace of R^n, stored as columns."""

    basis: np.ndarray
    ambient_dim: int

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float).reshape(self.ambient_dim, -1)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def coords(self, x) -> np.ndarray:
        """Coordinates of (the projection of) points ``x[..., n]``."""
        return np.asarray(x) @ self.basis


class BlockSubspaces(NamedTuple):
    range: SubspaceBasis
    range_perp: SubspaceBasis
    ker: SubspaceBasis
    ker_perp: SubspaceBasis
    singular_values: np.ndarray
    rank: int


def subspace_bases(B, tol: float | None = None) -> BlockSubspaces:
    """Orthonormal bases of R(B), R(B)^perp, ker B and (ker B)^perp.

    All four come from a single SVD.  Singular values at or below ``tol``
    (default ``d * sigma_max * 1e-12``) are treated as zero.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    m, n = B.shape
    U, s, Vt = np.linalg.svd(B)
    if tol is None:
        tol = rank_tolerance(max(m, n), s[0] if s.size else 0.0)
    r = int(np.sum(s > tol))
    return BlockSubspaces(
        range=SubspaceBasis(U[:, :r], m),
        range_perp=SubspaceBasis(U[:, r:], m),
        ker=SubspaceBasis(Vt[r:].T, n),
        ker_perp=SubspaceBasis(Vt[:r].T, n),
        singular_values=s,
        rank=r,
    )


def _orth(M, tol=None) -> np.ndarray:
    """Orthonormal basis of the column span of M."""
    if M.size == 0 or M.shape[1] == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if tol is None:
        tol = rank_tolerance(max(M.shape), s[0] if s.size else 0.0)
    return U[:, : int(np.sum(s > tol))]


def pseudo_inverse(B, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse from a truncated SVD."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    if tol is None:
        tol = rank_tolerance(max(B.shape), s[0] if s.size else 0.0)
    keep = s > tol
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def simplex_volume(L: SubspaceBasis, E) -> float:
    """Volume factor ``sqrt(det((E V)^T (E V)))`` of E restricted to L.

    This is the k-dimensional volume of the image of the unit cube of L.  The
    trivial subspace has volume one.

    Raises
    ------
    DimensionCollapse
        If E is not injective on L.
    """
    E = np.atleast_2d(np.asarray(E, dtype=float))
    if E.shape[1] != L.ambient_dim:
        raise DimensionMismatch("E and L live in different spaces")
    if L.dim == 0:
        return 1.0
    EV = E @ L.basis
    s = np.linalg.svd(EV, compute_uv=False)
    if s[-1] <= rank_tolerance(L.ambient_dim, max(1.0, np.linalg.norm(E, 2))):
        raise DimensionCollapse("E is not injective on the subspace")
    return float(np.prod(s))


def sigma_product(B, tol: float | None = None) -> float:
    """Product of the nonzero singular values of B (one for B = 0)."""
    s = np.linalg.svd(np.atleast_2d(np.asarray(B, dtype=float)), compute_uv=False)
    if tol is None:
        tol = rank_tolerance(max(np.shape(B)), s[0] if s.size else 0.0)
    return float(np.prod(s[s > tol]))


def sigma_max(B) -> float:
    """Largest singular value (operator norm) of B."""
    return float(np.linalg.norm(np.atleast_2d(np.asarray(B, dtype=float)), 2))


def mu_S(S) -> float:
    """Amplitude of the integral representation of the metaplectic operator.

    ``mu_S = (q * sigma_product(B)) ** -1/2`` where ``q`` is the volume factor
    of ``A^T`` restricted to ``R(B)^perp``.

    Raises
    ------
    DegenerateGeometry
        If ``B = 0`` (no integral representation) or the volume factor vanishes.
    """
    S = _as_sm(S)
    sub = S.subspaces()
    if sub.rank == 0:
        raise DegenerateGeometry("B = 0: the operator is a pure rescaling, mu_S is undefined")
    try:
        q = simplex_volume(sub.range_perp, S.A.T)
    except DimensionCollapse as exc:
        raise DegenerateGeometry("A^T collapses R(B)^perp") from exc
    sig = float(np.prod(sub.singular_values[: sub.rank]))
    return float((q * sig) ** -0.5)


# ---------------------------------------------------------------- oblique splits


class ObliqueSplit:
    """Decomposition of R^d as a direct sum of two complementary subspaces.

    Given bases ``U1`` (d x r) and ``U2`` (d x (d - r)), a point splits as
    ``x = U1 c1 + U2 c2``.  The factorisation is computed once.
    """

    def __init__(self, U1: np.ndarray, U2: np.ndarray):
        self.U1 = np.asarray(U1, dtype=float)
        self.U2 = np.asarray(U2, dtype=float)
        M = np.hstack([self.U1, self.U2])
        if M.shape[0] != M.shape[1]:
            raise DimensionCollapse("subspaces are not complementary")
        cond = np.linalg.cond(M) if M.size else 1.0
        if not np.isfinite(cond) or cond > SPLIT_COND_MAX:
            raise IllConditionedSplit(f"split basis has condition number {cond:.2e}")
        self.cond = float(cond)
        self._Minv = np.linalg.inv(M) if M.size else M

    def coords(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates ``(c1, c2)`` of points ``x[..., d]``."""
        c = np.asarray(x, dtype=float) @ self._Minv.T
        r = self.U1.shape[1]
        return c[..., :r], c[..., r:]

    def split(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Components ``(x1, x2)`` with ``x = x1 + x2``."""
        c1, c2 = self.coords(x)
        return c1 @ self.U1.T, c2 @ self.U2.T


def output_split(S) -> ObliqueSplit:
    """Split of the frequency space as ``R(B) + A(ker B)``."""
    S = _as_sm(S)
    sub = S.subspaces()
    if sub.rank == 0:
        raise DegenerateGeometry("B = 0 has no output splitting")
    W = _orth(S.A @ sub.ker.basis)
    if W.shape[1] != S.dim - sub.rank:
        raise DimensionCollapse("A collapses ker B")
    return ObliqueSplit(sub.range.basis, W)


def input_split(S) -> ObliqueSplit:
    """Split of the input space as ``(ker B)^perp + D^T A (ker B)``."""
    S = _as_sm(S)
    sub = S.subspaces()
    if sub.rank == 0:
        raise DegenerateGeometry("B = 0 has no input splitting")
    W = _orth(S.D.T @ S.A @ sub.ker.basis)
    if W.shape[1] != S.dim - sub.rank:
        raise DimensionCollapse("D^T A collapses ker B")
    return ObliqueSplit(sub.ker_perp.basis, W)


def decompose_output(S, xi) -> tuple[np.ndarray, np.ndarray]:
    """Split frequencies as ``xi = xi1 + xi2`` with xi1 in R(B), xi2 in A(ker B)."""
    return output_split(S).split(xi)


def decompose_input(S, x) -> tuple[np.ndarray, np.ndarray]:
    """Split points as ``x = x1 + x2`` with x1 in (ker B)^perp, x2 in D^T A(ker B)."""
    return input_split(S).split(x)


# ---------------------------------------------------------------- block relations


@dataclass(frozen=True)
class BlockRelationReport:
    relation_id: str
    satisfied: bool
    residual: float
    matrix: str = field(default="S")


def _relations_for(a, b, c, dd, tol, label):
    """Check the three range/kernel relations for one block quadruple."""
    n = b.shape[0]
    sub = subspace_bases(b, tol)
    scale = max(1.0, sigma_max(dd))
    Rb, Rp, Kb, Kp = sub.range.basis, sub.range_perp.basis, sub.ker.basis, sub.ker_perp.basis
    out = []

    # d^T maps R(b) into (ker b)^perp
    res1 = np.linalg.norm(Kb.T @ dd.T @ Rb, 2) / scale if Rb.size and Kb.size else 0.0
    out.append((f"{label}:i", res1))

    # d maps ker b isomorphically onto R(b)^perp
    if Kb.shape[1]:
        img = dd @ Kb
        res2 = np.linalg.norm(Rb.T @ img, 2) / scale if Rb.size else 0.0
        smin = np.linalg.svd(Rp.T @ img, compute_uv=False).min()
        if smin <= rank_tolerance(n, scale):
            res2 = 1.0
    else:
        res2 = 0.0
    out.append((f"{label}:ii", res2))

    # R(b)^perp is contained in R(d)
    if Rp.shape[1]:
        Rd = _orth(dd, tol)
        res3 = np.linalg.norm(Rp - Rd @ (Rd.T @ Rp), 2)
    else:
        res3 = 0.0
    out.append((f"{label}:iii", res3))
    return out


def verify_block_relations(S, tol: float = TAU_SYMP) -> list[BlockRelationReport]:
    """Check the block range/kernel relations for S and its seven companions.

    The companions are ``SJ, JS, JSJ, S^-1, S^-1 J, J S^-1, J S^-1 J``.  For each
    of the eight matrices with blocks ``(a, b, c, d)`` three relations are
    tested:

    * ``d^T R(b)`` lies in ``(ker b)^perp``;
    * ``d`` maps ``ker b`` isomorphically onto ``R(b)^perp``;
    * ``R(b)^perp`` lies in ``R(d)``.

    Returns 24 reports; a relation is satisfied when its residual is at most
    ``tol``.
    """
    S = _as_sm(S)
    d = S.dim
    J = standard_J(d)
    M = S.matrix
    Mi = S.inverse().matrix
    family = {
        "S": M, "SJ": M @ J, "JS": J @ M, "JSJ": J @ M @ J,
        "Sinv": Mi, "SinvJ": Mi @ J, "JSinv": J @ Mi, "JSinvJ": J @ Mi @ J,
    }
    reports = []
    for name, T in family.items():
        a, b, c, dd = T[:d, :d], T[:d, d:], T[d:, :d], T[d:, d:]
        for rid, res in _relations_for(a, b, c, dd, S.rank_tol, name):
            reports.append(BlockRelationReport(rid, bool(res <= tol), float(res), name))
    return reports


# ---------------------------------------------------------------- I/O


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_matrix(S, path, fmt: str | None = None) -> Path:
    """Write S as CSV (``# symplectic d=<d>`` header) or JSON ``{"d", "rows"}``."""
    path = Path(path)
    M = np.asarray(S.matrix if isinstance(S, SymplecticMatrix) else S, dtype=float)
    d = M.shape[0] // 2
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    if fmt == "json":
        rows = ",\n  ".join("[" + ", ".join(_fmt(v) for v in row) + "]" for row in M)
        path.write_text(f'{{"d": {d}, "rows": [\n  {rows}\n]}}\n')
    elif fmt == "csv":
        lines = [f"# symplectic d={d}"] + [",".join(_fmt(v) for v in row) for row in M]
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unsupported matrix format {fmt!r}")
    return path


def parse_matrix(text: str, fmt: str, tol: float = TAU_SYMP) -> SymplecticMatrix:
    if fmt == "json":
        obj = json.loads(text)
        rows = np.array(obj["rows"], dtype=float)
        d = int(obj.get("d", rows.shape[0] // 2))
    elif fmt == "csv":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise MPKError("matrix CSV must start with '# symplectic d=<d>'")
        try:
            d = int(lines[0].split("d=")[1].split()[0])
        except (IndexError, ValueError) as exc:
            raise MPKError("malformed matrix CSV header") from exc
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    else:
        raise ValueError(f"unsupported matrix format {fmt!r}")
    if rows.shape != (2 * d, 2 * d):
        raise DimensionMismatch(f"header says d={d} but matrix has shape {rows.shape}")
    return SymplecticMatrix(rows, tol)


def read_matrix(path, tol: float = TAU_SYMP) -> SymplecticMatrix:
    """Read a symplectic matrix from a ``.json`` or ``.csv`` file."""
    path = Path(path)
    fmt = "json" if path.suffix.lower() == ".json" else "csv"
    return parse_matrix(path.read_text(), fmt, tol)
