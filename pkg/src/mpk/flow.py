"""Quadratic Hamiltonians, their symplectic flows and the Schroedinger propagator.

With ``hbar = 1 / (2 pi)`` the Hamiltonian ``H(z) = <Mcal z, z> / 2`` generates the
classical flow ``S_t = exp(t J Mcal)``, and the solution of

    i hbar du/dt = Op(H) u,   u(0) = u0

is ``u(t) = S_t^ u0`` up to a unimodular constant.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .errors import ConditioningGuard, DegenerateTime, MPKError, NonIsotropic
from .grid import GridFunction
from .hardy import TAU_EIG, DecayCertificate, HardyVerdict, classify
from .metaplectic import apply_metaplectic
from .symplectic import SymplecticMatrix, standard_J

FLOW_GUARD = 1e4
SYM_TOL = 1e-12


class QuadraticHamiltonian:
    """``H(z) = <Mcal z, z> / 2`` on phase space ``R^{2d}``.

    Parameters
    ----------
    Mcal : array_like, shape (2d, 2d)
        Real symmetric matrix (to within ``1e-12`` relative).
    name : str, optional
    """

    def __init__(self, Mcal, name: str = ""):
        Mc = np.array(Mcal, dtype=float)
        if Mc.ndim != 2 or Mc.shape[0] != Mc.shape[1] or Mc.shape[0] % 2:
            raise MPKError(f"Mcal must be 2d x 2d, got shape {Mc.shape}")
        scale = max(1.0, float(np.abs(Mc).max(initial=0.0)))
        if np.abs(Mc - Mc.T).max(initial=0.0) > SYM_TOL * scale:
            raise MPKError("Mcal is not symmetric")
        Mc = (Mc + Mc.T) / 2
        J = standard_J(Mc.shape[0] // 2)
        X = J @ Mc
        # J Mcal lies in the symplectic Lie algebra
        if np.abs(X @ J + J @ X.T).max(initial=0.0) > SYM_TOL * scale:
            raise MPKError("J Mcal fails X J + J X^T = 0")
        Mc.flags.writeable = False
        X.flags.writeable = False
        self.Mcal = Mc
        self.generator = X
        self.name = name

    @property
    def dim(self) -> int:
        return self.Mcal.shape[0] // 2

    def energy(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", z, self.Mcal, z)

    def to_json(self) -> dict:
        return {"d": self.dim, "Mcal": self.Mcal.tolist()}

    def __repr__(self) -> str:
        return f"QuadraticHamiltonian(d={self.dim}{', ' + self.name if self.name else ''})"


def anisotropic_oscillator_2d() -> QuadraticHamiltonian:
    """``H = (y^2 + eta^2) / 2`` in the second variable only, ``Mcal = diag(0, 1, 0, 1)``."""
    return QuadraticHamiltonian(np.diag([0.0, 1.0, 0.0, 1.0]), "anisotropic_oscillator_2d")


def harmonic_oscillator(omega, m: float = 1.0, hbar: float | None = None) -> QuadraticHamiltonian:
    """``H = |xi|^2 / (2m) + m sum_j omega_j^2 x_j^2 / 2``.

    Parameters
    ----------
    omega : array_like of positive reals
    m : float
        Mass.
    hbar : float, optional
        Planck constant of the Schroedinger equation the oscillator comes
        from.  The propagator of ``i hbar u_t = (-hbar^2/(2m)) Lap u + ...`` is that
        of the native ``hbar = 1/(2 pi)`` oscillator with mass ``m / (2 pi hbar)``
        and the same frequencies; ``None`` means the native convention.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(w <= 0) or m <= 0:
        raise MPKError("frequencies and mass must be positive")
    mm = _native_mass(m, hbar)
    Mcal = np.diag(np.concatenate([mm * w**2, np.full(w.size, 1.0 / mm)]))
    return QuadraticHamiltonian(Mcal, "harmonic_oscillator")


def _native_mass(m: float, hbar: float | None) -> float:
    return m if hbar is None else m / (2.0 * np.pi * hbar)


PRESETS = {
    "anisotropic_oscillator_2d": anisotropic_oscillator_2d,
    "harmonic_oscillator": harmonic_oscillator,
}


def hamiltonian_from_json(obj) -> QuadraticHamiltonian:
    """Build a Hamiltonian from ``{"d", "Mcal"}`` or ``{"preset", ...parameters}``."""
    if isinstance(obj, (str, Path)):
        obj = json.loads(Path(obj).read_text())
    if "preset" in obj:
        name = obj["preset"]
        if name not in PRESETS:
            raise MPKError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        params = {k: v for k, v in obj.items() if k != "preset"}
        return PRESETS[name](**params)
    H = QuadraticHamiltonian(obj["Mcal"])
    if "d" in obj and int(obj["d"]) != H.dim:
        raise MPKError(f"declared d = {obj['d']} but Mcal has d = {H.dim}")
    return H


@dataclass(frozen=True)
class FlowSample:
    t: float
    S: SymplecticMatrix

    @property
    def blocks(self):
        return self.S.A, self.S.B, self.S.C, self.S.D


def flow(H: QuadraticHamiltonian, t: float) -> FlowSample:
    """``S_t = exp(t J Mcal)`` by scaling and squaring (Pade 13).

    Raises
    ------
    ConditioningGuard
        If ``|t| * ||J Mcal||_2 >= 1e4``.
    """
    size = abs(t) * np.linalg.norm(H.generator, 2)
    if size >= FLOW_GUARD:
        raise ConditioningGuard(f"|t| ||J Mcal|| = {size:.3g} exceeds {FLOW_GUARD:g}")
    return FlowSample(float(t), SymplecticMatrix(expm(t * H.generator)))


def oscillator_blocks(omega, m: float, t: float):
    """Closed-form blocks of the harmonic-oscillator flow.

    ``A = D = diag(cos w t)``, ``B = diag(sin(w t) / w) / m``,
    ``C = -m diag(w sin w t)``.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    c, s = np.cos(w * t), np.sin(w * t)
    return np.diag(c), np.diag(s / w) / m, -m * np.diag(w * s), np.diag(c)


def propagate(u0: GridFunction, H: QuadraticHamiltonian, t: float, backend=None) -> GridFunction:
    """``u(t) = S_t^ u0`` on the grid of ``u0`` (global phase unspecified)."""
    return apply_metaplectic(flow(H, t).S, u0, backend=backend)


def dynamical_hardy_check(cert: DecayCertificate, H: QuadraticHamiltonian, t1: float,
                          tau_eig: float = TAU_EIG) -> HardyVerdict:
    """Classify decay of ``u(., 0)`` and ``u(., t1)`` against ``B_{t1}``.

    Raises
    ------
    DegenerateTime
        If ``B_{t1} = 0``; then ``u0`` and ``u(t1)`` may both be compactly
        supported and no Hardy statement holds.
    """
    S = flow(H, t1).S
    if S.rank_B == 0:
        raise DegenerateTime(
            f"B vanishes at t = {t1:g}: the flow is a rescaling and compactly supported data stay compactly supported"
        )
    return classify(cert, S, tau_eig)


@dataclass(frozen=True)
class KnutsenReport:
    """Operator-norm criterion versus the full-spectrum criterion for isotropic decay."""

    a: float
    b: float
    knutsen_value: float
    knutsen_fires: bool
    eigenvalues: np.ndarray
    max_eigenvalue: float
    spectrum_fires: bool
    knutsen_index: int
    spectrum_index: int

    @property
    def agree(self) -> bool:
        return self.knutsen_fires == self.spectrum_fires

    def to_json(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "knutsen_value": self.knutsen_value,
            "knutsen_fires": self.knutsen_fires,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "max_eigenvalue": self.max_eigenvalue,
            "spectrum_fires": self.spectrum_fires,
            "knutsen_index": self.knutsen_index,
            "spectrum_index": self.spectrum_index,
            "agree": self.agree,
        }


def _isotropic_weight(M, P, tol: float) -> float:
    r = int(round(np.trace(P)))
    c = float(np.trace(M) / r)
    if np.abs(M - c * P).max() > tol * max(1.0, abs(c)):
        raise NonIsotropic("decay matrix is not a multiple of the projector it has to match")
    return c


def knutsen_comparison(cert: DecayCertificate, H: QuadraticHamiltonian, t1: float,
                       tau_eig: float = TAU_EIG, tol: float = 1e-10) -> KnutsenReport:
    """Compare ``a b ||B||_op^2 > 1`` with ``max lambda_j > 1``.

    ``cert`` must be isotropic: ``M = a P`` and ``N = b Q`` with ``P``, ``Q``
    the orthogonal projectors onto ``(ker B)^perp`` and ``R(B)``.  With
    ``hbar = 1/(2 pi)`` and Gaussian rates ``pi a``, ``pi b`` the operator-norm
    condition ``(2 hbar)^2 ||B||^2 (pi a)(pi b) > 1`` reduces to the first form.
    The binding direction is the dominant coordinate of the top right singular
    vector of ``B`` on one side and of the top eigenvector of ``M B^T N B`` on
    the other.
    """
    S = flow(H, t1).S
    if S.rank_B == 0:
        raise DegenerateTime(f"B vanishes at t = {t1:g}")
    sub = S.subspaces()
    P = sub.ker_perp.projector()
    Q = sub.range.projector()
    a = _isotropic_weight(cert.M, P, tol)
    b = _isotropic_weight(cert.N, Q, tol)
    _, s, Vt = np.linalg.svd(S.B)
    kv = a * b * float(s[0]) ** 2
    G = cert.M @ S.B.T @ cert.N @ S.B
    w, U = np.linalg.eig(G)
    order = np.argsort(-w.real)
    lam = w.real[order][: sub.rank]
    top = U[:, order[0]].real
    return KnutsenReport(
        a, b, kv, kv > 1.0 + tau_eig, lam, float(lam[0]), float(lam[0]) > 1.0 + tau_eig,
        int(np.argmax(np.abs(Vt[0]))), int(np.argmax(np.abs(top))),
    )


def write_trajectory(path, H: QuadraticHamiltonian, times, cert: DecayCertificate | None = None) -> Path:
    """CSV with one row per time: block norms and, given ``cert``, the eigenvalues.

    Columns are ``t, norm_A, norm_B, norm_C, norm_D, rank_B, status,
    max_eigenvalue, eigenvalues`` (the last one ``;``-separated).
    """
    path = Path(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "norm_A", "norm_B", "norm_C", "norm_D", "rank_B", "status", "max_eigenvalue", "eigenvalues"])
        for t in times:
            S = flow(H, float(t)).S
            row = [repr(float(t))] + [repr(float(np.linalg.norm(X, 2))) for X in (S.A, S.B, S.C, S.D)] + [S.rank_B]
            if cert is None:
                row += ["", "", ""]
            elif S.rank_B == 0:
                row += ["DegenerateTime", "", ""]
            else:
                v = classify(cert, S)
                row += [v.status.value, repr(float(v.max_eigenvalue)), ";".join(repr(float(x)) for x in v.eigenvalues)]
            wr.writerow(row)
    return path
