import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from randmat import rank_r, spd, valid_pair

from mpk.errors import ConditionsViolated, FreeBlock, InsufficientSupport, NonSPD
from mpk.grid import GridFunction
from mpk.hardy import (
    DecayCertificate,
    Status,
    check_conditions,
    classify,
    critical_partner,
    extremal_function,
    fit_gaussian_decay,
    hardy_eigenvalues,
    product_spectrum,
    sharpness_witness,
)
from mpk.symplectic import SymplecticMatrix, dilation, frft_matrix, standard_J

seeds = st.integers(0, 2**32 - 1)


def test_certificate_validation():
    with pytest.raises(NonSPD):
        DecayCertificate([[1.0, 2.0], [0.0, 1.0]], np.eye(2))
    with pytest.raises(NonSPD):
        DecayCertificate(-np.eye(2), np.eye(2))


@given(seeds, st.integers(2, 4))
def test_valid_pairs_pass_conditions(seed, d):
    rng = np.random.default_rng(seed)
    S = rank_r(rng, d, int(rng.integers(1, d + 1)))
    M, N = valid_pair(rng, S)
    ok, res = check_conditions(M, N, S)
    assert ok and max(res.values()) < 1e-8


@given(seeds, st.integers(2, 4))
def test_eigenvalues_scale_with_N(seed, d):
    rng = np.random.default_rng(seed)
    S = rank_r(rng, d, int(rng.integers(1, d + 1)))
    M, N = valid_pair(rng, S)
    c = rng.uniform(0.2, 5.0)
    assert np.allclose(hardy_eigenvalues(M, c * N, S), c * hardy_eigenvalues(M, N, S), rtol=1e-10)


@given(seeds, st.integers(1, 4))
def test_critical_partner_is_extremal(seed, d):
    rng = np.random.default_rng(seed)
    S = rank_r(rng, d, int(rng.integers(1, d + 1)))
    M, _ = valid_pair(rng, S)
    v = classify(DecayCertificate(M, critical_partner(S, M)), S)
    assert v.status == Status.EXTREMAL
    assert v.witness is not None


@given(seeds, st.integers(1, 4))
def test_product_spectrum_nonnegative(seed, d):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(d, d))
    assert product_spectrum(spd(rng, d), G, spd(rng, d)).min() > -1e-10


def test_mismatched_kernel_is_flagged():
    S = frft_matrix([0.5, 0.0])
    v = classify(DecayCertificate(np.eye(2), np.diag([1.0, 0.0])), S)
    assert v.status == Status.CONDITIONS_VIOLATED
    with pytest.raises(ConditionsViolated):
        hardy_eigenvalues(np.eye(2), np.diag([1.0, 0.0]), S)


def test_zero_B_is_flagged():
    v = classify(DecayCertificate(np.eye(1), np.eye(1)), dilation([[2.0]]))
    assert v.status == Status.CONDITIONS_VIOLATED


def test_verdict_json():
    v = classify(DecayCertificate([[2.0]], [[1.0]]), SymplecticMatrix(standard_J(1)))
    obj = json.loads(json.dumps(v.to_json()))
    assert obj["status"] == "Vanishing" and obj["max_eigenvalue"] == pytest.approx(2.0)
    assert set(obj) >= {"status", "eigenvalues", "max_eigenvalue", "residuals"}


def test_extremal_modulus_fit():
    rng = np.random.default_rng(0)
    S = rank_r(rng, 2, 1, 0.2, 0.5)
    V = S.subspaces().ker_perp.basis
    M = 1.3 * V @ V.T
    f = extremal_function(S, M, n=256, L=8.0)
    fit = fit_gaussian_decay(f, S.subspaces().ker_perp, S.D.T @ S.A @ S.subspaces().ker.basis)
    assert np.abs(fit.matrix - M).max() < 1e-3 * 1.3


def test_fit_recovers_gaussian():
    Mtrue = np.array([[1.2, 0.3], [0.3, 0.8]])
    f = GridFunction.from_function(lambda x: np.exp(-np.pi * np.einsum("...i,ij,...j->...", x, Mtrue, x)), 2, 128, 6.0)
    fit = fit_gaussian_decay(f, np.eye(2))
    assert np.abs(fit.M - Mtrue).max() < 1e-8 and fit.gaussian


def test_fit_flags_non_gaussian():
    f = GridFunction.from_function(lambda x: 1.0 / (1 + x[..., 0] ** 4), 1, 128, 6.0)
    assert not fit_gaussian_decay(f, np.eye(1)).gaussian


def test_fit_needs_support():
    a = np.zeros(64)
    a[32] = 1.0
    with pytest.raises(InsufficientSupport):
        fit_gaussian_decay(GridFunction(a, 4.0), np.eye(1))


def test_sharpness_needs_singular_B():
    with pytest.raises(FreeBlock):
        sharpness_witness(frft_matrix([0.3]), 1.0, 64, 4.0)


def test_frft_closed_form_eigenvalues():
    theta = np.array([0.4, 1.1, 2.5])
    v = classify(DecayCertificate(1.5 * np.eye(3), 0.7 * np.eye(3)), frft_matrix(theta))
    assert np.allclose(v.eigenvalues, np.sort(1.05 * np.sin(theta) ** 2)[::-1], atol=1e-12)
