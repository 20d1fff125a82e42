import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gaussian_grid

from mpk import kernels
from mpk.grid import GridFunction
from mpk.symplectic import frft_matrix
from mpk.wigner import check_covariance, wigner, wigner_at


def test_gaussian_wigner_closed_form():
    # W(e^{-pi x^2})(x, xi) = sqrt(2) exp(-2 pi (x^2 + xi^2))
    f = gaussian_grid(1, 128, np.sqrt(32.0))
    W = wigner(f, x_stride=4)
    X, XI = np.meshgrid(W.x_axis, W.xi_axis, indexing="ij")
    ref = np.sqrt(2) * np.exp(-2 * np.pi * (X**2 + XI**2))
    assert np.abs(W.values - ref).max() < 1e-10


def test_wigner_at_matches_grid():
    f = GridFunction.from_function(lambda x: np.exp(-np.pi * x[..., 0] ** 2) * (1 + 0.7j * x[..., 0]), 1, 128, np.sqrt(32.0))
    W = wigner(f, x_stride=8)
    X, XI = np.meshgrid(W.x_axis, W.xi_axis, indexing="ij")
    vals = wigner_at(f, f, X.reshape(-1, 1), XI.reshape(-1, 1))
    assert np.abs(vals - W.values.reshape(-1)).max() < 1e-9


def test_marginal_is_modulus_squared():
    f = GridFunction.from_function(lambda x: np.exp(-np.pi * (x[..., 0] - 0.5) ** 2) * (1 + x[..., 0]), 1, 128, np.sqrt(32.0))
    W = wigner(f)
    assert np.abs(W.marginal_x() - np.abs(f.samples) ** 2).max() < 1e-9


@settings(max_examples=8)
@given(st.floats(0.1, 3.0))
def test_frft_covariance(theta):
    f = GridFunction.from_function(lambda x: np.exp(-np.pi * (x[..., 0] - 0.4) ** 2) * (1 + 0.5j * x[..., 0]), 1, 256, 8.0)
    assert check_covariance(frft_matrix([theta]), f, size=128) < 1e-5


def test_kernel_backends_agree():
    f = GridFunction.from_function(lambda x: np.exp(-np.pi * np.sum(x * x, -1)) * (1 + 0.3j * x[..., 1]), 2, 32, 2.0)
    rng = np.random.default_rng(0)
    x, xi = rng.normal(size=(50, 2)) * 0.5, rng.normal(size=(50, 2)) * 0.5
    a = wigner_at(f, f, x, xi, backend="numba")
    b = wigner_at(f, f, x, xi, backend="numpy")
    assert np.abs(a - b).max() < 1e-12
    pts = rng.uniform(-1.5, 1.5, size=(200, 2))
    ia = kernels.interp_cubic(f.upsampled, -f.L, f.fine_step, pts, backend="numba")
    ib = kernels.interp_cubic(f.upsampled, -f.L, f.fine_step, pts, backend="numpy")
    assert np.abs(ia - ib).max() < 1e-13


def test_interp_accuracy():
    f = GridFunction.from_function(lambda x: np.exp(-np.pi * x[..., 0] ** 2), 1, 128, np.sqrt(32.0))
    pts = np.linspace(-2, 2, 101)[:, None]
    v = kernels.interp_cubic(f.upsampled, -f.L, f.fine_step, pts)
    assert np.abs(v - np.exp(-np.pi * pts[:, 0] ** 2)).max() < 1e-5


def test_wigner_sum_rejects_incommensurate_lag():
    f = gaussian_grid(1, 32, 2.0)
    with pytest.raises(ValueError):
        kernels.wigner_sum(f.upsampled, f.upsampled, -f.L, f.fine_step, np.zeros((1, 1)), np.zeros((1, 1)),
                           f.fine_step * 1.5, f.support_box(), f.support_box())
