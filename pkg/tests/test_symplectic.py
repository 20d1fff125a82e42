import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from randmat import generator_product, rank_r

from mpk.errors import DegenerateGeometry, DimensionCollapse, DimensionMismatch, NotSymplectic
from mpk.symplectic import (
    SymplecticMatrix,
    chirp_matrix,
    decompose_input,
    decompose_output,
    dilation,
    frft_matrix,
    make_generator,
    mu_S,
    multiplier_matrix,
    parse_matrix,
    pseudo_inverse,
    read_matrix,
    sigma_product,
    simplex_volume,
    standard_J,
    subspace_bases,
    symplectic_residual,
    tensor,
    verify_block_relations,
    write_matrix,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 4)


@given(seeds, dims)
def test_generator_products_are_symplectic(seed, d):
    S = generator_product(np.random.default_rng(seed), d)
    assert symplectic_residual(S.matrix) < 1e-12
    J = standard_J(d)
    assert np.allclose(S.matrix.T @ J @ S.matrix, J, atol=1e-10)


@given(seeds, dims)
def test_block_identities(seed, d):
    S = generator_product(np.random.default_rng(seed), d)
    A, B, C, D = S.A, S.B, S.C, S.D
    scale = S.norm**2
    assert np.abs(A.T @ C - C.T @ A).max() < 1e-12 * scale
    assert np.abs(B.T @ D - D.T @ B).max() < 1e-12 * scale
    assert np.abs(A.T @ D - C.T @ B - np.eye(d)).max() < 1e-12 * scale


@given(seeds, dims)
def test_inverse(seed, d):
    S = generator_product(np.random.default_rng(seed), d)
    assert np.allclose((S @ S.inverse()).matrix, np.eye(2 * d), atol=1e-10 * S.norm**2)


@given(seeds, dims)
def test_block_relations_all_hold(seed, d):
    rng = np.random.default_rng(seed)
    S = rank_r(rng, d, int(rng.integers(0, d + 1)))
    reports = verify_block_relations(S)
    assert len(reports) == 24
    assert all(r.satisfied for r in reports)


def test_identity_relations_have_zero_residual():
    reports = verify_block_relations(SymplecticMatrix(np.eye(4)))
    assert max(r.residual for r in reports) == 0.0


def test_rejects_non_symplectic():
    with pytest.raises(NotSymplectic):
        SymplecticMatrix(np.diag([2.0, 1.0]))
    with pytest.raises(NotSymplectic):
        SymplecticMatrix([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(DimensionMismatch):
        SymplecticMatrix(np.eye(3))


def test_tolerance_is_relative():
    S = dilation(np.diag([1e3, 1.0])).matrix.copy()
    S[0, 0] *= 1 + 1e-12
    SymplecticMatrix(S)


@given(seeds, dims)
def test_rank_by_construction(seed, d):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(0, d + 1))
    assert rank_r(rng, d, r).rank_B == r


@given(seeds, st.integers(1, 5), st.integers(1, 5))
def test_penrose_identities(seed, m, n):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, min(m, n) + 1))
    B = rng.normal(size=(m, k)) @ rng.normal(size=(k, n))
    X = pseudo_inverse(B)
    assert np.allclose(B @ X @ B, B, atol=1e-9)
    assert np.allclose(X @ B @ X, X, atol=1e-9 * max(1, np.abs(X).max()))
    assert np.allclose((B @ X).T, B @ X, atol=1e-9)
    assert np.allclose((X @ B).T, X @ B, atol=1e-9)


@given(seeds, dims)
def test_subspace_bases(seed, d):
    rng = np.random.default_rng(seed)
    S = rank_r(rng, d, int(rng.integers(0, d + 1)))
    sub = subspace_bases(S.B, S.rank_tol)
    r = sub.rank
    assert sub.range.dim == sub.ker_perp.dim == r
    assert sub.ker.dim == sub.range_perp.dim == d - r
    assert np.allclose(sub.range.projector() + sub.range_perp.projector(), np.eye(d))
    assert np.allclose(sub.ker.projector() + sub.ker_perp.projector(), np.eye(d))
    if d - r:
        assert np.abs(S.B @ sub.ker.basis).max() < 1e-10 * S.norm


def test_volume_and_sigma():
    from mpk.symplectic import SubspaceBasis

    full = SubspaceBasis(np.eye(3), 3)
    E = np.array([[2.0, 1.0, 0.0], [0.0, 3.0, 0.0], [1.0, 0.0, 0.5]])
    # the full-space volume factor is |det E|
    assert simplex_volume(full, E) == pytest.approx(abs(np.linalg.det(E)))
    assert simplex_volume(SubspaceBasis(np.zeros((3, 0)), 3), E) == 1.0
    with pytest.raises(DimensionCollapse):
        simplex_volume(SubspaceBasis(np.eye(3)[:, :1], 3), np.diag([0.0, 1.0, 1.0]))
    assert sigma_product(np.diag([2.0, 3.0, 0.0])) == pytest.approx(6.0)
    assert sigma_product(np.zeros((2, 2))) == 1.0


def test_mu_S_free_and_degenerate():
    # free case: mu_S = |det B|^{-1/2}
    S = SymplecticMatrix(standard_J(2)) @ dilation(np.diag([2.0, 0.5]))
    assert mu_S(S) == pytest.approx(abs(np.linalg.det(S.B)) ** -0.5)
    with pytest.raises(DegenerateGeometry):
        mu_S(dilation(np.diag([2.0, 1.0])))


@given(seeds)
def test_splits_reconstruct(seed):
    rng = np.random.default_rng(seed)
    S = rank_r(rng, 3, 1)
    x = rng.normal(size=(5, 3))
    x1, x2 = decompose_input(S, x)
    assert np.allclose(x1 + x2, x)
    assert np.allclose(x1 @ S.subspaces().ker.basis, 0, atol=1e-10)
    y1, y2 = decompose_output(S, x)
    assert np.allclose(y1 + y2, x)
    assert np.allclose(y1 @ S.subspaces().range_perp.basis, 0, atol=1e-10)


def test_generators():
    Q = np.array([[1.0, 0.5], [0.5, -1.0]])
    assert np.array_equal(chirp_matrix(Q).C, Q)
    assert np.array_equal(multiplier_matrix(Q).B, Q)
    E = np.array([[2.0, 1.0], [0.0, 1.0]])
    Dm = dilation(E)
    assert np.allclose(Dm.A, np.linalg.inv(E)) and np.allclose(Dm.D, E.T)
    F = frft_matrix([np.pi / 2])
    assert np.allclose(F.matrix, standard_J(1))
    assert make_generator("J", d=2).rank_B == 2
    T = tensor(frft_matrix([0.3]), frft_matrix([0.7]))
    assert np.allclose(T.matrix, frft_matrix([0.3, 0.7]).matrix)


@given(seeds, dims, st.sampled_from(["csv", "json"]))
def test_matrix_io_round_trip(tmp_path_factory, seed, d, fmt):
    S = generator_product(np.random.default_rng(seed), d)
    path = tmp_path_factory.mktemp("m") / f"S.{fmt}"
    write_matrix(S, path)
    assert np.array_equal(read_matrix(path).matrix, S.matrix)


def test_matrix_csv_header_checked():
    with pytest.raises(DimensionMismatch):
        parse_matrix("# symplectic d=2\n1,0\n0,1\n", "csv")
