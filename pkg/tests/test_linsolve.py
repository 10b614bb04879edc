import numpy as np
import pytest
import scipy.sparse as sps

from helmlab import boundary, fem
from helmlab.linsolve import (ComplexSparseMatrix, DimensionMismatch, SingularMatrix, factorize,
                              matvec, relative_residual, solve_sparse)
from helmlab.mesh import generate_disk_mesh


def helmholtz_matrix(level=1, p=2, k=3.0):
    space = fem.build_space(generate_disk_mesh(level), p)
    prob = fem.HelmholtzProblem(k, 1.0, 2.0, boundary.Robin(1j * k), lambda x, y: np.ones_like(x))
    return fem.assemble(space, prob)


def test_finalized_structure():
    a = sps.coo_matrix(([1.0, 0.0, 2.0, 3.0], ([0, 0, 1, 1], [1, 0, 0, 0])), shape=(2, 2))
    m = ComplexSparseMatrix.from_scipy(a)
    assert m.nnz == 2  # duplicates summed, explicit zero dropped
    for i in range(m.n):
        cols = m.indices[m.indptr[i]:m.indptr[i + 1]]
        assert np.all(np.diff(cols) > 0)
    with pytest.raises(DimensionMismatch):
        ComplexSparseMatrix.from_scipy(sps.csr_matrix(np.ones((2, 3))))


def test_identity():
    b = np.array([1 + 2j, -3, 0.5j])
    assert np.array_equal(solve_sparse(sps.identity(3), b), b)
    assert np.array_equal(matvec(sps.identity(3), b), b)


def test_two_by_two_hand_elimination():
    # det = 2 - (i)(-i) = 1; x = (2, i)
    x = solve_sparse(np.array([[1, 1j], [-1j, 2]]), np.array([1, 0]))
    assert np.allclose(x, [2, 1j], atol=1e-15)


def test_helmholtz_residual():
    a, b = helmholtz_matrix(level=0, p=2, k=3.0)
    assert 60 < a.shape[0] < 250
    x = solve_sparse(a, b)
    assert relative_residual(a, x, b) <= 1e-10


def test_sparse_path_residual_and_recovery():
    a, _ = helmholtz_matrix(level=2, p=3, k=6.0)
    x0 = np.random.default_rng(0).standard_normal(a.shape[0]) + 0j
    b = matvec(a, x0)
    x = solve_sparse(a, b)
    assert relative_residual(a, x, b) <= 1e-10
    assert np.linalg.norm(x - x0) <= 1e-8 * np.linalg.norm(x0)


def test_matvec_against_dense():
    rng = np.random.default_rng(1)
    d = rng.standard_normal((50, 50)) + 1j * rng.standard_normal((50, 50))
    d[np.abs(d) < 1.0] = 0
    d = d + d.T
    x = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    assert np.max(np.abs(matvec(ComplexSparseMatrix.from_dense(d), x) - d @ x)) <= 1e-13
    assert np.array_equal(matvec(sps.csr_matrix(d), np.zeros(50)), np.zeros(50))


def test_errors():
    with pytest.raises(SingularMatrix):
        solve_sparse(np.zeros((3, 3)), np.ones(3))
    with pytest.raises(SingularMatrix):
        solve_sparse(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))
    big = sps.diags(np.r_[np.ones(99), 0.0]).tocsr()
    with pytest.raises(SingularMatrix):
        solve_sparse(big, np.ones(100))
    with pytest.raises(DimensionMismatch):
        solve_sparse(np.eye(3), np.ones(4))
    with pytest.raises(DimensionMismatch):
        matvec(np.eye(3), np.ones(2))


def test_factor_reuse_and_determinism():
    a, b = helmholtz_matrix(level=1, p=2)
    fac = factorize(a)
    x1, x2 = fac.solve(b), fac.solve(2 * b)
    assert np.allclose(x2, 2 * x1, rtol=1e-12)
    assert np.array_equal(solve_sparse(a, b), solve_sparse(a, b))
