"""Direct solver for complex sparse systems.

Thin layer over SuperLU: column approximate-minimum-degree ordering with
threshold partial pivoting.  Small systems go through dense LAPACK LU.
"""
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

PIVOT_THRESHOLD = 0.1
DENSE_CUTOFF = 64
SINGULAR_TOL = 1e-14


class SingularMatrix(ArithmeticError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ComplexSparseMatrix:
    """Finalized square CSR matrix with sorted column indices and no stored zeros."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @classmethod
    def from_scipy(cls, mat):
        m = sps.csr_matrix(mat, dtype=complex, copy=True)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got {m.shape}")
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        for arr in (m.indptr, m.indices, m.data):
            arr.setflags(write=False)
        return cls(m.shape[0], m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, arr):
        return cls.from_scipy(sps.csr_matrix(np.asarray(arr, dtype=complex)))

    def to_scipy(self):
        return sps.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def to_dense(self):
        return self.to_scipy().toarray()

    @property
    def nnz(self):
        return len(self.data)

    def max_abs(self):
        return float(np.abs(self.data).max()) if self.nnz else 0.0

    def frobenius(self):
        return float(np.linalg.norm(self.data))


def _as_matrix(a):
    return a if isinstance(a, ComplexSparseMatrix) else ComplexSparseMatrix.from_scipy(a)


def matvec(a, x):
    a = _as_matrix(a)
    x = np.asarray(x)
    if x.shape[0] != a.n:
        raise DimensionMismatch(f"vector length {x.shape[0]} != matrix dimension {a.n}")
    return a.to_scipy() @ x


class Factorization:
    """Reusable LU factors of a :class:`ComplexSparseMatrix`."""

    def __init__(self, a):
        self.matrix = a = _as_matrix(a)
        scale = a.max_abs()
        if a.n == 0 or scale == 0.0:
            raise SingularMatrix("zero matrix")
        if a.n <= DENSE_CUTOFF:
            with warnings.catch_warnings():
                # exact zero pivots are reported below as SingularMatrix
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                lu, piv = sla.lu_factor(a.to_dense(), check_finite=True)
            diag = np.abs(np.diag(lu))
            self._solve = lambda b: sla.lu_solve((lu, piv), b)
        else:
            try:
                lu = spla.splu(a.to_scipy().tocsc(), permc_spec="COLAMD",
                               diag_pivot_thresh=PIVOT_THRESHOLD)
            except RuntimeError as exc:
                raise SingularMatrix(str(exc)) from exc
            diag = np.abs(lu.U.diagonal())
            self._solve = lu.solve
        if diag.min() <= SINGULAR_TOL * scale:
            raise SingularMatrix(f"pivot {diag.min():.3e} below {SINGULAR_TOL:g} * max|A|")

    def solve(self, b):
        b = np.asarray(b, dtype=complex)
        if b.shape[0] != self.matrix.n:
            raise DimensionMismatch(f"rhs length {b.shape[0]} != matrix dimension {self.matrix.n}")
        return self._solve(b)


def factorize(a):
    return Factorization(a)


def relative_residual(a, x, b):
    a = _as_matrix(a)
    r = matvec(a, x) - b
    return float(np.linalg.norm(r) / (a.frobenius() * np.linalg.norm(x) + np.linalg.norm(b)))


def solve_sparse(a, b):
    """Solve A x = b; raises :class:`SingularMatrix` or :class:`DimensionMismatch`."""
    return Factorization(a).solve(b)
