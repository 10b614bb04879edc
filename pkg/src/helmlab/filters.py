"""Spectral low/high-pass filters built on the weighted Neumann eigenproblem.

The discrete eigenpairs solve K phi = lambda^2 M phi, where K is the
stiffness matrix without boundary terms and M the n^2-weighted mass matrix.
Coefficients of a discrete function f are f_i = phi_i^H M f.
"""
import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

from .fem import volume_matrices
from .linsolve import solve_sparse

MAX_DENSE_DOF = 3000
BAND_TOL = 1e-12


class BudgetExceeded(ValueError):
    pass


class MassNotPositive(ArithmeticError):
    pass


class TruncationInsufficient(ValueError):
    pass


class BandViolation(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending generalized eigenpairs; ``eigenvectors`` are M-orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mass: np.ndarray
    stiffness: np.ndarray
    count: int
    unweighted_mass: np.ndarray
    n_squared: tuple

    @property
    def n_dof(self):
        return self.mass.shape[0]

    @property
    def complete(self):
        return self.count == self.n_dof

    @property
    def lambdas(self):
        return np.sqrt(np.maximum(self.eigenvalues, 0.0))

    def coefficients(self, f):
        return self.eigenvectors.T @ (self.mass @ np.asarray(f))

    def m_norm(self, f):
        f = np.asarray(f)
        return float(np.sqrt(max(np.vdot(f, self.mass @ f).real, 0.0)))


def compute_neumann_eigenpairs(space, n_inner=1.0, n_outer=1.0, count=None):
    """Dense generalized eigensolve of the n^2-weighted Neumann Laplacian."""
    n = space.n_dof
    if n > MAX_DENSE_DOF:
        raise BudgetExceeded(f"n_dof = {n} exceeds the dense budget {MAX_DENSE_DOF}")
    count = n if count is None else int(count)
    if not 1 <= count <= n:
        raise ValueError(f"count must lie in 1..{n}, got {count}")
    n1sq, n2sq = complex(n_inner) ** 2, complex(n_outer) ** 2
    if abs(n1sq.imag) > 0 or abs(n2sq.imag) > 0 or n1sq.real <= 0 or n2sq.real <= 0:
        raise MassNotPositive("weighted mass needs real positive n^2")
    stiff, m_in, m_out = volume_matrices(space)
    kd = stiff.toarray()
    m1 = (m_in + m_out).toarray()
    md = n1sq.real * m_in.toarray() + n2sq.real * m_out.toarray()
    try:
        vals, vecs = sla.eigh(kd, md, subset_by_index=[0, count - 1])
    except np.linalg.LinAlgError as exc:
        raise MassNotPositive(str(exc)) from exc
    # eigenvectors are defined up to sign; fix it for reproducible output
    pivot = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.sign(vecs[pivot, np.arange(count)])[None, :]
    return SpectralDecomposition(vals, vecs, md, kd, count, m1, (n1sq.real, n2sq.real))


def _check_eta(eta):
    if not eta > 1:
        raise ValueError(f"eta must exceed 1, got {eta}")


def filter_split(dec, f, eta, k):
    """(f_low, f_high) with f_low = sum over lambda_i < eta k of f_i phi_i."""
    _check_eta(eta)
    if not dec.complete and dec.lambdas[-1] < 2.0 * eta * k:
        raise TruncationInsufficient(
            f"largest computed lambda {dec.lambdas[-1]:.3f} is below 2 eta k = {2 * eta * k:.3f}")
    f = np.asarray(f, dtype=complex)
    c = dec.coefficients(f)
    low = dec.lambdas < eta * k
    f_low = dec.eigenvectors[:, low] @ c[low]
    return f_low, f - f_low


def apply_Nk(dec, f_high, k, eta):
    """v = sum over lambda_i >= eta k of f_i / (lambda_i^2 - k^2) phi_i.

    With an incomplete decomposition the same v is obtained from the sparse
    solve (K - k^2 M) v = M f_high.
    """
    _check_eta(eta)
    f_high = np.asarray(f_high, dtype=complex)
    c = dec.coefficients(f_high)
    low = dec.lambdas < eta * k
    scale = max(1.0, dec.m_norm(f_high))
    if np.any(np.abs(c[low]) > BAND_TOL * scale):
        raise BandViolation(f"low-band coefficient {np.abs(c[low]).max():.3e} above tolerance")
    if dec.complete:
        high = ~low
        return dec.eigenvectors[:, high] @ (c[high] / (dec.eigenvalues[high] - k * k))
    a = sps.csr_matrix(dec.stiffness - k * k * dec.mass)
    return solve_sparse(a, dec.mass @ f_high)


def nk_bound(f_norm, k, eta):
    return f_norm / ((eta * eta - 1.0) * k * k)


@dataclass(frozen=True)
class NormEquivalenceReport:
    ratios: np.ndarray
    c: float
    passed: bool


def verify_norm_equivalence(dec, space=None, samples=20, seed=0):
    """Ratios sum |f_i|^2 (1 + lambda_i^2) / f^H (K + M_1) f on sampled functions.

    Samples are random nodal vectors, random combinations of the lowest
    modes and the constant function.  PASS when every ratio lies in [1/c, c]
    with c = 1.01 max(n^2)/min(n^2) + 0.1.
    """
    if not dec.complete:
        raise TruncationInsufficient("norm equivalence needs a complete decomposition")
    rng = np.random.default_rng(seed)
    n = dec.n_dof
    vecs = [np.ones(n, dtype=complex)]
    nlow = min(20, dec.count)
    for s in range(max(samples - 1, 0)):
        if s % 2 == 0:
            vecs.append(rng.standard_normal(n) + 1j * rng.standard_normal(n))
        else:
            w = rng.standard_normal(nlow) + 1j * rng.standard_normal(nlow)
            vecs.append(dec.eigenvectors[:, :nlow] @ w)
    gram = dec.stiffness + dec.unweighted_mass
    ratios = []
    for f in vecs:
        c = dec.coefficients(f)
        num = float(np.sum(np.abs(c) ** 2 * (1.0 + np.maximum(dec.eigenvalues, 0.0))))
        den = float(np.vdot(f, gram @ f).real)
        ratios.append(num / den)
    ratios = np.array(ratios)
    nsq = dec.n_squared
    c = 1.01 * max(nsq) / min(nsq) + 0.1
    return NormEquivalenceReport(ratios, c, bool(np.all((ratios >= 1.0 / c) & (ratios <= c))))


def write_spectrum_csv(dec, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("index", "lambda_sq"))
        for i, v in enumerate(dec.eigenvalues):
            w.writerow((i, repr(float(v))))


def count_below(dec, threshold):
    return int(np.sum(dec.lambdas < threshold))
