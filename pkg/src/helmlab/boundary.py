"""Boundary operators on the unit circle and their symbols.

Covers the Robin and second-order absorbing conditions, Dirichlet-to-Neumann
symbols for the circle and the sphere, the truncated DtN block used by the
2D solver, and the elastic DtN symbols on the unit circle.
"""
import csv
import math
from dataclasses import dataclass

import numpy as np

from .specfun import hankel1_log_derivs, sph_hankel1_log_derivs

ABC_FAMILIES = ("feng", "engquist_majda", "bgt")

# max over the sweep of |n k^2 / Lambda_n - sigma_n| / k, n in [2k, 10k];
# produced by scripts/freeze_symbol_bounds.py (k in [1, 32], step 0.05), keyed by (lambda, mu)
ELASTIC_BOUND_C = {
    (0.0, 1.0): 0.47,
    (1.0, 1.0): 0.539,
    (10.0, 1.0): 0.745,
    (0.0, 3.0): 0.687,
    (1.0, 3.0): 0.723,
    (10.0, 3.0): 0.93,
}
# used for Lame pairs outside the sweep; not guaranteed to hold there
ELASTIC_BOUND_C_DEFAULT = 0.93
# max of |z_m(k) + |m|| / k over the same sweep
DTN2D_HIGH_MODE_C = 0.542


@dataclass(frozen=True)
class Robin:
    """du/dn - gamma u = g."""

    gamma: complex

    @classmethod
    def impedance(cls, k):
        return cls(1j * k)


@dataclass(frozen=True)
class SecondOrderAbc:
    """du/dn - alpha Lap_Gamma u - beta u = g."""

    alpha: complex
    beta: complex
    family: str = "custom"

    @classmethod
    def from_family(cls, family, k):
        alpha, beta = abc2_params(family, k)
        ok, reason = abc_window(alpha, beta, k)
        if not ok:
            raise ValueError(f"{family} parameters at k={k} leave the scaling window: {reason}")
        return cls(alpha, beta, family)


@dataclass(frozen=True)
class TruncatedDtN:
    """Exterior radiation condition truncated to modes |m| <= cutoff."""

    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 0:
            raise ValueError(f"cutoff must be a non-negative integer, got {self.cutoff!r}")

    @classmethod
    def default(cls, k):
        return cls(default_cutoff(k))


def default_cutoff(k):
    return int(math.ceil(2.0 * k)) + 10


def abc2_params(family, k):
    """(alpha, beta) of a named second-order absorbing condition."""
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    k = float(k)
    if family == "feng":
        return -1j / (2 * k), 1j * k - 0.5 - 1j / (8 * k)
    if family == "engquist_majda":
        return (1 + 1j * k) / (2 * k * k), 1j * k - 0.5
    if family == "bgt":
        alpha = -(1 + 1j * k) / (2 * (1 + k * k))
        beta = (-2 * k * k - 1.5j * k + 0.75) / (2 * (1j * k - 1))
        return alpha, beta
    raise ValueError(f"unknown ABC family {family!r}; expected one of {ABC_FAMILIES}")


def abc_window(alpha, beta, k):
    """Check the k-scaling window of (alpha, beta); returns (ok, reason)."""
    checks = [
        (alpha.imag != 0.0, "Im alpha == 0"),
        (0.2 <= abs(alpha.imag) * k <= 5.0, "|Im alpha| k outside [0.2, 5]"),
        (abs(alpha.real) * k * k <= 5.0, "|Re alpha| k^2 > 5"),
        (0.2 <= abs(beta) / k <= 5.0, "|beta| / k outside [0.2, 5]"),
    ]
    bad = [msg for ok, msg in checks if not ok]
    return not bad, "; ".join(bad)


# --- Helmholtz DtN symbols --------------------------------------------------

def dtn_symbol_3d(ell, k):
    """z_l(k) = k h_l'(k) / h_l(k) on the unit sphere."""
    if int(ell) != ell or ell < 0:
        raise ValueError(f"ell must be a non-negative integer, got {ell!r}")
    return complex(sph_hankel1_log_derivs(int(ell), k)[int(ell)])


def dtn_symbols_3d(lmax, k):
    return sph_hankel1_log_derivs(int(lmax), k)


def dtn_symbol_2d(m, k):
    """z_m(k) = k H_|m|'(k) / H_|m|(k) on the unit circle."""
    m = abs(int(m))
    return complex(hankel1_log_derivs(m, k)[m])


def dtn_symbols_2d(mmax, k):
    return hankel1_log_derivs(int(mmax), k)


def dtn0_symbol(mode, dim):
    """Laplace DtN symbol: -(l+1) on the sphere, -|m| on the circle (0 for m = 0)."""
    if dim == 3:
        if int(mode) != mode or mode < 0:
            raise ValueError("spherical mode must be a non-negative integer")
        return -(int(mode) + 1.0)
    if dim == 2:
        return -float(abs(int(mode)))
    raise ValueError(f"dim must be 2 or 3, got {dim!r}")


@dataclass(frozen=True)
class SymbolBoundReport:
    """Per-mode slacks of the sphere bounds; negative slack means violation."""

    k: np.ndarray
    mode: np.ndarray
    z: np.ndarray
    slack_re: np.ndarray
    slack_im: np.ndarray
    slack_2k: np.ndarray

    @property
    def min_slack(self):
        return float(min(self.slack_re.min(), self.slack_im.min(), self.slack_2k.min()))

    def violations(self, tol=1e-9):
        bad = (self.slack_re < -tol) | (self.slack_im < -tol) | (self.slack_2k < -tol)
        return int(bad.sum())


def _slacks(z, mode_term, k):
    neg_re = -z.real
    slack_re = np.minimum(neg_re - (mode_term - k), (mode_term + k) - neg_re)
    slack_im = np.minimum(z.imag, k - z.imag)
    slack_2k = 2.0 * k - np.abs(z + mode_term)
    return slack_re, slack_im, slack_2k


def sphere_bound_report(lmax=200, ks=(1, 2, 4, 8, 16, 32)):
    """Evaluate l+1-k <= -Re z_l <= l+1+k, 0 <= Im z_l <= k, |z_l + l + 1| <= 2k."""
    rows = {name: [] for name in ("k", "mode", "z", "re", "im", "two")}
    ell = np.arange(lmax + 1)
    for k in ks:
        z = dtn_symbols_3d(lmax, k)
        re, im, two = _slacks(z, ell + 1.0, float(k))
        rows["k"].append(np.full(len(ell), float(k)))
        rows["mode"].append(ell)
        rows["z"].append(z)
        rows["re"].append(re)
        rows["im"].append(im)
        rows["two"].append(two)
    cat = {key: np.concatenate(v) for key, v in rows.items()}
    return SymbolBoundReport(cat["k"], cat["mode"], cat["z"], cat["re"], cat["im"], cat["two"])


def circle_bound_report(mmax, ks):
    """Circle analogue of :func:`sphere_bound_report` with |m| in place of l+1.

    These bounds are not claimed to hold; the slacks are diagnostics only.
    """
    rows = []
    m = np.arange(mmax + 1)
    for k in ks:
        z = dtn_symbols_2d(mmax, k)
        rows.append((np.full(len(m), float(k)), m, z) + _slacks(z, m.astype(float), float(k)))
    return SymbolBoundReport(*(np.concatenate(col) for col in zip(*rows)))


def high_mode_ratio_2d(k, modes):
    """max over ``modes`` of |z_m(k) + |m|| / k."""
    modes = np.abs(np.asarray(modes, dtype=int))
    z = dtn_symbols_2d(int(modes.max()), k)[modes]
    return float(np.max(np.abs(z + modes) / k))


# --- truncated DtN block ------------------------------------------------------

def dtn_coefficient_matrix(space, L, order=None):
    """C[m, j] = (1/2pi) int phi_j e^{-i m theta} ds over r = 1, m = -L..L.

    Columns follow ``space.boundary_dofs``.
    """
    if int(L) != L or L < 0:
        raise ValueError(f"cutoff L must be a non-negative integer, got {L!r}")
    tr = space.boundary_trace(order)
    bdofs = space.boundary_dofs
    col = np.full(space.n_dof, -1, dtype=np.int64)
    col[bdofs] = np.arange(len(bdofs))
    modes = np.arange(-int(L), int(L) + 1)
    wave = np.exp(-1j * np.outer(modes, tr["theta"])) * tr["ds"][None, :] / (2.0 * np.pi)
    local_col = col[tr["dofs"]]  # (nq, nb)
    keep = local_col >= 0
    c = np.zeros((len(modes), len(bdofs)), dtype=complex)
    qi, bi = np.nonzero(keep)
    contrib = wave[:, qi] * tr["phi"][qi, bi][None, :]
    for row in range(len(modes)):
        np.add.at(c[row], local_col[qi, bi], contrib[row])
    return modes, c


def assemble_dtn_block(space, k, L):
    """Dense block B = 2 pi C^H diag(z_m) C on the boundary dofs.

    The discrete form <DtN_k^(L) u, v> equals conj(v)^T B u; the caller
    subtracts B from the volume matrix.  Returns (boundary dofs, B).
    """
    modes, c = dtn_coefficient_matrix(space, L)
    z = dtn_symbols_2d(int(L), k)[np.abs(modes)]
    block = 2.0 * np.pi * (c.conj().T * z[None, :]) @ c
    return space.boundary_dofs, block


def dtn_mode_projectors(space, L):
    """2 pi c_m^H c_m for each mode, the Hermitian PSD pieces of the DtN block."""
    modes, c = dtn_coefficient_matrix(space, L)
    return modes, [2.0 * np.pi * np.outer(row.conj(), row) for row in c]


# --- elasticity on the unit circle -------------------------------------------

def _check_lame(lam, mu):
    if not (mu > 0 and lam >= 0 and np.isfinite(lam) and np.isfinite(mu)):
        raise ValueError(f"invalid Lame parameters lambda={lam}, mu={mu}")


@dataclass(frozen=True)
class ElasticSymbolSet:
    n: int
    alpha1: complex
    alpha2: complex
    Lambda: complex
    sigma: float
    kappa1: float
    kappa2: float


def elastic_sigma(n, lam, mu):
    if n == 0:
        return 0.0
    return 2.0 * mu * (lam + 2.0 * mu) / (lam + 3.0 * mu) * (abs(n) - 1)


def elastic_symbols(n, k, lam, mu):
    """alpha_{i,n} = kappa_i H_n'(kappa_i)/H_n(kappa_i), Lambda_n, sigma_n."""
    _check_lame(lam, mu)
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    n = int(n)
    kappa1 = k / math.sqrt(lam + 2.0 * mu)
    kappa2 = k / math.sqrt(mu)
    a1 = complex(hankel1_log_derivs(abs(n), kappa1)[abs(n)])
    a2 = complex(hankel1_log_derivs(abs(n), kappa2)[abs(n)])
    return ElasticSymbolSet(n, a1, a2, n * n - a1 * a2, elastic_sigma(n, lam, mu), kappa1, kappa2)


def _elastic_lambdas(nmax, k, lam, mu):
    a1 = hankel1_log_derivs(nmax, k / math.sqrt(lam + 2.0 * mu))
    a2 = hankel1_log_derivs(nmax, k / math.sqrt(mu))
    n = np.arange(nmax + 1)
    return n * n - a1 * a2


def elastic_dtn0_matrix(n, lam, mu):
    """2x2 Hermitian matrix of -DtN_0 in mode n."""
    if not (mu > 0 and lam + 5.0 * mu / 3.0 >= 0):
        raise ValueError(f"parameter domain violated: lambda={lam}, mu={mu}")
    n = int(n)
    sigma = elastic_sigma(n, lam, mu)
    off = 1j * (n * mu - np.sign(n) * sigma)
    return np.array([[mu + sigma, -off], [off, mu + sigma]], dtype=complex)


@dataclass(frozen=True)
class ElasticBoundReport:
    k: float
    modes: np.ndarray
    ratios: np.ndarray
    max_ratio: float
    bound: float
    passed: bool


def elastic_bound_constant(lam, mu):
    return ELASTIC_BOUND_C.get((float(lam), float(mu)), ELASTIC_BOUND_C_DEFAULT)


def elastic_high_mode_ratios(k, lam, mu, modes):
    """|n k^2 / Lambda_n - sigma_n| / k for each n in ``modes``."""
    _check_lame(lam, mu)
    modes = np.asarray(modes, dtype=int)
    lam_n = _elastic_lambdas(int(np.abs(modes).max()), k, lam, mu)[np.abs(modes)]
    if np.any(lam_n == 0):
        raise ZeroDivisionError("Lambda_n vanishes on the requested range")
    sigma = np.array([elastic_sigma(int(n), lam, mu) for n in modes])
    return np.abs(modes * k * k / lam_n - sigma) / k


def check_elastic_symbol_bound(k, lam, mu, n_range=None):
    """Largest high-mode ratio over ``n_range`` (default ceil(2k)..10k) against C."""
    lo, hi = int(math.ceil(2 * k)), int(math.floor(10 * k))
    if n_range is None:
        n_range = range(lo, hi + 1)
    modes = np.array(list(n_range), dtype=int)
    if len(modes) == 0 or modes.min() < lo or modes.max() > hi:
        raise ValueError(f"n_range must lie within [{lo}, {hi}]")
    ratios = elastic_high_mode_ratios(k, lam, mu, modes)
    bound = elastic_bound_constant(lam, mu)
    mx = float(ratios.max())
    return ElasticBoundReport(float(k), modes, ratios, mx, bound, mx <= bound)


# --- CSV export -------------------------------------------------------------

SYMBOL_HEADER = ("mode", "k", "re", "im", "slack_re_bound", "slack_im_bound", "slack_2k_bound")


def symbol_rows(kind, ks, mode_max, lam=1.0, mu=1.0):
    """Rows for the symbol CSV.

    helmholtz3d / helmholtz2d: the symbol z and its three bound slacks.
    elastic: modes ceil(2k)..min(mode_max, 10k) with re/im of
    n k^2/Lambda_n - sigma_n; slack_re_bound holds the
    smallest eigenvalue of the DtN_0 matrix, slack_im_bound holds |Lambda_n|
    and slack_2k_bound holds C k minus the magnitude.
    """
    rows = []
    if kind == "helmholtz3d":
        rep = sphere_bound_report(mode_max, ks)
    elif kind == "helmholtz2d":
        rep = circle_bound_report(mode_max, ks)
    elif kind == "elastic":
        c = elastic_bound_constant(lam, mu)
        for k in ks:
            modes = np.arange(max(1, math.ceil(2 * k)), min(mode_max, math.floor(10 * k)) + 1)
            if len(modes) == 0:
                continue
            lam_n = _elastic_lambdas(int(modes[-1]), k, lam, mu)[modes]
            for n, ln in zip(modes, lam_n):
                val = n * k * k / ln - elastic_sigma(int(n), lam, mu)
                eig = float(np.linalg.eigvalsh(elastic_dtn0_matrix(int(n), lam, mu)).min())
                rows.append((int(n), float(k), val.real, val.imag, eig, abs(ln), c * k - abs(val)))
        return rows
    else:
        raise ValueError(f"unknown symbol family {kind!r}")
    for k, m, z, a, b, c in zip(rep.k, rep.mode, rep.z, rep.slack_re, rep.slack_im, rep.slack_2k):
        rows.append((int(m), float(k), z.real, z.imag, float(a), float(b), float(c)))
    return rows


def write_symbol_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SYMBOL_HEADER)
        for r in rows:
            w.writerow([r[0], repr(r[1])] + [repr(float(v)) for v in r[2:]])
