"""Pure numpy implementations of the hot kernels.

This module mirrors ``_kernels.pyx`` function for function.  It is used
when the compiled extension is unavailable or when ``HELMLAB_BACKEND=python``
is set.  Every routine works on float64 arrays and never calls into
``scipy.special``.
"""
import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061
SERIES_MAX = 8.0
ASYMPTOTIC_MIN = 30.0
_N_SERIES = 40
_N_ASYMP = 24


def miller_start(n, x):
    """Starting index for the backward recurrence at order ``n``, argument ``x``."""
    return int(max(n, x)) + 12 + int(0.5 * (150.0 * math.sqrt(x)) ** (2.0 / 3.0))


def _series01(x):
    h = 0.5 * x
    q = -h * h
    t = np.ones_like(x)
    s = np.ones_like(x)
    j0 = t.copy()
    j1 = s.copy()
    harm = 0.0
    y0sum = np.zeros_like(x)
    # psi(m+1) + psi(m+2) + 2*gamma = H_m + H_{m+1}
    y1sum = np.ones_like(x)
    for m in range(1, _N_SERIES):
        harm += 1.0 / m
        t = t * q / (m * m)
        s = s * q / (m * (m + 1))
        j0 += t
        j1 += s
        y0sum += harm * t
        y1sum += (harm + harm + 1.0 / (m + 1)) * s
    j1 = h * j1
    lg = np.log(h)
    y0 = (2.0 / np.pi) * ((lg + EULER_GAMMA) * j0 - y0sum)
    # (1/pi) * sum (psi(m+1)+psi(m+2)) (-1)^m h^{2m+1}/(m!(m+1)!)
    psisum = h * y1sum - 2.0 * EULER_GAMMA * j1
    y1 = -2.0 / (np.pi * x) + (2.0 / np.pi) * lg * j1 - psisum / np.pi
    return j0, j1, y0, y1


def _miller01(x):
    m = miller_start(0, float(np.max(x)))
    m += m % 2
    f2 = np.zeros_like(x)
    f1 = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    su = np.zeros_like(x)
    sv = np.zeros_like(x)
    f_one = None
    f = f1
    for kk in range(m, -1, -1):
        # f holds F_kk
        if kk == m:
            f = f1
        else:
            f = (2.0 * (kk + 1)) / x * f1 - f2
            f2, f1 = f1, f
        if kk % 2 == 0:
            if kk > 0:
                norm += 2.0 * f
                su += (-1) ** (kk // 2) * f / kk
            else:
                norm += f
        elif kk > 1:
            sv += (-1) ** (kk // 2) * kk / (kk * kk - 1.0) * f
        if kk == 1:
            f_one = f
    j0 = f / norm
    j1 = f_one / norm
    ec = np.log(0.5 * x) + EULER_GAMMA
    y0 = (2.0 / np.pi) * (ec * j0 - 4.0 * su / norm)
    y1 = (2.0 / np.pi) * ((ec - 1.0) * j1 - j0 / x - 4.0 * sv / norm)
    return j0, j1, y0, y1


def _asymptotic01(x):
    out = []
    inv8x = 1.0 / (8.0 * x)
    for nu in (0, 1):
        mu = 4.0 * nu * nu
        p = np.ones_like(x)
        q = np.zeros_like(x)
        term = np.ones_like(x)
        for kk in range(1, _N_ASYMP):
            term = term * (mu - (2 * kk - 1) ** 2) * inv8x / kk
            if kk % 2 == 1:
                q += (-1) ** ((kk - 1) // 2) * term
            else:
                p += (-1) ** (kk // 2) * term
        chi = x - (0.5 * nu + 0.25) * np.pi
        amp = np.sqrt(2.0 / (np.pi * x))
        c, s = np.cos(chi), np.sin(chi)
        out.append((amp * (p * c - q * s), amp * (p * s + q * c)))
    (j0, y0), (j1, y1) = out
    return j0, j1, y0, y1


def jy01(x):
    """J0, J1, Y0, Y1 at every entry of ``x`` (x > 0; J values also at x == 0)."""
    x = np.ascontiguousarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    j0 = np.empty_like(x)
    j1 = np.empty_like(x)
    y0 = np.empty_like(x)
    y1 = np.empty_like(x)
    zero = x == 0.0
    j0[zero], j1[zero], y0[zero], y1[zero] = 1.0, 0.0, -np.inf, -np.inf
    for sel, fn in (
        ((x > 0.0) & (x < SERIES_MAX), _series01),
        ((x >= SERIES_MAX) & (x <= ASYMPTOTIC_MIN), _miller01),
        (x > ASYMPTOTIC_MIN, _asymptotic01),
    ):
        if np.any(sel):
            a, b, c, d = fn(x[sel])
            j0[sel], j1[sel], y0[sel], y1[sel] = a, b, c, d
    return tuple(v.reshape(shape) for v in (j0, j1, y0, y1))


def j_ratios(nmax, x):
    """Ratios r[k] = J_k(x)/J_{k-1}(x), k = 1..nmax, by backward continued fraction.

    Returned array has shape (nmax + 1, len(x)); row 0 is unused.
    """
    x = np.asarray(x, dtype=float)
    m = miller_start(nmax, float(np.max(x)))
    r = np.zeros((nmax + 1,) + x.shape)
    cur = np.zeros_like(x)
    for kk in range(m, 0, -1):
        cur = x / (2.0 * kk - x * cur)
        if kk <= nmax:
            r[kk] = cur
    return r


def jyn(n, x):
    """J_n, Y_n, J_n', Y_n' on an array of x > 0 for a fixed integer order n >= 0."""
    x = np.ascontiguousarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    j0, j1, y0, y1 = jy01(x)
    top = n + 1
    # J_0..J_{n+1}: anchor on whichever of J0, J1 is larger in magnitude
    jv = np.empty((top + 1, x.size))
    jv[0] = j0
    if top >= 1:
        r = j_ratios(top, x)
        use0 = np.abs(j0) >= np.abs(j1)
        jv[1] = np.where(use0, j0 * r[1], j1)
        for kk in range(2, top + 1):
            jv[kk] = jv[kk - 1] * r[kk]
    yv = np.empty((top + 1, x.size))
    yv[0] = y0
    yv[1] = y1
    with np.errstate(over="ignore", invalid="ignore"):
        for kk in range(1, top):
            yv[kk + 1] = (2.0 * kk / x) * yv[kk] - yv[kk - 1]
        if n == 0:
            jp, yp = -jv[1], -yv[1]
        else:
            jp = 0.5 * (jv[n - 1] - jv[n + 1])
            yp = 0.5 * (yv[n - 1] - yv[n + 1])
    return tuple(v.reshape(shape) for v in (jv[n], yv[n], jp, yp))


def hankel1_ratio_logderiv(nmax, x):
    """x H_n'(x)/H_n(x) for n = 0..nmax at a scalar x > 0."""
    j0, j1, y0, y1 = (float(v[0]) for v in jy01(np.array([x])))
    h0 = complex(j0, y0)
    h1 = complex(j1, y1)
    out = np.empty(nmax + 1, dtype=complex)
    out[0] = -x * h1 / h0
    q = h1 / h0
    for n in range(1, nmax + 1):
        out[n] = x / q - n
        q = 2.0 * n / x - 1.0 / q
    return out


def sph_hankel1_ratio_logderiv(lmax, x):
    """x h_l'(x)/h_l(x) for l = 0..lmax at a scalar x > 0 (spherical Hankel, 1st kind)."""
    out = np.empty(lmax + 1, dtype=complex)
    out[0] = complex(-1.0, x)
    q = complex(1.0 / x, -1.0)  # h_1 / h_0
    for ell in range(1, lmax + 1):
        out[ell] = x / q - (ell + 1)
        q = (2.0 * ell + 1.0) / x - 1.0 / q
    return out


def element_matrices(dphi, phi, weights, jac):
    """Local stiffness and (unweighted) mass matrices for a batch of elements.

    Parameters
    ----------
    dphi : (nq, nb, 2) reference gradients of the basis at quadrature points
    phi : (nq, nb) basis values
    weights : (nq,) reference quadrature weights
    jac : (ne, nq, 2, 2) Jacobians of the geometric map, jac[..., i, j] = dx_i/dxi_j

    Returns
    -------
    stiff, mass : (ne, nb, nb) arrays
    """
    a, b = jac[..., 0, 0], jac[..., 0, 1]
    c, d = jac[..., 1, 0], jac[..., 1, 1]
    det = a * d - b * c
    wdet = weights[None, :] * det
    # inverse transpose applied to reference gradients
    gx = (d[..., None] * dphi[None, :, :, 0] - c[..., None] * dphi[None, :, :, 1]) / det[..., None]
    gy = (-b[..., None] * dphi[None, :, :, 0] + a[..., None] * dphi[None, :, :, 1]) / det[..., None]
    stiff = np.einsum("eq,eqa,eqb->eab", wdet, gx, gx, optimize=True)
    stiff += np.einsum("eq,eqa,eqb->eab", wdet, gy, gy, optimize=True)
    mass = np.einsum("eq,qa,qb->eab", wdet, phi, phi, optimize=True)
    return stiff, mass
