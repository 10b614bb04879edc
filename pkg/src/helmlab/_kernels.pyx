# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Bessel J/Y evaluation and element-matrix integration.

Same algorithms and switch points as ``_pykernels``; the two are checked
against each other in the test suite.
"""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.math cimport sqrt, log, cos, sin, fabs, pow, INFINITY, M_PI

cnp.import_array()

cdef double EULER_GAMMA = 0.57721566490153286061
cdef double SERIES_MAX = 8.0
cdef double ASYMPTOTIC_MIN = 30.0
cdef int N_SERIES = 40
cdef int N_ASYMP = 24


cdef inline int _miller_start(int n, double x) noexcept nogil:
    cdef double top = x if x > n else <double>n
    return <int>top + 12 + <int>(0.5 * pow(150.0 * sqrt(x), 2.0 / 3.0))


cdef void _series01(double x, double* out) noexcept nogil:
    cdef double h = 0.5 * x
    cdef double q = -h * h
    cdef double t = 1.0, s = 1.0, j0 = 1.0, j1 = 1.0
    cdef double harm = 0.0, y0sum = 0.0, y1sum = 1.0, lg
    cdef int m
    for m in range(1, N_SERIES):
        harm += 1.0 / m
        t = t * q / (m * m)
        s = s * q / (m * (m + 1.0))
        j0 += t
        j1 += s
        y0sum += harm * t
        y1sum += (2.0 * harm + 1.0 / (m + 1.0)) * s
    j1 = h * j1
    lg = log(h)
    out[0] = j0
    out[1] = j1
    out[2] = (2.0 / M_PI) * ((lg + EULER_GAMMA) * j0 - y0sum)
    out[3] = -2.0 / (M_PI * x) + (2.0 / M_PI) * lg * j1 - (h * y1sum - 2.0 * EULER_GAMMA * j1) / M_PI


cdef void _miller01(double x, double* out) noexcept nogil:
    cdef int m = _miller_start(0, x)
    cdef int kk, half
    cdef double f2 = 0.0, f1 = 1e-30, f = 1e-30
    cdef double norm = 0.0, su = 0.0, sv = 0.0, f_one = 0.0, sgn, ec
    m += m % 2
    for kk in range(m, -1, -1):
        if kk != m:
            f = (2.0 * (kk + 1)) / x * f1 - f2
            f2 = f1
            f1 = f
        half = kk // 2
        sgn = -1.0 if half % 2 else 1.0
        if kk % 2 == 0:
            if kk > 0:
                norm += 2.0 * f
                su += sgn * f / kk
            else:
                norm += f
        elif kk > 1:
            sv += sgn * kk / (kk * kk - 1.0) * f
        if kk == 1:
            f_one = f
    ec = log(0.5 * x) + EULER_GAMMA
    out[0] = f / norm
    out[1] = f_one / norm
    out[2] = (2.0 / M_PI) * (ec * out[0] - 4.0 * su / norm)
    out[3] = (2.0 / M_PI) * ((ec - 1.0) * out[1] - out[0] / x - 4.0 * sv / norm)


cdef void _asymptotic01(double x, double* out) noexcept nogil:
    cdef double inv8x = 1.0 / (8.0 * x)
    cdef double mu, p, q, term, chi, amp, c, s
    cdef int nu, kk
    amp = sqrt(2.0 / (M_PI * x))
    for nu in range(2):
        mu = 4.0 * nu * nu
        p = 1.0
        q = 0.0
        term = 1.0
        for kk in range(1, N_ASYMP):
            term = term * (mu - (2 * kk - 1) * (2 * kk - 1)) * inv8x / kk
            if kk % 2 == 1:
                q += (-term if ((kk - 1) // 2) % 2 else term)
            else:
                p += (-term if (kk // 2) % 2 else term)
        chi = x - (0.5 * nu + 0.25) * M_PI
        c = cos(chi)
        s = sin(chi)
        out[nu] = amp * (p * c - q * s)
        out[2 + nu] = amp * (p * s + q * c)


cdef void _jy01_scalar(double x, double* out) noexcept nogil:
    if x == 0.0:
        out[0] = 1.0
        out[1] = 0.0
        out[2] = -INFINITY
        out[3] = -INFINITY
    elif x < SERIES_MAX:
        _series01(x, out)
    elif x <= ASYMPTOTIC_MIN:
        _miller01(x, out)
    else:
        _asymptotic01(x, out)


def jy01(x):
    """J0, J1, Y0, Y1 at every entry of ``x``."""
    xa = np.ascontiguousarray(x, dtype=np.float64)
    shape = xa.shape
    cdef const double[::1] xv = xa.ravel()
    cdef Py_ssize_t n = xv.shape[0], i
    res = np.empty((4, n))
    cdef double[:, ::1] r = res
    cdef double buf[4]
    with nogil:
        for i in range(n):
            _jy01_scalar(xv[i], buf)
            r[0, i] = buf[0]
            r[1, i] = buf[1]
            r[2, i] = buf[2]
            r[3, i] = buf[3]
    return tuple(res[k].reshape(shape) for k in range(4))


cdef int _jyn_scalar(int n, double x, double* out) noexcept nogil:
    # out: J_n, Y_n, J_n', Y_n'; returns -1 on allocation failure
    cdef double buf[4]
    cdef int top = n + 1, m, kk
    cdef double cur = 0.0
    cdef double* jv = <double*> malloc((top + 1) * sizeof(double))
    cdef double* yv = <double*> malloc((top + 1) * sizeof(double))
    cdef double* r = <double*> malloc((top + 1) * sizeof(double))
    if jv == NULL or yv == NULL or r == NULL:
        free(jv)
        free(yv)
        free(r)
        return -1
    _jy01_scalar(x, buf)
    m = _miller_start(top, x)
    for kk in range(m, 0, -1):
        cur = x / (2.0 * kk - x * cur)
        if kk <= top:
            r[kk] = cur
    jv[0] = buf[0]
    # anchor on whichever of J0, J1 is larger in magnitude
    jv[1] = buf[0] * r[1] if fabs(buf[0]) >= fabs(buf[1]) else buf[1]
    for kk in range(2, top + 1):
        jv[kk] = jv[kk - 1] * r[kk]
    yv[0] = buf[2]
    yv[1] = buf[3]
    for kk in range(1, top):
        yv[kk + 1] = (2.0 * kk / x) * yv[kk] - yv[kk - 1]
    out[0] = jv[n]
    out[1] = yv[n]
    if n == 0:
        out[2] = -jv[1]
        out[3] = -yv[1]
    else:
        out[2] = 0.5 * (jv[n - 1] - jv[n + 1])
        out[3] = 0.5 * (yv[n - 1] - yv[n + 1])
    free(jv)
    free(yv)
    free(r)
    return 0


def jyn(int n, x):
    """J_n, Y_n, J_n', Y_n' on an array of x > 0 for a fixed integer order n >= 0."""
    xa = np.ascontiguousarray(x, dtype=np.float64)
    shape = xa.shape
    cdef const double[::1] xv = xa.ravel()
    cdef Py_ssize_t npts = xv.shape[0], i
    res = np.empty((4, npts))
    cdef double[:, ::1] rv = res
    cdef double buf[4]
    cdef int status = 0
    with nogil:
        for i in range(npts):
            status = _jyn_scalar(n, xv[i], buf)
            if status != 0:
                break
            rv[0, i] = buf[0]
            rv[1, i] = buf[1]
            rv[2, i] = buf[2]
            rv[3, i] = buf[3]
    if status != 0:
        raise MemoryError()
    return tuple(res[k].reshape(shape) for k in range(4))


def hankel1_ratio_logderiv(int nmax, double x):
    """x H_n'(x)/H_n(x) for n = 0..nmax at a scalar x > 0."""
    cdef double buf[4]
    cdef int n
    _jy01_scalar(x, buf)
    cdef double complex h0 = buf[0] + 1j * buf[2]
    cdef double complex h1 = buf[1] + 1j * buf[3]
    cdef double complex q = h1 / h0
    out = np.empty(nmax + 1, dtype=np.complex128)
    cdef double complex[::1] o = out
    o[0] = -x * q
    for n in range(1, nmax + 1):
        o[n] = x / q - n
        q = 2.0 * n / x - 1.0 / q
    return out


def sph_hankel1_ratio_logderiv(int lmax, double x):
    """x h_l'(x)/h_l(x) for l = 0..lmax at a scalar x > 0 (spherical Hankel, 1st kind)."""
    cdef int ell
    cdef double complex q = 1.0 / x - 1j
    out = np.empty(lmax + 1, dtype=np.complex128)
    cdef double complex[::1] o = out
    o[0] = -1.0 + 1j * x
    for ell in range(1, lmax + 1):
        o[ell] = x / q - (ell + 1)
        q = (2.0 * ell + 1.0) / x - 1.0 / q
    return out


def element_matrices(dphi, phi, weights, jac):
    """Local stiffness and (unweighted) mass matrices for a batch of elements.

    Shapes as in ``_pykernels.element_matrices``.
    """
    cdef const double[:, :, ::1] dp = np.ascontiguousarray(dphi, dtype=np.float64)
    cdef const double[:, ::1] ph = np.ascontiguousarray(phi, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[:, :, :, ::1] jc = np.ascontiguousarray(jac, dtype=np.float64)
    cdef Py_ssize_t ne = jc.shape[0], nq = dp.shape[0], nb = dp.shape[1]
    stiff_arr = np.zeros((ne, nb, nb))
    mass_arr = np.zeros((ne, nb, nb))
    cdef double[:, :, ::1] K = stiff_arr
    cdef double[:, :, ::1] M = mass_arr
    gx_arr = np.empty(nb)
    gy_arr = np.empty(nb)
    cdef double[::1] gx = gx_arr
    cdef double[::1] gy = gy_arr
    cdef Py_ssize_t e, q, a, b
    cdef double ja, jb, jcc, jd, det, wd, inv, pa, ga_x, ga_y
    with nogil:
        for e in range(ne):
            for q in range(nq):
                ja = jc[e, q, 0, 0]
                jb = jc[e, q, 0, 1]
                jcc = jc[e, q, 1, 0]
                jd = jc[e, q, 1, 1]
                det = ja * jd - jb * jcc
                wd = w[q] * det
                inv = 1.0 / det
                for a in range(nb):
                    gx[a] = (jd * dp[q, a, 0] - jcc * dp[q, a, 1]) * inv
                    gy[a] = (-jb * dp[q, a, 0] + ja * dp[q, a, 1]) * inv
                for a in range(nb):
                    ga_x = wd * gx[a]
                    ga_y = wd * gy[a]
                    pa = wd * ph[q, a]
                    for b in range(a, nb):
                        K[e, a, b] += ga_x * gx[b] + ga_y * gy[b]
                        M[e, a, b] += pa * ph[q, b]
            for a in range(nb):
                for b in range(a + 1, nb):
                    K[e, b, a] = K[e, a, b]
                    M[e, b, a] = M[e, a, b]
    return stiff_arr, mass_arr
