import math

import numpy as np
import pytest
import scipy.special as sc
from hypothesis import given, settings
from hypothesis import strategies as st

from helmlab import specfun
from helmlab.specfun import DomainError

EULER_GAMMA = 0.5772156649015329


def series_j0(x, terms=40):
    return sum((-1) ** m * (x / 2) ** (2 * m) / math.factorial(m) ** 2 for m in range(terms))


def series_y0(x, terms=40):
    total, harmonic = 0.0, 0.0
    for m in range(1, terms):
        harmonic += 1.0 / m
        total += (-1) ** (m + 1) * harmonic * (x / 2) ** (2 * m) / math.factorial(m) ** 2
    return 2 / math.pi * ((math.log(x / 2) + EULER_GAMMA) * series_j0(x, terms) + total)


def test_j0_at_zero_and_j1_at_zero():
    assert specfun.bessel_j(0, 0.0) == 1.0
    assert specfun.bessel_j(1, 0.0) == 0.0


def test_j0_y0_at_one_match_series(backend):
    assert abs(specfun.bessel_j(0, 1.0) - 0.7651976866) < 1e-9
    assert abs(specfun.bessel_j(0, 1.0) - series_j0(1.0)) < 1e-12
    assert abs(specfun.bessel_y(0, 1.0) - 0.0882569642) < 1e-8
    assert abs(specfun.bessel_y(0, 1.0) - series_y0(1.0)) < 1e-12


def test_y0_log_singularity():
    assert specfun.bessel_y(0, 1e-6) < -8


@pytest.mark.parametrize("bad", [(0, -1.0), (201, 1.0), (-1, 1.0), (0.5, 1.0)])
def test_bessel_j_domain(bad):
    with pytest.raises(DomainError):
        specfun.bessel_j(*bad)


@pytest.mark.parametrize("x", [0.0, -2.0, float("nan")])
def test_bessel_y_domain(x):
    with pytest.raises(DomainError):
        specfun.bessel_y(0, x)


def test_wronskian_n3_x7():
    pair = specfun.bessel_pair(3, 7.0)
    assert abs(pair.wronskian() - 2 / (7 * math.pi)) < 1e-10


def test_wronskian_grid(backend):
    xs = np.geomspace(1e-3, 200, 61)
    worst = 0.0
    for n in range(0, 61):
        j, y, jp, yp = specfun.bessel_jy(n, xs)
        ok = np.isfinite(y) & np.isfinite(yp)
        w = j * yp - jp * y
        ref = 2 / (np.pi * xs)
        worst = max(worst, float(np.max(np.abs(w[ok] - ref[ok]) / ref[ok])))
    assert worst < 1e-10


def test_shifted_wronskian():
    xs = np.linspace(0.5, 150, 40)
    for n in (0, 5, 30, 80):
        j0, y0, _, _ = specfun.bessel_jy(n, xs)
        j1, y1, _, _ = specfun.bessel_jy(n + 1, xs)
        rel = np.abs(j1 * y0 - j0 * y1 - 2 / (np.pi * xs)) * np.pi * xs / 2
        assert rel.max() < 1e-10


def test_against_scipy(backend):
    xs = np.concatenate([np.geomspace(1e-3, 1, 15), np.linspace(1, 200, 120)])
    for n in (0, 1, 2, 7, 20, 60, 150, 200):
        j, y, jp, yp = specfun.bessel_jy(n, xs)
        for ours, ref in ((j, sc.jv(n, xs)), (jp, sc.jvp(n, xs))):
            big = np.abs(ref) > 1e-6
            assert np.all(np.abs(ours[big] - ref[big]) <= 1e-9 * np.abs(ref[big]))
            assert np.all(np.abs(ours[~big] - ref[~big]) <= 1e-12)
        refy = sc.yv(n, xs)
        fin = np.isfinite(refy) & (np.abs(refy) < 1e250)
        assert np.all(np.abs(y[fin] - refy[fin]) <= 1e-9 * np.abs(refy[fin]))


@given(n=st.integers(0, 200), x=st.floats(0.0, 500.0))
@settings(max_examples=200, deadline=None)
def test_j_bounded_by_one(n, x):
    assert abs(specfun.bessel_j(n, x)) <= 1.0


def test_hankel_log_deriv_mode0_positive_imag():
    for x in (0.5, 1.0, 5.0, 20.0):
        assert specfun.hankel1_log_deriv(0, x).imag > 0


def test_hankel_log_deriv_large_order_small_argument():
    z = specfun.hankel1_log_deriv(40, 1.0)
    assert abs(z.real + 40) < 0.05 * 40


@pytest.mark.parametrize("n,x", [(0, 0.7), (1, 2.0), (5, 3.3), (17, 9.0), (60, 45.0)])
def test_hankel_log_deriv_recurrence(n, x):
    # H_n' = H_{n-1} - (n/x) H_n, with H_{-1} = -H_1
    h = lambda m: specfun.bessel_j(abs(m), x) + 1j * specfun.bessel_y(abs(m), x)
    hm1 = -h(1) if n == 0 else h(n - 1)
    direct = x * (hm1 - n / x * h(n)) / h(n)
    assert abs(specfun.hankel1_log_deriv(n, x) - direct) <= 1e-10 * abs(direct)


def test_hankel_log_deriv_domain():
    with pytest.raises(DomainError):
        specfun.hankel1_log_deriv(2, 0.0)


def test_sph_hankel_closed_forms(backend):
    for x in (0.3, 1.0, 7.5, 40.0):
        assert specfun.sph_hankel1_log_deriv(0, x) == complex(-1.0, x)
    # h1 = -e^{ix}(x + i)/x^2  =>  x h1'/h1 = ix + x/(x + i) - 2
    x = 1.0
    expect = 1j * x + x / (x + 1j) - 2
    assert abs(specfun.sph_hankel1_log_deriv(1, x) - expect) < 1e-14


def test_sph_hankel_against_scipy():
    for x in (0.5, 3.0, 25.0):
        for ell in (0, 1, 4, 30):
            h = sc.spherical_jn(ell, x) + 1j * sc.spherical_yn(ell, x)
            hp = sc.spherical_jn(ell, x, True) + 1j * sc.spherical_yn(ell, x, True)
            assert abs(specfun.sph_hankel1_log_deriv(ell, x) - x * hp / h) < 1e-10 * abs(x * hp / h)


def test_sph_hankel_imag_window():
    for x in (1.0, 4.0, 16.0):
        z = specfun.sph_hankel1_log_derivs(100, x)
        assert np.all(z.imag >= 0) and np.all(z.imag <= x)


def test_sph_hankel_domain():
    with pytest.raises(DomainError):
        specfun.sph_hankel1_log_deriv(1, -1.0)


def test_vectorised_order01_matches_scalar():
    xs = np.array([0.01, 1.0, 9.0, 25.0, 120.0])
    j0, j1, y0, y1 = specfun.bessel_jy01(xs)
    for i, x in enumerate(xs):
        assert j0[i] == pytest.approx(specfun.bessel_j(0, x), rel=1e-13, abs=1e-15)
        assert y1[i] == pytest.approx(specfun.bessel_y(1, x), rel=1e-13)
