import numpy as np
import pytest

from helmlab import _pykernels, available_backends
from helmlab.quadrature import quadrature_triangle
from helmlab.reference import lagrange_basis

compiled = available_backends().get("compiled")
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def test_python_backend_always_available():
    assert "python" in available_backends()


@needs_compiled
def test_jy01_agree():
    x = np.concatenate([np.geomspace(1e-3, 8, 50), np.linspace(8, 300, 200)])
    for a, b in zip(compiled.jy01(x), _pykernels.jy01(x)):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


@needs_compiled
@pytest.mark.parametrize("n", [0, 3, 40, 200])
def test_jyn_agree(n):
    x = np.linspace(0.05, 150, 80)
    for a, b in zip(compiled.jyn(n, x), _pykernels.jyn(n, x)):
        fin = np.isfinite(b)
        assert np.allclose(a[fin], b[fin], rtol=1e-11, atol=1e-14)


@needs_compiled
def test_logderiv_agree():
    for x in (0.2, 3.0, 50.0):
        assert np.allclose(compiled.hankel1_ratio_logderiv(60, x), _pykernels.hankel1_ratio_logderiv(60, x),
                           rtol=1e-12)
        assert np.allclose(compiled.sph_hankel1_ratio_logderiv(60, x),
                           _pykernels.sph_hankel1_ratio_logderiv(60, x), rtol=1e-12)


@needs_compiled
def test_element_matrices_agree():
    rng = np.random.default_rng(3)
    q = quadrature_triangle(9)
    phi, dphi = lagrange_basis(3).eval(q.xy)
    jac = rng.standard_normal((7, len(q), 2, 2)) + 3 * np.eye(2)
    ks, ms = compiled.element_matrices(dphi, phi, q.weights, jac)
    kp, mp = _pykernels.element_matrices(dphi, phi, q.weights, jac)
    assert np.allclose(ks, kp, rtol=1e-12, atol=1e-13)
    assert np.allclose(ms, mp, rtol=1e-12, atol=1e-13)
