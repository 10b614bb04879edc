import pytest

from helmlab import _pykernels, available_backends, fem, specfun

BACKENDS = sorted(available_backends())


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per importable kernel backend."""
    mod = available_backends()[request.param]
    monkeypatch.setattr(specfun, "kernels", mod)
    monkeypatch.setattr(fem, "kernels", mod)
    return request.param


@pytest.fixture
def pykernels():
    return _pykernels
