import numpy as np
import pytest

from conftest import random_reduced
from mechent import _kernels
from mechent.covariance import solve_lyapunov_generic
from mechent.effective import build_diffusion, build_drift, build_effective_model
from mechent.entanglement import log_negativity, symplectic_eigenvalues

BACKENDS = ["numpy"] + (["numba"] if _kernels.HAS_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    old = _kernels.get_backend()
    _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(old)


@pytest.fixture
def stack():
    rng = np.random.default_rng(7)
    drift, diff = [], []
    for _ in range(50):
        m = build_effective_model(random_reduced(rng))
        drift.append(build_drift(m))
        diff.append(build_diffusion(m))
    return np.array(drift), np.array(diff)


def test_lyapunov_batch(backend, stack):
    drift, diff = stack
    cov = _kernels.lyapunov_batch(drift, diff)
    res = _kernels.lyapunov_residual_batch(drift, diff, cov)
    assert res.max() < 1e-12
    np.testing.assert_array_equal(cov, np.swapaxes(cov, 1, 2))


def test_symplectic_batch(backend, stack):
    cov = _kernels.lyapunov_batch(*stack)
    vs, rad, zeta, det_r = _kernels.symplectic_batch(cov, transpose=True)
    ref = [log_negativity(c).v_s for c in cov]
    np.testing.assert_allclose(vs, ref, rtol=1e-10)
    vphys, *_ = _kernels.symplectic_batch(cov, transpose=False)
    np.testing.assert_allclose(vphys, [symplectic_eigenvalues(c)[0] for c in cov], rtol=1e-9)
    np.testing.assert_allclose(det_r, np.linalg.det(cov), rtol=1e-10)


def test_backends_agree(stack):
    if len(BACKENDS) < 2:
        pytest.skip("numba not available")
    old = _kernels.get_backend()
    out = {}
    for b in BACKENDS:
        _kernels.set_backend(b)
        out[b] = _kernels.lyapunov_batch(*stack)
    _kernels.set_backend(old)
    scale = np.abs(out["numpy"]).max(axis=(1, 2))
    dev = np.abs(out["numba"] - out["numpy"]).max(axis=(1, 2)) / scale
    assert dev.max() < 1e-12


def test_single_point_uses_kernel(backend, stack):
    r = solve_lyapunov_generic(stack[0][0], stack[1][0]).matrix
    np.testing.assert_allclose(r, _kernels.lyapunov_batch(stack[0][:1], stack[1][:1])[0])


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.set_backend("fortran")


def test_env_var_selects_backend(tmp_path):
    import subprocess
    import sys
    code = "from mechent import _kernels; print(_kernels.get_backend())"
    out = subprocess.run([sys.executable, "-c", code], env={"MECHENT_BACKEND": "numpy",
                         "PATH": "/usr/bin:/bin"}, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
