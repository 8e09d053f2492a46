import dataclasses
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_reduced, sym_point
from mechent.covariance import (
    CovarianceMatrix,
    cramer_matrices,
    from_elements,
    lyapunov_residual,
    solve_covariance_cramer,
    solve_lyapunov_dense,
    solve_lyapunov_generic,
    structure_deviation,
    symmetric_closed_form,
    symmetric_determinants,
)
from mechent.effective import build_diffusion, build_drift, build_effective_model
from mechent.exceptions import NearMarginalError, ParameterError, UnstableSystemError
from mechent.params import ReducedParams
from oracles import covariance_scipy


def matrices(p):
    m = build_effective_model(p)
    return m, build_drift(m), build_diffusion(m)


def rel(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


def test_ornstein_uhlenbeck():
    f = np.diag([1.0, 1.0, 3.0, 3.0])
    r = solve_lyapunov_generic(-0.5 * 2.0 * np.eye(4), f).matrix
    np.testing.assert_allclose(r, f / 2.0, rtol=1e-14)


def test_thermal_mirrors():
    p = ReducedParams.symmetric(occupancy=1.5).replace(n2=0.25)
    _, b, f = matrices(p)
    r = solve_lyapunov_generic(b, f).matrix
    np.testing.assert_allclose(r, np.diag([2.0, 2.0, 0.75, 0.75]), rtol=1e-13)


@pytest.mark.parametrize("theta, phi", [(0.0, 0.0), (math.pi / 12, 0.0), (2.0, 1.3)])
def test_generic_vs_ladder_oracle(theta, phi):
    p = sym_point(pump_phase=theta, squeezing_phase=phi)
    _, b, f = matrices(p)
    r = solve_lyapunov_generic(b, f).matrix
    assert rel(r, covariance_scipy(p)) < 1e-10


def test_generic_vs_scipy_bartels_stewart(rng):
    for _ in range(20):
        _, b, f = matrices(random_reduced(rng))
        ref = scipy.linalg.solve_continuous_lyapunov(b, -f)
        assert rel(solve_lyapunov_generic(b, f).matrix, ref) < 1e-10


def test_generic_vs_cramer_at_operating_point(point):
    m, b, f = matrices(point)
    assert rel(solve_covariance_cramer(m, f).matrix, solve_lyapunov_generic(b, f).matrix) < 1e-10


def test_cramer_decoupled():
    p = sym_point(gain_ratio=0.0).replace(gamma2=2 * sym_point().gamma1, n2=2.0)
    m, _, f = matrices(p)
    r11, r13, r14, r33 = solve_covariance_cramer(m, f).elements
    assert r11 == pytest.approx(f[0, 0] / m.ups1, rel=1e-12)
    assert r33 == pytest.approx(f[2, 2] / m.ups2, rel=1e-12)
    assert r13 == pytest.approx(2 * f[0, 2] / (m.ups1 + m.ups2), rel=1e-12)
    assert r14 == pytest.approx(2 * f[0, 3] / (m.ups1 + m.ups2), abs=1e-15)


def test_symmetric_determinants_theta_zero(point):
    m, _, f = matrices(point)
    u, x = m.ups1, abs(m.chi)
    det_d, d1, _, d3, _ = symmetric_determinants(m, f)
    assert d1 == pytest.approx(u**3 * f[0, 0] / 4 + x * u**2 * f[0, 2] / 2, rel=1e-12)
    assert d3 == pytest.approx((u**3 - 4 * x * x * u) * f[0, 3] / 4, rel=1e-12, abs=1e-300)
    # det D = ups^2 (ups^2/4 - chi^2) from direct expansion (see decisions ledger)
    d, _ = cramer_matrices(m, f)
    assert det_d == pytest.approx(np.linalg.det(d), rel=1e-10)


def test_symmetric_det_at_quarter_coupling():
    # |chi| = Ups/4 gives det D = Ups^4/4 - Ups^4/16 = 3 Ups^4/16
    p = sym_point()
    m = build_effective_model(p)
    u = m.ups1
    m = dataclasses.replace(m, chi=complex(u / 4))
    det_d = symmetric_determinants(m, build_diffusion(build_effective_model(p)))[0]
    assert det_d == pytest.approx(3 * u**4 / 16, rel=1e-14)


def test_symmetric_closed_form_decoupled():
    p = sym_point(gain_ratio=0.0)
    m, _, f = matrices(p)
    np.testing.assert_allclose(symmetric_closed_form(m, f).matrix,
                               solve_covariance_cramer(m, f).matrix, rtol=1e-12)


def test_symmetric_closed_form_near_threshold():
    p = sym_point(gain_ratio=0.49, squeezing=0.0, occupancy=0.0)
    m, b, f = matrices(p)
    assert rel(symmetric_closed_form(m, f).matrix, solve_lyapunov_generic(b, f).matrix) < 1e-10


@pytest.mark.parametrize("kw", [dict(pump_phase=0.1), dict(squeezing_phase=0.1)])
def test_symmetric_closed_form_domain(kw):
    m, _, f = matrices(sym_point(**kw))
    with pytest.raises(ParameterError):
        symmetric_closed_form(m, f)


def test_symmetric_closed_form_asymmetric_rejected(rng):
    m, _, f = matrices(random_reduced(rng))
    with pytest.raises(ParameterError):
        symmetric_closed_form(m, f)


def test_unstable_refused():
    with pytest.raises(UnstableSystemError):
        solve_lyapunov_generic(np.eye(4), np.eye(4))
    with pytest.raises(UnstableSystemError):
        solve_lyapunov_dense(np.eye(8), np.eye(8))


def test_cramer_near_marginal():
    m, _, f = matrices(sym_point())
    m = dataclasses.replace(m, chi=complex(m.ups1 / 2))
    with pytest.raises(NearMarginalError):
        solve_covariance_cramer(m, f)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_structure_emerges(seed):
    # the block pattern is not imposed by the generic solver
    _, b, f = matrices(random_reduced(np.random.default_rng(seed)))
    r = solve_lyapunov_generic(b, f).matrix
    assert structure_deviation(r) < 1e-10
    assert lyapunov_residual(b, f, r) < 1e-10
    np.testing.assert_array_equal(r, r.T)
    assert np.linalg.eigvalsh(r)[0] > 0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dual_method(seed):
    m, b, f = matrices(random_reduced(np.random.default_rng(seed)))
    assert rel(solve_covariance_cramer(m, f).matrix, solve_lyapunov_generic(b, f).matrix) < 1e-10


@pytest.mark.parametrize("g", [1e-2, 3e-3, 1e-3, 1e-4])
def test_thermal_limit(g):
    # cooling pulls R11 from n + 1/2 towards 1/2 by at most n * Gamma / gamma ~ G^2
    p = ReducedParams.symmetric(coupling_ratio=g, occupancy=0.5)
    _, b, f = matrices(p)
    r = solve_lyapunov_generic(b, f).matrix
    bound = 0.5 * 4 * p.coupling1**2 / (p.kappa1 * p.gamma1)
    assert np.abs(r - np.eye(4)).max() <= bound * (1 + 1e-9)


def test_dense_matches_generic(point):
    _, b, f = matrices(point)
    np.testing.assert_allclose(solve_lyapunov_dense(b, f), solve_lyapunov_generic(b, f).matrix,
                               rtol=1e-10)


def test_from_elements_pattern():
    r = from_elements(1.0, 0.2, 0.3, 2.0)
    assert structure_deviation(r) == 0.0


def test_covariance_read_only():
    c = CovarianceMatrix(np.eye(4) / 2, "generic-lyapunov")
    with pytest.raises(ValueError):
        c.matrix[0, 0] = 1.0
    with pytest.raises(ValueError):
        CovarianceMatrix(np.eye(3), "cramer")


def test_symmetric_det_symbolic():
    # det of the symmetric theta = 0 coefficient matrix, expanded exactly
    sympy = pytest.importorskip("sympy")
    u, x = sympy.symbols("u x", positive=True)
    d = sympy.Matrix([
        [-u / 2, x, 0, 0],
        [x, -u, 0, x],
        [0, 0, -u, 0],
        [0, x, 0, -u / 2],
    ])
    assert sympy.expand(d.det() - u**2 * (u**2 / 4 - x**2)) == 0
    assert d.det().subs(x, u / 4) == sympy.Rational(3, 16) * u**4
