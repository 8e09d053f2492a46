import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import KAPPA, random_reduced, sym_point
from mechent.effective import (
    build_diffusion,
    build_drift,
    build_effective_model,
    diffusion_coefficients,
    dumps_matrices,
    model_arrays,
)
from mechent.exceptions import SingularEliminationError
from mechent.params import PhysicalParams, ReducedParams, derive_operating_point
from oracles import quadrature_matrices


def test_no_gain_limit():
    p = sym_point(gain_ratio=0.0)
    m = build_effective_model(p)
    assert m.chi == 0
    assert m.optical1 == pytest.approx(4 * p.coupling1**2 / p.kappa1, rel=1e-14)
    assert m.optical1 / p.gamma1 == pytest.approx(p.cooperativity, rel=1e-12)


def test_phase_factorisation():
    m0 = build_effective_model(sym_point(pump_phase=0.4))
    m1 = build_effective_model(sym_point(pump_phase=0.4 + math.pi / 3))
    assert abs(m1.chi) == pytest.approx(abs(m0.chi), rel=1e-14)
    shift = np.angle(m1.chi / m0.chi)
    assert shift == pytest.approx(math.pi / 3, abs=1e-12)


@pytest.mark.parametrize("theta", [0.0, math.pi / 12])
@pytest.mark.parametrize("phi", [0.0, 0.9])
def test_matrices_match_reelimination(theta, phi):
    p = ReducedParams.symmetric(coupling_ratio=0.1, gain_ratio=0.26, pump_phase=theta,
                                squeezing=1.0, squeezing_phase=phi, occupancy=0.5)
    m = build_effective_model(p)
    drift, diff = quadrature_matrices(p)
    a = build_drift(m)
    f = build_diffusion(m)
    np.testing.assert_allclose(a, drift, atol=1e-12 * np.abs(drift).max())
    np.testing.assert_allclose(f, diff, atol=1e-12 * np.abs(diff).max())


def test_asymmetric_matches_reelimination(rng):
    for _ in range(20):
        p = random_reduced(rng)
        m = build_effective_model(p)
        drift, diff = quadrature_matrices(p)
        np.testing.assert_allclose(build_drift(m), drift, atol=1e-11 * np.abs(drift).max())
        np.testing.assert_allclose(build_diffusion(m), diff, atol=1e-11 * np.abs(diff).max())


def test_printed_f14_variant_differs():
    m = build_effective_model(sym_point(pump_phase=math.pi / 12))
    _, diff = quadrature_matrices(sym_point(pump_phase=math.pi / 12))
    printed = build_diffusion(m, printed_f14=True, check=False)
    assert abs(printed[0, 3] - diff[0, 3]) > 1e-3 * np.abs(diff).max()
    # at theta = 0 the two variants coincide
    m0 = build_effective_model(sym_point())
    np.testing.assert_allclose(build_diffusion(m0, printed_f14=True), build_diffusion(m0))


def test_operating_point_input():
    op = derive_operating_point(PhysicalParams.symmetric(gain=0.26 * KAPPA))
    assert build_effective_model(op) == build_effective_model(op.reduced())


def test_singular_elimination():
    with pytest.raises(SingularEliminationError):
        build_effective_model(sym_point(gain_ratio=0.5))


def test_beyond_threshold_tag():
    assert build_effective_model(sym_point(gain_ratio=0.6)).beyond_threshold
    assert not build_effective_model(sym_point()).beyond_threshold


class TestDrift:
    def test_decoupled(self):
        m = build_effective_model(sym_point(gain_ratio=0.0))
        np.testing.assert_array_equal(build_drift(m), np.diag([-m.ups1 / 2] * 2 + [-m.ups2 / 2] * 2))

    def test_theta_zero_blocks(self):
        m = build_effective_model(sym_point())
        b = build_drift(m)
        np.testing.assert_allclose(b[:2, 2:], np.diag([abs(m.chi), -abs(m.chi)]), atol=0)

    def test_theta_half_pi_blocks(self):
        m = build_effective_model(sym_point(pump_phase=math.pi / 2))
        b = build_drift(m)
        x = abs(m.chi)
        assert b[0, 3] == pytest.approx(x) and b[1, 2] == pytest.approx(x)
        assert abs(b[0, 2]) < 1e-15 * x and abs(b[1, 3]) < 1e-15 * x

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_spectrum(self, seed):
        m = build_effective_model(random_reduced(np.random.default_rng(seed)))
        ev = np.sort_complex(np.linalg.eigvals(build_drift(m)))
        root = np.sqrt(complex((m.ups1 - m.ups2) ** 2 / 4 + 4 * abs(m.chi) ** 2))
        ref = np.array([-(m.ups1 + m.ups2) / 4 + s * root / 2 for s in (-1, -1, 1, 1)])
        np.testing.assert_allclose(ev, np.sort_complex(ref), atol=1e-9 * m.ups1)

    @given(st.floats(0, 2 * math.pi))
    def test_periodic_in_theta(self, theta):
        a = build_drift(build_effective_model(sym_point(pump_phase=theta)))
        b = build_drift(build_effective_model(sym_point(pump_phase=theta + 2 * math.pi)))
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12 * np.abs(a).max())


class TestDiffusion:
    def test_bare_mirrors(self):
        p = ReducedParams.symmetric(occupancy=2.0)
        f = build_diffusion(build_effective_model(p))
        np.testing.assert_allclose(f, np.diag([p.gamma1 * 2.5] * 4))

    def test_no_cross_channel(self):
        f = build_diffusion(build_effective_model(sym_point(gain_ratio=0.0, squeezing=0.0)))
        assert f[0, 2] == 0.0 and f[0, 3] == 0.0

    def test_sparsity_and_symmetry(self, point):
        f = build_diffusion(build_effective_model(point))
        assert f[0, 1] == f[2, 3] == 0.0
        np.testing.assert_array_equal(f, f.T)
        assert f[1, 3] == -f[0, 2]

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_real_psd(self, seed):
        m = build_effective_model(random_reduced(np.random.default_rng(seed)))
        coeffs = diffusion_coefficients(m)
        assert all(isinstance(c, float) for c in coeffs)
        f = build_diffusion(m)
        assert np.linalg.eigvalsh(f)[0] >= -1e-12 * np.abs(f).max()


def test_model_arrays_broadcast():
    g = np.linspace(0, 0.4, 5) * KAPPA
    p = sym_point()
    c = model_arrays(p.kappa1, p.kappa2, p.gamma1, p.gamma2, p.coupling1, p.coupling2, g, 0.0)
    for k, gk in enumerate(g):
        m = build_effective_model(p.replace(gain=gk))
        assert c["ups1"][k] == pytest.approx(m.ups1, rel=1e-15)


def test_json_dump(point):
    d = json.loads(dumps_matrices(build_effective_model(point)))
    assert d["drift"]["ordering"] == ["Q1", "P1", "Q2", "P2"]
    assert np.array(d["diffusion"]["rows"]).shape == (4, 4)
