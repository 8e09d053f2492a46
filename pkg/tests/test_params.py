import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mechent.exceptions import ParameterError, SingularOperatingPointError
from mechent.params import (
    HBAR,
    K_B,
    REF_KAPPA,
    REF_MECH_FREQ,
    PhysicalParams,
    ReducedParams,
    derive_operating_point,
    reduce,
    reservoir_moments,
    temperature_for_occupancy,
    thermal_occupancy,
    wrap_angle,
)
from oracles import steady_amplitudes


class TestThermalOccupancy:
    def test_reference_temperature(self):
        n = thermal_occupancy(REF_MECH_FREQ, 42e-6)
        assert n == pytest.approx(0.5, rel=0.05)

    @pytest.mark.parametrize("omega", [1.0, REF_MECH_FREQ, 1e9])
    def test_zero_temperature(self, omega):
        assert thermal_occupancy(omega, 0.0) == 0.0

    def test_ln2_gives_one(self):
        omega = REF_MECH_FREQ
        t = HBAR * omega / (K_B * math.log(2.0))
        assert thermal_occupancy(omega, t) == pytest.approx(1.0, rel=1e-12)

    def test_monotone(self):
        t = np.linspace(1e-6, 1e-3, 50)
        n = thermal_occupancy(REF_MECH_FREQ, t)
        assert np.all(np.diff(n) > 0)
        w = np.linspace(1e5, 1e7, 50)
        n = thermal_occupancy(w, 1e-4)
        assert np.all(np.diff(n) < 0)

    @given(st.floats(1e-3, 50.0))
    def test_inverse(self, n):
        t = temperature_for_occupancy(REF_MECH_FREQ, n)
        assert thermal_occupancy(REF_MECH_FREQ, t) == pytest.approx(n, rel=1e-9)

    @pytest.mark.parametrize("omega, t", [(0.0, 1.0), (1.0, -1.0), (float("nan"), 1.0)])
    def test_rejects_bad_input(self, omega, t):
        with pytest.raises(ParameterError):
            thermal_occupancy(omega, t)


class TestReservoirMoments:
    @pytest.mark.parametrize("phi", [0.0, 1.0, math.pi])
    def test_vacuum(self, phi):
        assert reservoir_moments(0.0, phi) == (0.0, 0.0)

    def test_reference_values(self):
        n, m = reservoir_moments(1.0, 0.0)
        assert n == pytest.approx(1.3811, abs=1e-4)
        assert m.real == pytest.approx(1.8134, abs=1e-4)
        assert m.imag == 0.0

    @given(st.floats(0.0, 3.0), st.floats(-10.0, 10.0))
    def test_pure_state_identity(self, r, phi):
        n, m = reservoir_moments(r, phi)
        assert abs(abs(m) ** 2 - n * (n + 1)) <= 1e-12 * max(1.0, n * (n + 1))

    def test_negative_squeezing_rejected(self):
        with pytest.raises(ParameterError):
            reservoir_moments(-0.1)


class TestOperatingPoint:
    def test_reference_coupling(self):
        op = derive_operating_point(PhysicalParams.symmetric())
        assert op.coupling[0] / REF_KAPPA == pytest.approx(0.1, rel=0.1)
        assert op.cooperativity == pytest.approx(62.5, rel=0.1)

    def test_no_drive(self):
        op = derive_operating_point(PhysicalParams.symmetric(power=0.0))
        assert op.cavity_amp == (0, 0)
        assert op.coupling == (0.0, 0.0)
        assert op.cooperativity == 0.0

    @pytest.mark.parametrize("gain_ratio, phase", [(0.3, 0.0), (0.26, 1.1), (0.45, 4.0)])
    def test_amplitude_matches_linear_solve(self, gain_ratio, phase):
        p = PhysicalParams.symmetric(gain=gain_ratio * REF_KAPPA, pump_phase=phase)
        op = derive_operating_point(p)
        ref = steady_amplitudes(p)
        assert abs(op.cavity_amp[0]) == pytest.approx(ref[0], rel=1e-12)
        assert abs(op.cavity_amp[1]) == pytest.approx(ref[1], rel=1e-12)

    def test_asymmetric_amplitudes(self):
        p = PhysicalParams.symmetric(gain=0.2 * REF_KAPPA).replace(
            kappa2=0.7 * REF_KAPPA, power2=0.5e-3, detuning2=0.8 * REF_MECH_FREQ)
        op = derive_operating_point(p)
        ref = steady_amplitudes(p)
        np.testing.assert_allclose(np.abs(op.cavity_amp), ref, rtol=1e-12)

    def test_amplitudes_real_positive(self):
        op = derive_operating_point(PhysicalParams.symmetric(gain=0.3 * REF_KAPPA))
        for c in op.cavity_amp:
            assert c.imag == 0.0 and c.real > 0

    def test_coupling_scales_with_sqrt_power(self):
        g = [derive_operating_point(PhysicalParams.symmetric(power=pw)).coupling[0]
             for pw in (0.1e-3, 0.4e-3)]
        assert g[1] / g[0] == pytest.approx(2.0, rel=1e-12)

    def test_threshold_warning(self):
        op = derive_operating_point(PhysicalParams.symmetric(gain=0.6 * REF_KAPPA))
        assert op.warnings

    def test_singular_denominator(self):
        # kappa^2 + 4 Delta^2 == 4 Lambda^2 makes the steady state singular
        k, d = REF_KAPPA, REF_KAPPA
        p = PhysicalParams.symmetric(detuning=d, gain=0.5 * math.hypot(k, 2 * d))
        with pytest.raises(SingularOperatingPointError):
            derive_operating_point(p)

    def test_red_detuned_default(self):
        p = PhysicalParams.symmetric()
        assert p.detuning1 == p.mech_freq1

    def test_moments_consistent(self):
        op = derive_operating_point(PhysicalParams.symmetric(squeezing=0.7, squeezing_phase=0.3))
        assert abs(op.m_res) ** 2 == pytest.approx(op.n_res * (op.n_res + 1), rel=1e-12)


class TestReduce:
    def test_fig3_point(self):
        p = PhysicalParams.symmetric(gain=0.26 * REF_KAPPA)
        r = reduce(p)
        assert r.gain_ratio == pytest.approx(0.26)
        assert r.cooperativity == pytest.approx(62.5, rel=0.1)

    def test_zero_power(self):
        assert reduce(PhysicalParams.symmetric(power=0.0)).cooperativity == 0.0

    def test_symmetric_occupancies(self):
        r = reduce(PhysicalParams.symmetric(temperature=42e-6))
        assert r.n1 == r.n2 > 0

    def test_idempotent_on_reduced_fields(self):
        p = PhysicalParams.symmetric(gain=0.2 * REF_KAPPA, temperature=1e-4, squeezing=0.5)
        r1 = reduce(p)
        r2 = derive_operating_point(p).reduced()
        assert r1 == r2


class TestValidation:
    @pytest.mark.parametrize("field", ["kappa1", "gamma2"])
    def test_positive_rates(self, field):
        kw = dict(kappa1=1.0, kappa2=1.0, gamma1=1.0, gamma2=1.0, coupling1=0.0, coupling2=0.0)
        kw[field] = 0.0
        with pytest.raises(ParameterError):
            ReducedParams(**kw)

    def test_negative_occupancy(self):
        with pytest.raises(ParameterError):
            ReducedParams.symmetric(occupancy=-1.0)

    def test_both_couplings_rejected(self):
        with pytest.raises(ParameterError):
            ReducedParams.symmetric(cooperativity=1.0, coupling_ratio=0.1)

    @given(st.floats(-100.0, 100.0))
    def test_angles_wrapped(self, x):
        p = ReducedParams.symmetric(pump_phase=x, squeezing_phase=-x)
        assert 0.0 <= p.pump_phase < 2 * math.pi
        assert 0.0 <= p.squeezing_phase < 2 * math.pi

    def test_wrap_tiny_negative(self):
        assert wrap_angle(-1e-300) == 0.0

    def test_cooperativity_roundtrip(self):
        assert ReducedParams.symmetric(cooperativity=62.5).cooperativity == pytest.approx(62.5)

    @settings(max_examples=30)
    @given(st.floats(0.0, 0.49))
    def test_threshold_flag(self, g):
        assert not ReducedParams.symmetric(gain_ratio=g).beyond_threshold
