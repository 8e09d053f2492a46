"""System parameters and operating-point derivation.

Two parameterisations are supported:

* :class:`PhysicalParams` -- laboratory quantities in SI units. All
  frequencies and rates are *angular* (rad/s).
* :class:`ReducedParams` -- the handful of rates and dimensionless numbers
  that the effective two-resonator model actually depends on.

:func:`derive_operating_point` turns the first into the linearisation point
(couplings, steady amplitudes, occupancies, reservoir moments) and
:func:`reduce` packs that into the second.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError, SingularOperatingPointError

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K
SPEED_OF_LIGHT = 299_792_458.0  # m / s
TWO_PI = 2.0 * math.pi

# Reference symmetric device; the defaults of every preset.
REF_WAVELENGTH = 1064e-9
REF_MECH_FREQ = TWO_PI * 947e3
REF_MASS = 145e-12
REF_LENGTH = 25e-3
REF_KAPPA = TWO_PI * 215e3
REF_GAMMA = TWO_PI * 140.0
REF_POWER = 0.3e-3


def wrap_angle(x):
    """Map an angle to [0, 2*pi)."""
    y = math.fmod(float(x), TWO_PI)
    if y < 0.0:
        y += TWO_PI
    # fmod can return exactly 2*pi after the shift for tiny negative input
    return 0.0 if y >= TWO_PI else y


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")


def _check_positive(name, value):
    _check_finite(name, value)
    if value <= 0.0:
        raise ParameterError(f"{name} must be > 0, got {value!r}")


def _check_nonnegative(name, value):
    _check_finite(name, value)
    if value < 0.0:
        raise ParameterError(f"{name} must be >= 0, got {value!r}")


def thermal_occupancy(mech_freq, temperature):
    """Bose-Einstein phonon number ``1 / (exp(hbar*Omega / (k_B*T)) - 1)``.

    Works elementwise on arrays. ``T == 0`` gives exactly 0.

    Parameters
    ----------
    mech_freq : float or ndarray
        Angular mechanical frequency (rad/s), > 0.
    temperature : float or ndarray
        Bath temperature (K), >= 0.
    """
    omega = np.asarray(mech_freq, dtype=float)
    temp = np.asarray(temperature, dtype=float)
    if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(temp))):
        raise ParameterError("thermal_occupancy: non-finite input")
    if np.any(omega <= 0.0):
        raise ParameterError("thermal_occupancy: mechanical frequency must be > 0")
    if np.any(temp < 0.0):
        raise ParameterError("thermal_occupancy: temperature must be >= 0")
    omega, temp = np.broadcast_arrays(omega, temp)
    out = np.zeros(omega.shape)
    hot = temp > 0.0
    with np.errstate(over="ignore"):
        out[hot] = 1.0 / np.expm1(HBAR * omega[hot] / (K_B * temp[hot]))
    return float(out) if out.ndim == 0 else out


def temperature_for_occupancy(mech_freq, occupancy):
    """Inverse of :func:`thermal_occupancy`."""
    if occupancy <= 0.0:
        return 0.0
    return HBAR * mech_freq / (K_B * math.log1p(1.0 / occupancy))


def reservoir_moments(r, phi=0.0):
    """Moments of the injected two-mode squeezed vacuum.

    Returns ``(N, M)`` with ``N = sinh(r)**2`` and
    ``M = exp(i*phi) * cosh(r) * sinh(r)``.
    """
    _check_nonnegative("squeezing", r)
    _check_finite("squeezing_phase", phi)
    sh = math.sinh(r)
    return sh * sh, complex(math.cos(phi), math.sin(phi)) * (math.cosh(r) * sh)


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory description of the doubly resonant cavity.

    All frequencies, rates and detunings are angular (rad/s); masses in kg,
    lengths in m, powers in W, temperatures in K. ``pump_phase`` and
    ``squeezing_phase`` are normalised to [0, 2*pi).
    """

    laser_freq1: float
    laser_freq2: float
    cavity_freq1: float
    cavity_freq2: float
    mech_freq1: float
    mech_freq2: float
    mass1: float
    mass2: float
    length1: float
    length2: float
    kappa1: float
    kappa2: float
    gamma1: float
    gamma2: float
    power1: float
    power2: float
    gain: float = 0.0
    pump_phase: float = 0.0
    squeezing: float = 0.0
    squeezing_phase: float = 0.0
    temperature1: float = 0.0
    temperature2: float = 0.0
    detuning1: float | None = None
    detuning2: float | None = None

    def __post_init__(self):
        for name in ("laser_freq", "mech_freq", "mass", "length", "kappa", "gamma"):
            for j in (1, 2):
                _check_positive(f"{name}{j}", getattr(self, f"{name}{j}"))
        for name in ("cavity_freq", "power", "temperature"):
            for j in (1, 2):
                _check_nonnegative(f"{name}{j}", getattr(self, f"{name}{j}"))
        _check_nonnegative("gain", self.gain)
        _check_nonnegative("squeezing", self.squeezing)
        for j in (1, 2):
            if getattr(self, f"detuning{j}") is None:
                # red-detuned operating point
                object.__setattr__(self, f"detuning{j}", getattr(self, f"mech_freq{j}"))
            _check_finite(f"detuning{j}", getattr(self, f"detuning{j}"))
        object.__setattr__(self, "pump_phase", wrap_angle(self.pump_phase))
        object.__setattr__(self, "squeezing_phase", wrap_angle(self.squeezing_phase))

    @property
    def beyond_threshold(self):
        """True when gain >= sqrt(kappa1*kappa2)/2 (simplified instability)."""
        return self.gain >= 0.5 * math.sqrt(self.kappa1 * self.kappa2)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @classmethod
    def symmetric(
        cls,
        *,
        wavelength=REF_WAVELENGTH,
        mech_freq=REF_MECH_FREQ,
        mass=REF_MASS,
        length=REF_LENGTH,
        kappa=REF_KAPPA,
        gamma=REF_GAMMA,
        power=REF_POWER,
        gain=0.0,
        pump_phase=0.0,
        squeezing=0.0,
        squeezing_phase=0.0,
        temperature=0.0,
        detuning=None,
    ):
        """Identical field-mirror pairs; defaults are the experimental values.

        The cavity resonance is placed at ``laser + detuning`` so that the
        bare detuning equals the requested effective one.
        """
        laser = TWO_PI * SPEED_OF_LIGHT / wavelength
        det = mech_freq if detuning is None else detuning
        return cls(
            laser_freq1=laser, laser_freq2=laser,
            cavity_freq1=laser + det, cavity_freq2=laser + det,
            mech_freq1=mech_freq, mech_freq2=mech_freq,
            mass1=mass, mass2=mass,
            length1=length, length2=length,
            kappa1=kappa, kappa2=kappa,
            gamma1=gamma, gamma2=gamma,
            power1=power, power2=power,
            gain=gain, pump_phase=pump_phase,
            squeezing=squeezing, squeezing_phase=squeezing_phase,
            temperature1=temperature, temperature2=temperature,
            detuning1=det, detuning2=det,
        )


@dataclass(frozen=True)
class ReducedParams:
    """Dimensional rates plus dimensionless knobs of the effective model.

    Attributes
    ----------
    kappa1, kappa2 : cavity decay rates (rad/s)
    gamma1, gamma2 : mechanical damping rates (rad/s)
    coupling1, coupling2 : many-photon couplings G_j (rad/s)
    gain : parametric gain Lambda (rad/s)
    pump_phase : theta (rad)
    squeezing : r
    squeezing_phase : phi (rad)
    n1, n2 : thermal phonon occupancies
    """

    kappa1: float
    kappa2: float
    gamma1: float
    gamma2: float
    coupling1: float
    coupling2: float
    gain: float = 0.0
    pump_phase: float = 0.0
    squeezing: float = 0.0
    squeezing_phase: float = 0.0
    n1: float = 0.0
    n2: float = 0.0

    def __post_init__(self):
        for name in ("kappa1", "kappa2", "gamma1", "gamma2"):
            _check_positive(name, getattr(self, name))
        for name in ("coupling1", "coupling2", "gain", "squeezing", "n1", "n2"):
            _check_nonnegative(name, getattr(self, name))
        object.__setattr__(self, "pump_phase", wrap_angle(self.pump_phase))
        object.__setattr__(self, "squeezing_phase", wrap_angle(self.squeezing_phase))

    @property
    def kappa(self):
        return math.sqrt(self.kappa1 * self.kappa2)

    @property
    def gamma(self):
        return math.sqrt(self.gamma1 * self.gamma2)

    @property
    def cooperativity(self):
        """4 G1 G2 / (sqrt(gamma1 gamma2) sqrt(kappa1 kappa2))."""
        return 4.0 * self.coupling1 * self.coupling2 / (self.gamma * self.kappa)

    @property
    def gain_ratio(self):
        return self.gain / self.kappa

    @property
    def coupling_ratio(self):
        return math.sqrt(self.coupling1 * self.coupling2) / self.kappa

    @property
    def beyond_threshold(self):
        return self.gain >= 0.5 * self.kappa

    @property
    def is_symmetric(self):
        return (
            self.kappa1 == self.kappa2
            and self.gamma1 == self.gamma2
            and self.coupling1 == self.coupling2
        )

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def as_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def symmetric(
        cls,
        *,
        cooperativity=None,
        coupling_ratio=None,
        gain_ratio=0.0,
        pump_phase=0.0,
        squeezing=0.0,
        squeezing_phase=0.0,
        occupancy=0.0,
        kappa=REF_KAPPA,
        gamma=REF_GAMMA,
    ):
        """Identical modes specified by C (or G/kappa) and Lambda/kappa.

        Exactly one of ``cooperativity`` and ``coupling_ratio`` may be given;
        with neither the coupling is zero.
        """
        if cooperativity is not None and coupling_ratio is not None:
            raise ParameterError("give cooperativity or coupling_ratio, not both")
        if coupling_ratio is not None:
            _check_nonnegative("coupling_ratio", coupling_ratio)
            g = coupling_ratio * kappa
        elif cooperativity is not None:
            _check_nonnegative("cooperativity", cooperativity)
            g = math.sqrt(cooperativity * gamma * kappa / 4.0)
        else:
            g = 0.0
        _check_nonnegative("gain_ratio", gain_ratio)
        return cls(
            kappa1=kappa, kappa2=kappa, gamma1=gamma, gamma2=gamma,
            coupling1=g, coupling2=g, gain=gain_ratio * kappa,
            pump_phase=pump_phase, squeezing=squeezing,
            squeezing_phase=squeezing_phase, n1=occupancy, n2=occupancy,
        )


@dataclass(frozen=True)
class OperatingPoint:
    """Linearisation point derived from :class:`PhysicalParams`.

    Cavity amplitudes are stored after absorbing the drive phases, so
    ``cavity_amp`` is real and non-negative; ``drive_phase`` records the
    laser phase that achieves this.
    """

    params: PhysicalParams
    g0: tuple[float, float]
    drive: tuple[float, float]
    cavity_amp: tuple[complex, complex]
    drive_phase: tuple[float, float]
    mirror_disp: tuple[complex, complex]
    coupling: tuple[float, float]
    cooperativity: float
    occupancy: tuple[float, float]
    n_res: float
    m_res: complex
    detuning_residual: tuple[float, float]
    warnings: tuple[str, ...] = field(default=())

    @property
    def quality_factors(self):
        p = self.params
        return (p.mech_freq1 / p.gamma1, p.mech_freq2 / p.gamma2)

    def reduced(self):
        p = self.params
        return ReducedParams(
            kappa1=p.kappa1, kappa2=p.kappa2, gamma1=p.gamma1, gamma2=p.gamma2,
            coupling1=self.coupling[0], coupling2=self.coupling[1],
            gain=p.gain, pump_phase=p.pump_phase,
            squeezing=p.squeezing, squeezing_phase=p.squeezing_phase,
            n1=self.occupancy[0], n2=self.occupancy[1],
        )


def single_photon_coupling(cavity_freq, length, mass, mech_freq):
    """g0 = (nu/L) * sqrt(hbar / (2 m Omega))."""
    return (cavity_freq / length) * math.sqrt(HBAR / (2.0 * mass * mech_freq))


def drive_amplitude(kappa, power, laser_freq):
    """E = sqrt(kappa P / (hbar omega))."""
    return math.sqrt(kappa * power / (HBAR * laser_freq))


def derive_operating_point(p: PhysicalParams) -> OperatingPoint:
    """Steady state of the driven system at the declared effective detunings.

    The effective detunings are taken as given (no self-consistent
    iteration); the mismatch ``(nu - omega) - Delta - 2 g Re(d)`` is
    returned in ``detuning_residual`` for inspection.
    """
    g = (
        single_photon_coupling(p.cavity_freq1, p.length1, p.mass1, p.mech_freq1),
        single_photon_coupling(p.cavity_freq2, p.length2, p.mass2, p.mech_freq2),
    )
    e = (
        drive_amplitude(p.kappa1, p.power1, p.laser_freq1),
        drive_amplitude(p.kappa2, p.power2, p.laser_freq2),
    )
    d1, d2 = p.detuning1, p.detuning2
    lam2 = 4.0 * p.gain**2
    f1 = complex(p.kappa1, 2.0 * d1)
    f2 = complex(p.kappa2, 2.0 * d2)
    den1 = f1 * f2.conjugate() - lam2
    den2 = f2 * f1.conjugate() - lam2
    scale = abs(f1) * abs(f2) + lam2
    if abs(den1) <= 1e-14 * scale or abs(den2) <= 1e-14 * scale:
        raise SingularOperatingPointError(
            "steady-state denominator vanishes: "
            "(kappa1 + 2i Delta1)(kappa2 - 2i Delta2) == 4 Lambda^2"
        )
    raw1 = 2.0 * e[0] * f2.conjugate() / den1
    raw2 = 2.0 * e[1] * f1.conjugate() / den2
    amp = (abs(raw1), abs(raw2))
    phases = (
        wrap_angle(-math.atan2(raw1.imag, raw1.real)) if amp[0] else 0.0,
        wrap_angle(-math.atan2(raw2.imag, raw2.real)) if amp[1] else 0.0,
    )
    disp = (
        2j * g[0] * amp[0] ** 2 / complex(p.gamma1, 2.0 * p.mech_freq1),
        2j * g[1] * amp[1] ** 2 / complex(p.gamma2, 2.0 * p.mech_freq2),
    )
    coupling = (g[0] * amp[0], g[1] * amp[1])
    coop = 4.0 * coupling[0] * coupling[1] / (
        math.sqrt(p.gamma1 * p.gamma2) * math.sqrt(p.kappa1 * p.kappa2)
    )
    occ = (
        thermal_occupancy(p.mech_freq1, p.temperature1),
        thermal_occupancy(p.mech_freq2, p.temperature2),
    )
    n_res, m_res = reservoir_moments(p.squeezing, p.squeezing_phase)
    residual = (
        (p.cavity_freq1 - p.laser_freq1) - d1 - 2.0 * g[0] * disp[0].real,
        (p.cavity_freq2 - p.laser_freq2) - d2 - 2.0 * g[1] * disp[1].real,
    )
    warnings = []
    if p.beyond_threshold:
        warnings.append("gain >= sqrt(kappa1*kappa2)/2: beyond the simplified stability threshold")
    return OperatingPoint(
        params=p, g0=g, drive=e,
        cavity_amp=(complex(amp[0]), complex(amp[1])), drive_phase=phases,
        mirror_disp=disp, coupling=coupling, cooperativity=coop,
        occupancy=occ, n_res=n_res, m_res=m_res,
        detuning_residual=residual, warnings=tuple(warnings),
    )


def reduce(p: PhysicalParams) -> ReducedParams:
    """Reduced parameterisation of a physical parameter set."""
    return derive_operating_point(p).reduced()
