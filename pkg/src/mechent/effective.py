"""Effective two-resonator model after eliminating the cavity modes.

Quadratures are ``Q = (d^dag + d)/sqrt(2)``, ``P = i(d^dag - d)/sqrt(2)``,
ordered ``(Q1, P1, Q2, P2)``; with this normalisation the vacuum variance
is 1/2. Every matrix in the package uses this convention.

The coefficient formulas are written elementwise so the same code serves
single points (:class:`EffectiveModel`) and whole sweep grids
(:func:`model_arrays`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import PhysicalityError, SingularEliminationError
from .params import OperatingPoint, ReducedParams, reservoir_moments

QUADRATURE_LABELS = ("Q1", "P1", "Q2", "P2")


def model_arrays(kappa1, kappa2, gamma1, gamma2, coupling1, coupling2, gain, pump_phase):
    """Elimination coefficients, elementwise over broadcastable inputs.

    Returns a dict with ``denom`` (K = kappa1 kappa2/4 - gain^2),
    ``optical1/2`` (Gamma_j), ``ups1/2`` (Upsilon_j), ``chi`` and the noise
    weights ``a1, b1, a2, b2``. ``denom`` must be non-zero.
    """
    denom = kappa1 * kappa2 / 4.0 - gain**2
    phase = np.exp(1j * np.asarray(pump_phase))
    opt1 = coupling1**2 * kappa2 / denom
    opt2 = coupling2**2 * kappa1 / denom
    return {
        "denom": denom,
        "optical1": opt1,
        "optical2": opt2,
        "ups1": gamma1 + opt1,
        "ups2": gamma2 + opt2,
        "chi": (coupling1 * coupling2 / denom) * gain * phase,
        "a1": 1j * coupling1 * kappa2 / (2.0 * denom),
        "b1": 1j * coupling1 * gain * phase / denom,
        "a2": 1j * coupling2 * kappa1 / (2.0 * denom),
        "b2": 1j * coupling2 * gain * phase / denom,
    }


def diffusion_entries(a1, b1, a2, b2, kappa1, kappa2, gamma1, gamma2, n1, n2,
                      n_res, m_res, printed_f14=False):
    """The four independent diffusion entries (F11, F33, F13, F14).

    Elementwise. With ``printed_f14=True`` the b1*b2 terms of F14 take the
    opposite sign; that variant disagrees with the noise correlators
    whenever sin(2 theta) != 0 and exists only for comparison.
    """
    conj = np.conj
    sk = np.sqrt(kappa1 * kappa2)
    two_n = 2.0 * n_res + 1.0
    f11 = 0.5 * (
        (np.abs(a1) ** 2 * kappa1 + np.abs(b1) ** 2 * kappa2) * two_n
        + 2.0 * (conj(b1) * a1 * m_res + conj(a1) * b1 * conj(m_res)) * sk
        + gamma1 * (2.0 * n1 + 1.0)
    )
    f33 = 0.5 * (
        (np.abs(a2) ** 2 * kappa2 + np.abs(b2) ** 2 * kappa1) * two_n
        + 2.0 * (conj(b2) * a2 * m_res + conj(a2) * b2 * conj(m_res)) * sk
        + gamma2 * (2.0 * n2 + 1.0)
    )
    f13 = 0.25 * (
        ((conj(b2) * conj(a1) + b2 * a1) * kappa1
         + (conj(b1) * conj(a2) + b1 * a2) * kappa2) * two_n
        + 2.0 * ((conj(b1) * conj(b2) + a1 * a2) * m_res
                 + (b1 * b2 + conj(a1) * conj(a2)) * conj(m_res)) * sk
    )
    bb = 1.0 if printed_f14 else -1.0
    f14 = 0.25j * (
        ((conj(b2) * conj(a1) - b2 * a1) * kappa1
         + (conj(b1) * conj(a2) - b1 * a2) * kappa2) * two_n
        - 2.0 * ((bb * conj(b1) * conj(b2) + a1 * a2) * m_res
                 - (bb * b1 * b2 + conj(a1) * conj(a2)) * conj(m_res)) * sk
    )
    return f11, f33, f13, f14


def drift_stack(ups1, ups2, chi):
    """(..., 4, 4) drift matrices from broadcastable Upsilon_j and chi."""
    ups1, ups2, chi = np.broadcast_arrays(
        np.asarray(ups1, float), np.asarray(ups2, float), np.asarray(chi, complex)
    )
    c, s = chi.real, chi.imag
    out = np.zeros(ups1.shape + (4, 4))
    out[..., 0, 0] = out[..., 1, 1] = -0.5 * ups1
    out[..., 2, 2] = out[..., 3, 3] = -0.5 * ups2
    out[..., 0, 2] = out[..., 2, 0] = c
    out[..., 0, 3] = out[..., 3, 0] = s
    out[..., 1, 2] = out[..., 2, 1] = s
    out[..., 1, 3] = out[..., 3, 1] = -c
    return out


def diffusion_stack(f11, f33, f13, f14):
    """(..., 4, 4) diffusion matrices with the fixed sparsity pattern."""
    f11, f33, f13, f14 = np.broadcast_arrays(*(np.asarray(x, float) for x in (f11, f33, f13, f14)))
    out = np.zeros(f11.shape + (4, 4))
    out[..., 0, 0] = out[..., 1, 1] = f11
    out[..., 2, 2] = out[..., 3, 3] = f33
    out[..., 0, 2] = out[..., 2, 0] = f13
    out[..., 0, 3] = out[..., 3, 0] = f14
    out[..., 1, 2] = out[..., 2, 1] = f14
    out[..., 1, 3] = out[..., 3, 1] = -f13
    return out


@dataclass(frozen=True)
class EffectiveModel:
    """Eliminated two-resonator model.

    ``chi = (G1 G2 / K) * gain * exp(i theta)``; ``beyond_threshold`` is set
    when ``K < 0``.
    """

    ups1: float
    ups2: float
    optical1: float
    optical2: float
    denom: float
    chi: complex
    a1: complex
    b1: complex
    a2: complex
    b2: complex
    kappa1: float
    kappa2: float
    gamma1: float
    gamma2: float
    pump_phase: float
    squeezing_phase: float
    n1: float
    n2: float
    n_res: float
    m_res: complex
    symmetric: bool = False
    beyond_threshold: bool = False

    @property
    def chi_abs(self):
        return abs(self.chi)

    @property
    def kappa_bar(self):
        return float(np.sqrt(self.kappa1 * self.kappa2))


def build_effective_model(params: ReducedParams | OperatingPoint) -> EffectiveModel:
    """Assemble the effective model from either parameterisation."""
    if isinstance(params, OperatingPoint):
        params = params.reduced()
    p = params
    denom = p.kappa1 * p.kappa2 / 4.0 - p.gain**2
    if denom == 0.0 or abs(denom) <= 1e-15 * p.kappa1 * p.kappa2:
        raise SingularEliminationError(
            f"kappa1*kappa2/4 - gain^2 = {denom!r}: elimination is singular"
        )
    c = model_arrays(p.kappa1, p.kappa2, p.gamma1, p.gamma2,
                     p.coupling1, p.coupling2, p.gain, p.pump_phase)
    n_res, m_res = reservoir_moments(p.squeezing, p.squeezing_phase)
    return EffectiveModel(
        ups1=float(c["ups1"]), ups2=float(c["ups2"]),
        optical1=float(c["optical1"]), optical2=float(c["optical2"]),
        denom=float(denom), chi=complex(c["chi"]),
        a1=complex(c["a1"]), b1=complex(c["b1"]),
        a2=complex(c["a2"]), b2=complex(c["b2"]),
        kappa1=p.kappa1, kappa2=p.kappa2, gamma1=p.gamma1, gamma2=p.gamma2,
        pump_phase=p.pump_phase, squeezing_phase=p.squeezing_phase,
        n1=p.n1, n2=p.n2, n_res=n_res, m_res=m_res,
        symmetric=p.is_symmetric, beyond_threshold=denom < 0.0,
    )


def build_drift(m: EffectiveModel) -> np.ndarray:
    """4x4 drift matrix in (Q1, P1, Q2, P2) ordering."""
    return drift_stack(m.ups1, m.ups2, m.chi)


def diffusion_coefficients(m: EffectiveModel, printed_f14=False):
    """(F11, F33, F13, F14) as real floats.

    The closed-form combinations are conjugate-paired, so any imaginary part
    is rounding; anything larger than that is treated as an internal error.
    """
    vals = diffusion_entries(m.a1, m.b1, m.a2, m.b2, m.kappa1, m.kappa2,
                             m.gamma1, m.gamma2, m.n1, m.n2, m.n_res, m.m_res,
                             printed_f14=printed_f14)
    scale = max(abs(v) for v in vals) or 1.0
    if max(abs(complex(v).imag) for v in vals) > 1e-9 * scale:
        raise PhysicalityError("diffusion entries are not real", entries=vals)
    return tuple(float(complex(v).real) for v in vals)


def build_diffusion(m: EffectiveModel, printed_f14=False, check=True) -> np.ndarray:
    """4x4 diffusion matrix; raises if it fails to be positive semidefinite."""
    out = diffusion_stack(*diffusion_coefficients(m, printed_f14=printed_f14))
    if check:
        lo = np.linalg.eigvalsh(out)[0]
        if lo < -1e-12 * max(1.0, np.abs(out).max()):
            raise PhysicalityError("diffusion matrix is not positive semidefinite",
                                   min_eigenvalue=float(lo))
    return out


def matrix_to_json(mat, labels=QUADRATURE_LABELS, name="matrix"):
    """Labelled, row-major JSON-ready dict for a square real matrix."""
    mat = np.asarray(mat, dtype=float)
    return {"name": name, "ordering": list(labels), "rows": mat.tolist()}


def dumps_matrices(m: EffectiveModel, **kw) -> str:
    return json.dumps(
        {
            "drift": matrix_to_json(build_drift(m), name="drift"),
            "diffusion": matrix_to_json(build_diffusion(m), name="diffusion"),
        },
        **kw,
    )
