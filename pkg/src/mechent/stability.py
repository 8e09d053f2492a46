"""Routh-Hurwitz and eigenvalue stability of the effective model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .effective import EffectiveModel, build_drift
from .exceptions import NumericalDegeneracyError

MARGINAL_RTOL = 1e-12


def hurwitz_arrays(ups1, ups2, chi_abs2, kappa_bar=1.0, rtol=MARGINAL_RTOL):
    """Vectorised Hurwitz quantities.

    Returns ``(h1, h2, h3, stable, margin)`` where ``h*`` are raw (in units
    of rate^2, rate^3 and rate^6), ``margin`` is the minimum of
    ``h1/kbar^2, h2/kbar^3, h3/kbar^6`` and ``stable`` requires each h_i to be
    positive *and* not a rounding-level cancellation of its constituent terms.
    """
    ups1 = np.asarray(ups1, float)
    ups2 = np.asarray(ups2, float)
    chi_abs2 = np.asarray(chi_abs2, float)
    s1 = ups1 + ups2
    prod = ups1 * ups2
    h1 = prod / 4.0 - chi_abs2
    q = ups1**2 + ups2**2 + 3.0 * prod - 4.0 * chi_abs2
    h2 = s1 * q / 4.0
    w = h2 - s1 * h1
    h3 = s1 * w * h1

    m1 = np.abs(h1) <= rtol * np.maximum(np.abs(prod) / 4.0, chi_abs2)
    ms = np.abs(s1) <= rtol * (np.abs(ups1) + np.abs(ups2))
    mq = np.abs(q) <= rtol * (ups1**2 + ups2**2 + 3.0 * np.abs(prod) + 4.0 * chi_abs2)
    mw = np.abs(w) <= rtol * (np.abs(h2) + np.abs(s1 * h1))
    marginal = m1 | ms | mq | mw
    stable = (h1 > 0) & (h2 > 0) & (h3 > 0) & ~marginal
    kb = np.asarray(kappa_bar, float)
    margin = np.minimum(np.minimum(h1 / kb**2, h2 / kb**3), h3 / kb**6)
    return h1, h2, h3, stable, margin


@dataclass(frozen=True)
class EigenvalueStability:
    real_parts: tuple[float, float, float, float]
    stable: bool

    @property
    def max_real(self):
        return max(self.real_parts)


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of the Routh-Hurwitz test.

    ``h`` holds the raw conditions; ``h_normalized`` the same divided by
    ``kbar**2``, ``kbar**3`` and ``kbar**6`` with ``kbar = sqrt(kappa1 kappa2)``.
    """

    coefficients: tuple[float, float, float, float]
    h: tuple[float, float, float]
    h_normalized: tuple[float, float, float]
    stable: bool
    margin: float
    eigen_real: tuple[float, float, float, float]
    eigen_stable: bool

    def as_dict(self):
        return {
            "coefficients": list(self.coefficients),
            "h": list(self.h),
            "h_normalized": list(self.h_normalized),
            "stable": self.stable,
            "margin": self.margin,
            "eigenvalue_real_parts": list(self.eigen_real),
            "eigenvalue_stable": self.eigen_stable,
        }


def characteristic_coefficients(ups1, ups2, chi_abs2):
    """(s1, s2, s3, s4) of ``lambda^4 + s1 lambda^3 + ... + s4``."""
    s1 = ups1 + ups2
    p = ups1 * ups2 / 4.0 - chi_abs2
    s2 = (ups1**2 + ups2**2 + 4.0 * ups1 * ups2 - 8.0 * chi_abs2) / 4.0
    return s1, s2, s1 * p, p * p


def eigenvalue_stability(drift) -> EigenvalueStability:
    """Real parts of the drift spectrum; stable iff all are negative."""
    drift = np.asarray(drift, dtype=float)
    if drift.shape != (4, 4) or not np.all(np.isfinite(drift)):
        raise NumericalDegeneracyError("drift must be a finite 4x4 matrix")
    try:
        ev = np.linalg.eigvals(drift)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalDegeneracyError(f"eigenvalue solver failed: {exc}") from exc
    re = tuple(sorted(float(x) for x in ev.real))
    return EigenvalueStability(real_parts=re, stable=max(re) < 0.0)


def routh_hurwitz(m: EffectiveModel) -> StabilityReport:
    chi2 = abs(m.chi) ** 2
    kb = m.kappa_bar
    h1, h2, h3, stable, margin = hurwitz_arrays(m.ups1, m.ups2, chi2, kb)
    eig = eigenvalue_stability(build_drift(m))
    return StabilityReport(
        coefficients=tuple(float(x) for x in characteristic_coefficients(m.ups1, m.ups2, chi2)),
        h=(float(h1), float(h2), float(h3)),
        h_normalized=(float(h1) / kb**2, float(h2) / kb**3, float(h3) / kb**6),
        stable=bool(stable),
        margin=float(margin),
        eigen_real=eig.real_parts,
        eigen_stable=eig.stable,
    )
