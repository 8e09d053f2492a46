"""Steady-state covariance of the mechanical modes.

Three routes to the same matrix:

``solve_lyapunov_generic``
    vectorised Lyapunov equation (authoritative; works for any drift),
``solve_covariance_cramer``
    Cramer's rule on the 4-unknown system implied by the block structure,
``symmetric_closed_form``
    closed determinants for identical modes at theta = phi = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .effective import EffectiveModel
from .exceptions import (
    NearMarginalError,
    NumericalDegeneracyError,
    ParameterError,
    UnstableSystemError,
)

METHODS = ("generic-lyapunov", "cramer", "symmetric-closed-form")


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """4x4 symmetric covariance in (Q1, P1, Q2, P2) ordering (vacuum = 1/2)."""

    matrix: np.ndarray
    method: str

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.shape != (4, 4):
            raise ValueError("covariance must be 4x4")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def elements(self):
        """The four independent entries (R11, R13, R14, R33)."""
        r = self.matrix
        return r[0, 0], r[0, 2], r[0, 3], r[2, 2]

    def as_dict(self):
        return {"method": self.method, "ordering": ["Q1", "P1", "Q2", "P2"],
                "rows": self.matrix.tolist()}


def lyapunov_residual(drift, diffusion, cov):
    """Relative residual ``||B R + R B^T + F||_inf / ||F||_inf``."""
    return float(_kernels.lyapunov_residual_batch(
        np.asarray(drift, float)[None], np.asarray(diffusion, float)[None],
        np.asarray(cov, float)[None])[0])


def structure_deviation(cov):
    """Largest departure from the block pattern, relative to max |R|.

    The pattern is R22 = R11, R44 = R33, R12 = R34 = 0, R24 = -R13,
    R23 = R14.
    """
    r = np.asarray(cov, float)
    dev = max(
        abs(r[1, 1] - r[0, 0]), abs(r[3, 3] - r[2, 2]), abs(r[0, 1]), abs(r[2, 3]),
        abs(r[1, 3] + r[0, 2]), abs(r[1, 2] - r[0, 3]),
    )
    return dev / np.abs(r).max()


def from_elements(r11, r13, r14, r33):
    """Full 4x4 from the four independent entries."""
    return np.array([
        [r11, 0.0, r13, r14],
        [0.0, r11, r14, -r13],
        [r13, r14, r33, 0.0],
        [r14, -r13, 0.0, r33],
    ])


def solve_lyapunov_generic(drift, diffusion) -> CovarianceMatrix:
    """Solve ``B R + R B^T = -F`` for a strictly stable drift."""
    drift = np.asarray(drift, dtype=float)
    diffusion = np.asarray(diffusion, dtype=float)
    if drift.shape != (4, 4) or diffusion.shape != (4, 4):
        raise ValueError("drift and diffusion must be 4x4")
    ev = np.linalg.eigvals(drift)
    if not np.all(ev.real < 0.0):
        raise UnstableSystemError(
            f"drift is not strictly stable (max Re lambda = {ev.real.max():.3e})"
        )
    try:
        r = _kernels.lyapunov_batch(drift, diffusion)[0]
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError(f"Lyapunov system is singular: {exc}") from exc
    if not np.all(np.isfinite(r)):
        raise NumericalDegeneracyError("Lyapunov system is singular")
    return CovarianceMatrix(r, "generic-lyapunov")


def solve_lyapunov_dense(drift, diffusion):
    """Plain Kronecker-vectorised Lyapunov solve for any n x n stable drift.

    Used for the 8x8 pre-elimination model; returns a bare ndarray.
    """
    drift = np.asarray(drift, dtype=float)
    diffusion = np.asarray(diffusion, dtype=float)
    n = drift.shape[0]
    ev = np.linalg.eigvals(drift)
    if not np.all(ev.real < 0.0):
        raise UnstableSystemError(
            f"drift is not strictly stable (max Re lambda = {ev.real.max():.3e})"
        )
    eye = np.eye(n)
    system = np.kron(drift, eye) + np.kron(eye, drift)
    try:
        x = np.linalg.solve(system, -diffusion.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError(f"Lyapunov system is singular: {exc}") from exc
    r = x.reshape(n, n)
    return 0.5 * (r + r.T)


def cramer_matrices(m: EffectiveModel, diffusion):
    """The coefficient matrix D and the four column-replaced D1..D4."""
    f = np.asarray(diffusion, float)
    c, s = m.chi.real, m.chi.imag
    ssum = -(m.ups1 + m.ups2) / 2.0
    d = np.array([
        [-m.ups1 / 2.0, c, s, 0.0],
        [c, ssum, 0.0, c],
        [s, 0.0, ssum, s],
        [0.0, c, s, -m.ups2 / 2.0],
    ])
    rhs = np.array([-f[0, 0] / 2.0, -f[0, 2], -f[0, 3], -f[2, 2] / 2.0])
    replaced = []
    for k in range(4):
        dk = d.copy()
        dk[:, k] = rhs
        replaced.append(dk)
    return d, replaced


def cramer_determinants(m: EffectiveModel, diffusion):
    """(det D, det D1, det D2, det D3, det D4) by LU with partial pivoting."""
    d, replaced = cramer_matrices(m, diffusion)
    return (float(np.linalg.det(d)),) + tuple(float(np.linalg.det(x)) for x in replaced)


def solve_covariance_cramer(m: EffectiveModel, diffusion) -> CovarianceMatrix:
    d, _ = cramer_matrices(m, diffusion)
    det_d, *dets = cramer_determinants(m, diffusion)
    if abs(det_d) < 1e-14 * np.abs(d).max() ** 4:
        raise NearMarginalError(
            f"det D = {det_d:.3e} is near zero; the system is (near) marginally "
            "stable -- check stability and use solve_lyapunov_generic"
        )
    r11, r13, r14, r33 = (x / det_d for x in dets)
    return CovarianceMatrix(from_elements(r11, r13, r14, r33), "cramer")


def symmetric_determinants(m: EffectiveModel, diffusion):
    """Closed-form (det D, det D1..D4) for identical modes, theta = phi = 0.

    ``det D = ups^2 (ups^2/4 - chi^2)``; D1..D4 follow from cofactor
    expansion with F11 == F33.
    """
    _check_symmetric_domain(m)
    f = np.asarray(diffusion, float)
    f11, f13, f14, f33 = f[0, 0], f[0, 2], f[0, 3], f[2, 2]
    u = m.ups1
    x = m.chi.real
    u2, u3 = u * u, u * u * u
    return (
        u2 * (u2 / 4.0 - x * x),
        u3 * f11 / 4.0 + x * u2 * f13 / 2.0,
        u3 * f13 / 4.0 + x * u2 * f11 / 2.0,
        (u3 - 4.0 * x * x * u) * f14 / 4.0,
        u3 * f33 / 4.0 + x * u2 * f13 / 2.0,
    )


def _check_symmetric_domain(m: EffectiveModel):
    if not m.symmetric:
        raise ParameterError("closed form needs kappa1=kappa2, gamma1=gamma2, G1=G2")
    if m.pump_phase != 0.0:
        raise ParameterError("closed form needs pump phase theta = 0")
    if m.squeezing_phase != 0.0:
        raise ParameterError("closed form needs squeezing phase phi = 0")


def symmetric_closed_form(m: EffectiveModel, diffusion) -> CovarianceMatrix:
    det_d, *dets = symmetric_determinants(m, diffusion)
    scale = max(abs(m.ups1), abs(m.chi)) ** 4
    if abs(det_d) < 1e-14 * scale:
        raise NearMarginalError(f"det D = {det_d:.3e} is near zero")
    r11, r13, r14, r33 = (x / det_d for x in dets)
    return CovarianceMatrix(from_elements(r11, r13, r14, r33), "symmetric-closed-form")
