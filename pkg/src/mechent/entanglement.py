"""Logarithmic negativity of the two-mode mechanical Gaussian state.

The covariance is partitioned as ``[[R1, R3], [R3^T, R2]]`` (2x2 blocks,
vacuum variance 1/2). The smallest symplectic eigenvalue of the partial
transpose is

    V_s = sqrt((zeta - sqrt(zeta^2 - 4 det R)) / 2),
    zeta = det R1 + det R2 - 2 det R3,

and ``E_N = max(0, -ln(2 V_s))`` in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceMatrix
from .exceptions import PhysicalityError

RADICAND_RTOL = 1e-12
# V_s this close below 1/2 is rounding of a separable state, not entanglement
VS_SNAP_RTOL = 1e-12
NATS_TO_DB = 10.0 * math.log10(math.e)  # ln 2 nats <-> 3.01 dB


@dataclass(frozen=True)
class SymplecticInvariants:
    det_r1: float
    det_r2: float
    det_r3: float
    det_r: float
    zeta: float


@dataclass(frozen=True)
class EntanglementResult:
    invariants: SymplecticInvariants
    v_s: float
    log_negativity: float

    @property
    def entangled(self):
        return 2.0 * self.v_s < 1.0

    @property
    def log_negativity_db(self):
        return NATS_TO_DB * self.log_negativity

    def as_dict(self):
        inv = self.invariants
        return {
            "det_R1": inv.det_r1, "det_R2": inv.det_r2, "det_R3": inv.det_r3,
            "det_R": inv.det_r, "zeta": inv.zeta, "V_s": self.v_s,
            "E_N": self.log_negativity, "E_N_dB": self.log_negativity_db,
            "entangled": self.entangled,
        }


def _as_array(cov):
    if isinstance(cov, CovarianceMatrix):
        return cov.matrix
    return np.asarray(cov, dtype=float)


def symplectic_invariants(cov) -> SymplecticInvariants:
    r = _as_array(cov)
    if r.shape != (4, 4):
        raise ValueError("expected a 4x4 covariance matrix")
    d1 = r[0, 0] * r[1, 1] - r[0, 1] * r[1, 0]
    d2 = r[2, 2] * r[3, 3] - r[2, 3] * r[3, 2]
    d3 = r[0, 2] * r[1, 3] - r[0, 3] * r[1, 2]
    det = float(np.linalg.det(r))
    return SymplecticInvariants(float(d1), float(d2), float(d3), det, float(d1 + d2 - 2.0 * d3))


def min_symplectic_eigenvalue(inv: SymplecticInvariants) -> float:
    """Smallest PPT symplectic eigenvalue from the invariants.

    A radicand ``zeta^2 - 4 det R`` within ``-1e-12 * zeta^2`` of zero is
    clamped; anything more negative is a :class:`PhysicalityError`.
    """
    rad = inv.zeta * inv.zeta - 4.0 * inv.det_r
    if rad < 0.0:
        if rad < -RADICAND_RTOL * max(inv.zeta * inv.zeta, 1e-300):
            raise PhysicalityError(
                "zeta^2 - 4 det R is negative: not a physical Gaussian state",
                zeta=inv.zeta, det_r=inv.det_r, radicand=rad,
            )
        rad = 0.0
    inner = inv.zeta - math.sqrt(rad)
    if inner < 0.0:
        if inner < -RADICAND_RTOL * abs(inv.zeta):
            raise PhysicalityError("negative squared symplectic eigenvalue",
                                   zeta=inv.zeta, det_r=inv.det_r)
        inner = 0.0
    return math.sqrt(inner / 2.0)


def negativity_from_vs(vs):
    """``(V_s, E_N)`` elementwise, with ``E_N = max(0, -ln 2 V_s)``.

    V_s within ``VS_SNAP_RTOL`` below 1/2 is set to exactly 1/2: the
    covariance itself is only accurate to ~1e-10, so such a gap cannot be
    resolved, and a product state must report ``E_N == 0`` exactly.
    """
    vs = np.asarray(vs, dtype=float)
    vs = np.where((vs < 0.5) & (vs >= 0.5 * (1.0 - VS_SNAP_RTOL)), 0.5, vs)
    with np.errstate(divide="ignore"):
        en = np.maximum(0.0, -np.log(2.0 * vs))
    if vs.ndim == 0:
        return float(vs), float(en)
    return vs, en


def log_negativity(cov) -> EntanglementResult:
    inv = symplectic_invariants(cov)
    vs = min_symplectic_eigenvalue(inv)
    if vs == 0.0:
        raise PhysicalityError("zero symplectic eigenvalue", zeta=inv.zeta, det_r=inv.det_r)
    vs, en = negativity_from_vs(vs)
    return EntanglementResult(inv, vs, en)


def symplectic_form(n_modes):
    """Block-diagonal ``Omega`` for (q1, p1, q2, p2, ...) ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def partial_transpose(cov, mode=1):
    """Flip the momentum of ``mode`` (0-based), i.e. time-reverse that mode."""
    r = _as_array(cov).copy()
    k = 2 * mode + 1
    r[k, :] *= -1.0
    r[:, k] *= -1.0
    return r


def symplectic_eigenvalues(cov):
    """Sorted symplectic spectrum from the moduli of eig(i Omega R).

    Independent of the invariant formula; used to cross-check it and to
    test physicality of larger (e.g. 8x8) covariances.
    """
    r = _as_array(cov)
    n = r.shape[0] // 2
    ev = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ r))
    ev.sort()
    return ev[::2]


def local_rotation(alpha1, alpha2):
    """Phase-space rotation of each mode (a local symplectic map)."""
    def rot(a):
        c, s = math.cos(a), math.sin(a)
        return np.array([[c, -s], [s, c]])
    out = np.zeros((4, 4))
    out[:2, :2] = rot(alpha1)
    out[2:, 2:] = rot(alpha2)
    return out
