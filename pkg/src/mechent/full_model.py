"""Pre-elimination model: two cavity modes plus two mirrors, 8x8.

Rotating-wave equations in the slow frame (Delta_j = Omega_j, pump matched
to Delta_1 + Delta_2)::

    dc1/dt = -(kappa1/2) c1 + i G1 d1 + Lambda e^{i theta} c2^dag + sqrt(kappa1) c1_in
    dc2/dt = -(kappa2/2) c2 + i G2 d2 + Lambda e^{i theta} c1^dag + sqrt(kappa2) c2_in
    dd_j/dt = -(gamma_j/2) d_j + i G_j c_j + sqrt(gamma_j) d_j_in

Quadrature ordering is (Qc1, Pc1, Qc2, Pc2, Qm1, Pm1, Qm2, Pm2), so the
mechanical block is ``[4:8, 4:8]``. Solving this model and comparing its
mechanical block against the 4x4 effective model checks the adiabatic
elimination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariance import solve_lyapunov_dense, solve_lyapunov_generic
from .effective import build_diffusion, build_drift, build_effective_model
from .entanglement import log_negativity, symplectic_eigenvalues
from .exceptions import ParameterError
from .params import OperatingPoint, ReducedParams, reservoir_moments
from .stability import routh_hurwitz

FULL_LABELS = ("Qc1", "Pc1", "Qc2", "Pc2", "Qm1", "Pm1", "Qm2", "Pm2")
WEAK_COUPLING_LIMIT = 0.1

# mode order inside the ladder-operator vector (c1, c2, d1, d2, c1+, c2+, d1+, d2+)
_C1, _C2, _D1, _D2 = range(4)


def _quadrature_transform():
    """T with x = T v, v = (modes, daggers), x = (Q, P) per mode."""
    t = np.zeros((8, 8), dtype=complex)
    s = 1.0 / math.sqrt(2.0)
    for k in range(4):
        t[2 * k, k] = s
        t[2 * k, k + 4] = s
        t[2 * k + 1, k] = -1j * s
        t[2 * k + 1, k + 4] = 1j * s
    return t


_T = _quadrature_transform()
_T_INV = np.linalg.inv(_T)


@dataclass(frozen=True, eq=False)
class FullStateMatrices:
    drift: np.ndarray
    diffusion: np.ndarray
    labels: tuple = FULL_LABELS


def _ladder_drift(p: ReducedParams):
    a = np.zeros((8, 8), dtype=complex)
    pump = p.gain * complex(math.cos(p.pump_phase), math.sin(p.pump_phase))
    kap = (p.kappa1, p.kappa2)
    gam = (p.gamma1, p.gamma2)
    g = (p.coupling1, p.coupling2)
    for j in range(2):
        c, d = _C1 + j, _D1 + j
        other_dag = 4 + (_C2 if j == 0 else _C1)
        a[c, c] = -kap[j] / 2.0
        a[c, d] = 1j * g[j]
        a[c, other_dag] = pump
        a[d, d] = -gam[j] / 2.0
        a[d, c] = 1j * g[j]
    # hermitian-conjugate equations
    a[4:, 4:] = a[:4, :4].conj()
    a[4:, :4] = a[:4, 4:].conj()
    return a


def _input_moments(p: ReducedParams):
    """<u_i u_j> for u = (c1_in, c2_in, d1_in, d2_in, daggers)."""
    n_res, m_res = reservoir_moments(p.squeezing, p.squeezing_phase)
    mom = np.zeros((8, 8), dtype=complex)
    for k, occ in ((_C1, n_res), (_C2, n_res), (_D1, p.n1), (_D2, p.n2)):
        mom[k, k + 4] = occ + 1.0
        mom[k + 4, k] = occ
    mom[_C1, _C2] = mom[_C2, _C1] = m_res
    mom[_C1 + 4, _C2 + 4] = mom[_C2 + 4, _C1 + 4] = np.conj(m_res)
    return mom


def build_full_model(params: ReducedParams | OperatingPoint) -> FullStateMatrices:
    """Real 8x8 drift and diffusion of the rotating-wave cavity+mirror model."""
    if isinstance(params, OperatingPoint):
        params = params.reduced()
    p = params
    drift = _T @ _ladder_drift(p) @ _T_INV
    rates = np.sqrt(np.array([p.kappa1, p.kappa2, p.gamma1, p.gamma2] * 2))
    src = _T @ np.diag(rates)
    corr = src @ _input_moments(p) @ src.T
    diffusion = 0.5 * (corr + corr.T)
    return FullStateMatrices(
        drift=np.ascontiguousarray(drift.real), diffusion=np.ascontiguousarray(diffusion.real)
    )


def solve_full_covariance(params: ReducedParams | OperatingPoint):
    """Steady 8x8 covariance of the full model."""
    full = build_full_model(params)
    return solve_lyapunov_dense(full.drift, full.diffusion)


@dataclass(frozen=True)
class EliminationReport:
    coupling_ratio: float
    max_rel_cov_deviation: float
    en_full: float
    en_reduced: float
    en_rel_deviation: float
    tolerance: float
    passed: bool
    full_stable: bool
    reduced_stable: bool
    min_symplectic_full: float

    @property
    def stability_agrees(self):
        return self.full_stable == self.reduced_stable

    def as_dict(self):
        return {
            "coupling_ratio": self.coupling_ratio,
            "max_rel_cov_deviation": self.max_rel_cov_deviation,
            "E_N_full": self.en_full,
            "E_N_reduced": self.en_reduced,
            "E_N_rel_deviation": self.en_rel_deviation,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "full_stable": self.full_stable,
            "reduced_stable": self.reduced_stable,
            "stability_agrees": self.stability_agrees,
            "min_symplectic_full": self.min_symplectic_full,
        }


def validate_elimination(params: ReducedParams | OperatingPoint, tol=0.02) -> EliminationReport:
    """Compare the full model's mechanical block with the effective model.

    The covariance deviation is ``max |R_full - R_red| / max |R_red|`` over
    the 4x4 mechanical block; the E_N deviation is relative to the reduced
    value (absolute when that is zero). Requires G_j <= 0.1 kappa_j.
    """
    if isinstance(params, OperatingPoint):
        params = params.reduced()
    p = params
    for j in (1, 2):
        ratio = getattr(p, f"coupling{j}") / getattr(p, f"kappa{j}")
        if ratio > WEAK_COUPLING_LIMIT * (1.0 + 1e-9):
            raise ParameterError(
                f"G{j}/kappa{j} = {ratio:.4g} exceeds the weak-coupling limit {WEAK_COUPLING_LIMIT}"
            )
    model = build_effective_model(p)
    report = routh_hurwitz(model)
    full = build_full_model(p)
    full_stable = bool(np.linalg.eigvals(full.drift).real.max() < 0.0)
    # raises UnstableSystemError for either model if unstable
    r_full = solve_lyapunov_dense(full.drift, full.diffusion)
    r_red = solve_lyapunov_generic(build_drift(model), build_diffusion(model)).matrix
    mech = r_full[4:, 4:]
    dev = float(np.abs(mech - r_red).max() / np.abs(r_red).max())
    en_full = log_negativity(mech).log_negativity
    en_red = log_negativity(r_red).log_negativity
    en_dev = abs(en_full - en_red) / en_red if en_red > 0.0 else abs(en_full - en_red)
    return EliminationReport(
        coupling_ratio=p.coupling_ratio,
        max_rel_cov_deviation=dev,
        en_full=en_full,
        en_reduced=en_red,
        en_rel_deviation=float(en_dev),
        tolerance=tol,
        passed=dev <= tol and en_dev <= tol,
        full_stable=full_stable,
        reduced_stable=report.stable,
        min_symplectic_full=float(symplectic_eigenvalues(r_full).min()),
    )
