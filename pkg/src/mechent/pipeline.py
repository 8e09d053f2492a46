"""End-to-end evaluation: parameters -> model -> stability -> covariance -> E_N.

:func:`evaluate` runs one point through every solver path and keeps all
intermediate objects; :func:`evaluate_batch` is the vectorised path used by
sweeps and the optimizer and returns plain arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import _kernels
from .covariance import (
    CovarianceMatrix,
    lyapunov_residual,
    solve_covariance_cramer,
    solve_lyapunov_generic,
)
from .effective import (
    EffectiveModel,
    build_diffusion,
    build_drift,
    build_effective_model,
    diffusion_entries,
    diffusion_stack,
    drift_stack,
    model_arrays,
)
from .entanglement import (
    RADICAND_RTOL,
    EntanglementResult,
    log_negativity,
    negativity_from_vs,
    symplectic_eigenvalues,
)
from .exceptions import MechentError, UnstableSystemError
from .params import OperatingPoint, PhysicalParams, ReducedParams, derive_operating_point
from .stability import StabilityReport, hurwitz_arrays, routh_hurwitz

REDUCED_FIELDS = tuple(f.name for f in fields(ReducedParams))


@dataclass(frozen=True, eq=False)
class PointResult:
    """Everything computed for one parameter point.

    ``covariance`` and ``entanglement`` are ``None`` for unstable points;
    ``cramer`` is ``None`` when that path failed (reason in ``notes``).
    """

    params: ReducedParams
    operating_point: OperatingPoint | None
    model: EffectiveModel
    stability: StabilityReport
    drift: np.ndarray
    diffusion: np.ndarray
    covariance: CovarianceMatrix | None = None
    cramer: CovarianceMatrix | None = None
    entanglement: EntanglementResult | None = None
    residual: float = math.nan
    min_symplectic: float = math.nan
    notes: tuple[str, ...] = field(default=())

    @property
    def stable(self):
        return self.stability.stable

    @property
    def log_negativity(self):
        """E_N in nats, NaN when masked."""
        return self.entanglement.log_negativity if self.entanglement else math.nan

    def as_dict(self):
        m = self.model
        out = {
            "params": self.params.as_dict(),
            "cooperativity": self.params.cooperativity,
            "effective_model": {
                "ups1": m.ups1, "ups2": m.ups2, "optical1": m.optical1,
                "optical2": m.optical2, "denom": m.denom,
                "chi": [m.chi.real, m.chi.imag],
                "beyond_threshold": m.beyond_threshold,
                "drift": self.drift.tolist(), "diffusion": self.diffusion.tolist(),
            },
            "stability": self.stability.as_dict(),
            "stable": self.stable,
            "covariance": self.covariance.as_dict() if self.covariance else None,
            "covariance_cramer": self.cramer.as_dict() if self.cramer else None,
            "entanglement": self.entanglement.as_dict() if self.entanglement else None,
            "E_N": None if self.entanglement is None else self.log_negativity,
            "lyapunov_residual": None if math.isnan(self.residual) else self.residual,
            "min_symplectic_eigenvalue": (
                None if math.isnan(self.min_symplectic) else self.min_symplectic
            ),
            "notes": list(self.notes),
        }
        if self.operating_point is not None:
            op = self.operating_point
            out["operating_point"] = {
                "g0": list(op.g0),
                "drive": list(op.drive),
                "cavity_amp": [abs(x) for x in op.cavity_amp],
                "drive_phase": list(op.drive_phase),
                "mirror_disp": [[x.real, x.imag] for x in op.mirror_disp],
                "coupling": list(op.coupling),
                "cooperativity": op.cooperativity,
                "occupancy": list(op.occupancy),
                "quality_factors": list(op.quality_factors),
                "detuning_residual": list(op.detuning_residual),
                "warnings": list(op.warnings),
            }
        return out


def _resolve(params):
    if isinstance(params, PhysicalParams):
        op = derive_operating_point(params)
        return op.reduced(), op
    if isinstance(params, OperatingPoint):
        return params.reduced(), params
    if isinstance(params, ReducedParams):
        return params, None
    raise TypeError(f"cannot evaluate {type(params).__name__}")


def evaluate(params, strict=False) -> PointResult:
    """Run one point through the whole pipeline.

    With ``strict=True`` an unstable point raises
    :class:`UnstableSystemError`; otherwise its covariance and E_N are
    left empty.
    """
    reduced, op = _resolve(params)
    model = build_effective_model(reduced)
    report = routh_hurwitz(model)
    drift = build_drift(model)
    diffusion = build_diffusion(model)
    if not report.stable:
        if strict:
            raise UnstableSystemError(
                f"unstable operating point (margin {report.margin:.3e})"
            )
        return PointResult(reduced, op, model, report, drift, diffusion,
                           notes=("unstable: covariance and E_N masked",))
    notes = []
    cov = solve_lyapunov_generic(drift, diffusion)
    try:
        cramer = solve_covariance_cramer(model, diffusion)
    except MechentError as exc:
        cramer = None
        notes.append(f"cramer path unavailable: {exc}")
    ent = log_negativity(cov)
    return PointResult(
        reduced, op, model, report, drift, diffusion,
        covariance=cov, cramer=cramer, entanglement=ent,
        residual=lyapunov_residual(drift, diffusion, cov.matrix),
        min_symplectic=float(symplectic_eigenvalues(cov.matrix).min()),
        notes=tuple(notes),
    )


@dataclass(frozen=True, eq=False)
class BatchResult:
    """Flat arrays over the evaluated points (NaN where masked)."""

    stable: np.ndarray
    margin: np.ndarray
    v_s: np.ndarray
    log_negativity: np.ndarray
    residual: np.ndarray
    min_symplectic: np.ndarray
    physical: np.ndarray
    covariance: np.ndarray | None = None

    def __len__(self):
        return self.stable.shape[0]


def broadcast_fields(base: ReducedParams, **overrides):
    """Flat float arrays for every ReducedParams field.

    Overrides are broadcast against each other, then raveled.
    """
    vals = {name: getattr(base, name) for name in REDUCED_FIELDS}
    vals.update(overrides)
    arrays = np.broadcast_arrays(*(np.asarray(vals[n], dtype=float) for n in REDUCED_FIELDS))
    return {n: a.ravel().copy() for n, a in zip(REDUCED_FIELDS, arrays)}


def evaluate_batch(fields: dict, keep_covariance=False) -> BatchResult:
    """Vectorised pipeline over flat arrays of ReducedParams fields.

    Points at the elimination singularity count as unstable. The
    Routh-Hurwitz verdict gates every covariance solve, so no unstable
    point ever carries an E_N.
    """
    f = {n: np.atleast_1d(np.asarray(fields[n], dtype=float)) for n in REDUCED_FIELDS}
    npts = f["kappa1"].shape[0]
    kap12 = f["kappa1"] * f["kappa2"]
    denom = kap12 / 4.0 - f["gain"] ** 2
    ok = np.abs(denom) > 1e-15 * kap12
    safe_gain = np.where(ok, f["gain"], 0.0)
    c = model_arrays(f["kappa1"], f["kappa2"], f["gamma1"], f["gamma2"],
                     f["coupling1"], f["coupling2"], safe_gain, f["pump_phase"])
    kbar = np.sqrt(kap12)
    _, _, _, stable, margin = hurwitz_arrays(c["ups1"], c["ups2"], np.abs(c["chi"]) ** 2, kbar)
    stable = stable & ok
    margin = np.where(ok, margin, np.nan)

    v_s = np.full(npts, np.nan)
    en = np.full(npts, np.nan)
    resid = np.full(npts, np.nan)
    vmin = np.full(npts, np.nan)
    physical = np.ones(npts, dtype=bool)
    cov_out = np.full((npts, 4, 4), np.nan) if keep_covariance else None
    idx = np.flatnonzero(stable)
    if idx.size:
        sub = {k: (v[idx] if np.ndim(v) else v) for k, v in c.items()}
        sq = f["squeezing"][idx]
        sh = np.sinh(sq)
        n_res = sh * sh
        m_res = np.exp(1j * f["squeezing_phase"][idx]) * sh * np.cosh(sq)
        entries = diffusion_entries(
            sub["a1"], sub["b1"], sub["a2"], sub["b2"],
            f["kappa1"][idx], f["kappa2"][idx], f["gamma1"][idx], f["gamma2"][idx],
            f["n1"][idx], f["n2"][idx], n_res, m_res,
        )
        diff = diffusion_stack(*(np.real(e) for e in entries))
        drift = drift_stack(sub["ups1"], sub["ups2"], sub["chi"])
        cov = _kernels.lyapunov_batch(drift, diff)
        vs, rad, zeta, _ = _kernels.symplectic_batch(cov, transpose=True)
        vphys, _, _, _ = _kernels.symplectic_batch(cov, transpose=False)
        bad = rad < -RADICAND_RTOL * zeta * zeta
        physical[idx] = ~bad & np.all(np.isfinite(cov), axis=(1, 2))
        v_s[idx], en[idx] = negativity_from_vs(vs)
        resid[idx] = _kernels.lyapunov_residual_batch(drift, diff, cov)
        vmin[idx] = vphys
        if keep_covariance:
            cov_out[idx] = cov
    return BatchResult(stable=stable, margin=margin, v_s=v_s, log_negativity=en,
                       residual=resid, min_symplectic=vmin, physical=physical,
                       covariance=cov_out)
