"""Box-constrained maximisation of the logarithmic negativity.

A coarse tensor grid over the box seeds a few Nelder-Mead runs. The
simplex lives in unit-box coordinates and every trial point is projected
onto the box. Unstable trial points are handled in one of two ways:

``reject``
    the point is re-sampled (pulled halfway toward the centroid with a
    small seeded jitter, up to ``resample_limit`` times) and, if still
    unstable, treated as infinitely bad;
``penalty``
    the objective takes the finite value ``penalty``.

Minimisation is of ``-E_N``; a run stops when the simplex diameter (unit
box) drops below ``tol`` or after ``max_iter`` iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NoFeasibleRegionError, ParameterError
from .params import PhysicalParams, ReducedParams, reduce
from .pipeline import broadcast_fields, evaluate_batch
from .sweep import REDUCED_AXES, axis_overrides

STABILITY_MODES = ("reject", "penalty")
MAX_GRID_POINTS = 4096


@dataclass(frozen=True)
class OptimizeSpec:
    """Free parameters with box bounds over a fixed base point.

    ``free`` maps reduced-axis names to ``(low, high)``. Physical bases are
    reduced first.
    """

    base: ReducedParams
    free: dict
    stability: str = "reject"
    tol: float = 1e-6
    max_iter: int = 400
    multistart: int = 3
    grid: int = 21
    seed: int = 0
    penalty: float = 1e3
    resample_limit: int = 20

    def __post_init__(self):
        if isinstance(self.base, PhysicalParams):
            object.__setattr__(self, "base", reduce(self.base))
        if not self.free:
            raise ParameterError("at least one free parameter is required")
        free = {}
        for name, bounds in dict(self.free).items():
            if name not in REDUCED_AXES or name == "temperature":
                raise ParameterError(f"cannot optimise over {name!r}")
            lo, hi = (float(b) for b in bounds)
            if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
                raise ParameterError(f"{name}: need finite low < high")
            if name == "gain_ratio" and hi >= 0.5:
                raise ParameterError("gain_ratio upper bound must be < 0.5")
            if name == "gain" and hi >= 0.5 * self.base.kappa:
                raise ParameterError("gain upper bound must be < sqrt(kappa1 kappa2)/2")
            if lo < 0 and name not in ("pump_phase", "pump_phase_pi", "squeezing_phase"):
                raise ParameterError(f"{name}: lower bound must be >= 0")
            free[name] = (lo, hi)
        object.__setattr__(self, "free", free)
        if self.stability not in STABILITY_MODES:
            raise ParameterError(f"stability must be one of {STABILITY_MODES}")
        if not self.tol > 0 or self.max_iter < 1 or self.multistart < 1 or self.grid < 2:
            raise ParameterError("need tol > 0, max_iter >= 1, multistart >= 1, grid >= 2")

    @property
    def names(self):
        return tuple(self.free)

    @property
    def lower(self):
        return np.array([b[0] for b in self.free.values()])

    @property
    def upper(self):
        return np.array([b[1] for b in self.free.values()])


@dataclass(frozen=True)
class TraceEntry:
    params: dict
    log_negativity: float | None
    stable: bool
    stage: str


@dataclass
class OptimizeResult:
    argmax: dict
    log_negativity: float
    params: ReducedParams
    trace: list
    best_history: list
    grid_best: float
    iterations: int
    converged: bool
    messages: list = field(default_factory=list)

    @property
    def n_evaluations(self):
        return len(self.trace)

    def as_dict(self):
        return {
            "argmax": self.argmax,
            "E_N": self.log_negativity,
            "grid_best_E_N": self.grid_best,
            "iterations": self.iterations,
            "evaluations": self.n_evaluations,
            "converged": self.converged,
            "best_history": self.best_history,
            "messages": self.messages,
            "params": self.params.as_dict(),
        }


class _Objective:
    def __init__(self, spec: OptimizeSpec):
        self.spec = spec
        self.lo = spec.lower
        self.span = spec.upper - spec.lower
        self.trace = []
        self.history = []

    def to_params(self, u):
        return self.lo + np.clip(u, 0.0, 1.0) * self.span

    def batch(self, units, stage):
        """E_N at unit-box points (NaN where unstable); appends to the trace."""
        x = self.to_params(np.atleast_2d(units))
        cols = [x[:, k] for k in range(x.shape[1])]
        over = axis_overrides(self.spec.base, self.spec.names, cols, 0.0)
        res = evaluate_batch(broadcast_fields(self.spec.base, **over))
        en = np.where(res.stable, res.log_negativity, np.nan)
        for row, e, s in zip(x, en, res.stable):
            val = None if math.isnan(e) else float(e)
            self.trace.append(TraceEntry(dict(zip(self.spec.names, map(float, row))),
                                         val, bool(s), stage))
            if val is not None and (not self.history or -val < self.history[-1]):
                self.history.append(-val)
        return en

    def __call__(self, u, stage="simplex"):
        """Objective -E_N for minimisation; inf/penalty for unstable points."""
        e = self.batch(u[None], stage)[0]
        if math.isnan(e):
            return math.inf if self.spec.stability == "reject" else self.spec.penalty
        return -float(e)


def _pre_grid(obj: _Objective, n_dim):
    per = max(2, min(obj.spec.grid, int(MAX_GRID_POINTS ** (1.0 / n_dim))))
    axes = [np.linspace(0.0, 1.0, per)] * n_dim
    pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    return pts, obj.batch(pts, "grid")


def _resample(obj, f, point, centroid, rng):
    """Reject mode: pull an unstable trial toward the centroid until stable."""
    val = f(point)
    if obj.spec.stability != "reject":
        return point, val
    for _ in range(obj.spec.resample_limit):
        if math.isfinite(val):
            break
        jitter = rng.normal(scale=1e-3, size=point.shape)
        point = np.clip(centroid + 0.5 * (point - centroid) + jitter, 0.0, 1.0)
        val = f(point)
    return point, val


def _nelder_mead(obj: _Objective, start, rng, step=0.1):
    """Projected Nelder-Mead from ``start`` (unit coordinates)."""
    spec = obj.spec
    n = start.size
    f = obj.__call__
    simplex = [start.copy()]
    for k in range(n):
        v = start.copy()
        v[k] = v[k] + step if v[k] + step <= 1.0 else v[k] - step
        simplex.append(v)
    simplex = np.array(simplex)
    vals = np.array([f(v) for v in simplex])
    for k in range(1, n + 1):
        if not math.isfinite(vals[k]):
            simplex[k], vals[k] = _resample(obj, f, simplex[k], simplex[0], rng)

    it = 0
    converged = False
    while it < spec.max_iter:
        order = np.argsort(vals, kind="stable")
        simplex, vals = simplex[order], vals[order]
        diam = float(np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1)))
        if diam < spec.tol:
            converged = True
            break
        it += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr, fr = _resample(obj, f, np.clip(2.0 * centroid - worst, 0.0, 1.0), centroid, rng)
        if vals[0] <= fr < vals[-2]:
            simplex[-1], vals[-1] = xr, fr
            continue
        if fr < vals[0]:
            xe = np.clip(3.0 * centroid - 2.0 * worst, 0.0, 1.0)
            fe = f(xe)
            if fe < fr:
                simplex[-1], vals[-1] = xe, fe
            else:
                simplex[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-1]:
            xc = np.clip(centroid + 0.5 * (xr - centroid), 0.0, 1.0)
        else:
            xc = np.clip(centroid + 0.5 * (worst - centroid), 0.0, 1.0)
        fc = f(xc)
        # strict improvement only: equal values (flat objective, or a simplex
        # collapsed onto a box face) fall through to the shrink
        if fc < min(fr, vals[-1]):
            simplex[-1], vals[-1] = xc, fc
            continue
        # shrink toward the best vertex
        for k in range(1, n + 1):
            simplex[k] = simplex[0] + 0.5 * (simplex[k] - simplex[0])
            vals[k] = f(simplex[k])
    best = int(np.argmin(vals))
    return simplex[best], vals[best], it, converged


def maximize_negativity(spec: OptimizeSpec) -> OptimizeResult:
    """Maximise E_N over the free box; returns the best point and full trace."""
    obj = _Objective(spec)
    rng = np.random.default_rng(spec.seed)
    n_dim = len(spec.names)
    pts, en = _pre_grid(obj, n_dim)
    feasible = np.flatnonzero(~np.isnan(en))
    if feasible.size == 0:
        raise NoFeasibleRegionError(
            f"no stable point among {len(pts)} pre-grid samples of {dict(spec.free)}")
    order = feasible[np.argsort(-en[feasible], kind="stable")]
    grid_best = float(en[order[0]])
    best_u, best_f = pts[order[0]].copy(), -grid_best
    iters = 0
    all_converged = True
    for k in order[: spec.multistart]:
        u, fval, it, conv = _nelder_mead(obj, pts[k].copy(), rng)
        iters += it
        all_converged &= conv
        if fval < best_f:
            best_u, best_f = u, fval
    x = obj.to_params(best_u)
    argmax = dict(zip(spec.names, map(float, x)))
    over = axis_overrides(spec.base, spec.names, [np.array(v) for v in x], 0.0)
    params = spec.base.replace(**{k: float(v) for k, v in over.items()})
    msgs = [] if all_converged else ["iteration cap reached before the diameter tolerance"]
    return OptimizeResult(
        argmax=argmax, log_negativity=-best_f, params=params, trace=obj.trace,
        best_history=[-v for v in obj.history], grid_best=grid_best,
        iterations=iters, converged=all_converged, messages=msgs,
    )
