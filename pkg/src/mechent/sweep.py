"""Grid sweeps, figure presets and their qualitative signature checks.

A sweep varies one or two named axes over a base parameter set and
evaluates every grid point with :func:`mechent.pipeline.evaluate_batch`.
Rows come out row-major over the axes in the order given (first axis
outermost) regardless of ``jobs``.

Axis vocabulary for a reduced base
----------------------------------
gain_ratio        Lambda / sqrt(kappa1 kappa2)
pump_phase        theta (rad)
pump_phase_pi     theta / pi
squeezing         r
squeezing_phase   phi (rad)
cooperativity     C (couplings rescaled at fixed G1/G2)
coupling_ratio    sqrt(G1 G2) / sqrt(kappa1 kappa2)
occupancy         n1 = n2
temperature       bath temperature (K), converted with ``mech_freq``

plus any :class:`~mechent.params.ReducedParams` field. For a physical base
the vocabulary is every :class:`~mechent.params.PhysicalParams` field, the
shared names (``power``, ``temperature``, ``mass``, ``length``, ``kappa``,
``gamma``) that set both modes, ``gain_ratio`` and ``pump_phase_pi``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.optimize import brentq

from ._version import __version__
from .exceptions import ParameterError
from .params import (
    REF_MECH_FREQ,
    PhysicalParams,
    ReducedParams,
    reduce,
    thermal_occupancy,
)
from .pipeline import REDUCED_FIELDS, broadcast_fields, evaluate_batch

PHYSICAL_FIELDS = tuple(f.name for f in fields(PhysicalParams))
SHARED_PHYSICAL = ("power", "temperature", "mass", "length", "kappa", "gamma")

REDUCED_AXES = (
    "gain_ratio", "pump_phase", "pump_phase_pi", "squeezing", "squeezing_phase",
    "cooperativity", "coupling_ratio", "occupancy", "temperature",
) + tuple(n for n in REDUCED_FIELDS if n not in ("pump_phase", "squeezing", "squeezing_phase"))
PHYSICAL_AXES = PHYSICAL_FIELDS + SHARED_PHYSICAL + ("gain_ratio", "pump_phase_pi")

_UNITS = {
    "gain_ratio": "kappa", "pump_phase": "rad", "pump_phase_pi": "pi rad",
    "squeezing": "1", "squeezing_phase": "rad", "cooperativity": "1",
    "coupling_ratio": "kappa", "occupancy": "phonons", "n1": "phonons",
    "n2": "phonons", "temperature": "K", "temperature1": "K", "temperature2": "K",
    "mass": "kg", "mass1": "kg", "mass2": "kg", "length": "m", "length1": "m",
    "length2": "m", "power": "W", "power1": "W", "power2": "W",
}
RESULT_COLUMNS = ("stable", "margin", "V_s", "E_N", "E_N_dB", "entangled", "min_symplectic",
                  "lyapunov_residual")
_RESULT_UNITS = {"stable": "bool", "margin": "1", "V_s": "1", "E_N": "nats", "entangled": "bool",
                 "E_N_dB": "dB", "min_symplectic": "1", "lyapunov_residual": "1"}
NATS_TO_DB = 10.0 * math.log10(math.e)


def unit_of(name):
    return _UNITS.get(name, "rad/s")


@dataclass(frozen=True)
class Axis:
    """One swept axis: ``count`` points on [min, max], or explicit values."""

    name: str
    min: float = 0.0
    max: float = 1.0
    count: int = 101
    scale: str = "linear"
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.values is not None:
            vals = tuple(float(v) for v in self.values)
            if len(vals) < 1 or not all(math.isfinite(v) for v in vals):
                raise ParameterError(f"axis {self.name!r}: explicit values must be finite")
            object.__setattr__(self, "values", vals)
            return
        if self.scale not in ("linear", "log"):
            raise ParameterError(f"axis {self.name!r}: scale must be 'linear' or 'log'")
        if int(self.count) != self.count or self.count < 2:
            raise ParameterError(f"axis {self.name!r}: count must be an integer >= 2")
        object.__setattr__(self, "count", int(self.count))
        if not (math.isfinite(self.min) and math.isfinite(self.max)) or not self.min < self.max:
            raise ParameterError(f"axis {self.name!r}: need finite min < max")
        if self.scale == "log" and self.min <= 0.0:
            raise ParameterError(f"axis {self.name!r}: log scale needs min > 0")

    def grid(self):
        if self.values is not None:
            return np.array(self.values)
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)

    def as_dict(self):
        if self.values is not None:
            return {"name": self.name, "values": list(self.values)}
        return {"name": self.name, "min": self.min, "max": self.max,
                "count": self.count, "scale": self.scale}


@dataclass(frozen=True)
class SweepSpec:
    """Base parameters plus one or two axes.

    ``mech_freq`` (rad/s) converts a ``temperature`` axis to occupancies
    when the base is reduced. ``columns`` selects result columns (all by
    default); axis columns are always written.
    """

    base: ReducedParams | PhysicalParams
    axes: tuple[Axis, ...]
    columns: tuple[str, ...] = RESULT_COLUMNS
    mech_freq: float = REF_MECH_FREQ
    jobs: int = 1

    def __post_init__(self):
        axes = tuple(self.axes)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "columns", tuple(self.columns))
        if not 1 <= len(axes) <= 2:
            raise ParameterError("a sweep needs one or two axes")
        vocab = PHYSICAL_AXES if isinstance(self.base, PhysicalParams) else REDUCED_AXES
        for ax in axes:
            if ax.name not in vocab:
                raise ParameterError(f"unknown axis {ax.name!r}; expected one of {sorted(set(vocab))}")
        if len(axes) == 2 and axes[0].name == axes[1].name:
            raise ParameterError("the two axes must differ")
        bad = [c for c in self.columns if c not in RESULT_COLUMNS]
        if bad:
            raise ParameterError(f"unknown output columns {bad}")
        if int(self.jobs) < 1:
            raise ParameterError("jobs must be >= 1")

    @property
    def shape(self):
        return tuple(len(ax.grid()) for ax in self.axes)


def axis_overrides(base: ReducedParams, names, grids, mech_freq):
    """ReducedParams-field overrides for named axes evaluated at ``grids``."""
    out = {}

    def put(key, val):
        if key in out:
            raise ParameterError(f"axes conflict: both set {key!r}")
        out[key] = val

    kbar = base.kappa
    for name, v in zip(names, grids):
        if name == "gain_ratio":
            put("gain", v * kbar)
        elif name == "pump_phase_pi":
            put("pump_phase", v * math.pi)
        elif name in ("cooperativity", "coupling_ratio"):
            if np.any(v < 0):
                raise ParameterError(f"{name} must be >= 0")
            g0 = math.sqrt(base.coupling1 * base.coupling2)
            target = (np.sqrt(v * base.gamma * kbar / 4.0) if name == "cooperativity"
                      else v * kbar)
            if g0 > 0.0:
                put("coupling1", base.coupling1 * target / g0)
                put("coupling2", base.coupling2 * target / g0)
            else:
                put("coupling1", target)
                put("coupling2", target)
        elif name == "occupancy":
            put("n1", v)
            put("n2", v)
        elif name == "temperature":
            n = thermal_occupancy(mech_freq, v)
            put("n1", n)
            put("n2", n)
        else:
            put(name, v)
    return out


def _physical_fields(base: PhysicalParams, names, grids):
    """Reduce every grid point of a physical sweep (pointwise)."""
    npts = grids[0].size
    cols = {n: np.empty(npts) for n in REDUCED_FIELDS}
    for k in range(npts):
        changes = {}
        for name, v in zip(names, grids):
            x = float(v.flat[k])
            if name in SHARED_PHYSICAL:
                changes[f"{name}1"] = changes[f"{name}2"] = x
            elif name == "gain_ratio":
                changes["gain"] = x * math.sqrt(base.kappa1 * base.kappa2)
            elif name == "pump_phase_pi":
                changes["pump_phase"] = x * math.pi
            else:
                changes[name] = x
        red = reduce(base.replace(**changes))
        for n in REDUCED_FIELDS:
            cols[n][k] = getattr(red, n)
    return cols


def resolve_fields(spec: SweepSpec):
    """Flat ReducedParams-field arrays for the whole grid, row-major."""
    mesh = np.meshgrid(*(ax.grid() for ax in spec.axes), indexing="ij")
    flat = [m.ravel() for m in mesh]
    names = [ax.name for ax in spec.axes]
    if isinstance(spec.base, PhysicalParams):
        return _physical_fields(spec.base, names, flat), flat
    over = axis_overrides(spec.base, names, flat, spec.mech_freq)
    flds = broadcast_fields(spec.base, **over)
    _check_ranges(flds)
    return flds, flat


def _check_ranges(flds):
    for n in ("kappa1", "kappa2", "gamma1", "gamma2"):
        if np.any(~(flds[n] > 0.0)):
            raise ParameterError(f"swept {n} must be > 0")
    for n in ("coupling1", "coupling2", "gain", "squeezing", "n1", "n2"):
        if np.any(~(flds[n] >= 0.0)):
            raise ParameterError(f"swept {n} must be >= 0")
    for n in ("pump_phase", "squeezing_phase"):
        if not np.all(np.isfinite(flds[n])):
            raise ParameterError(f"swept {n} must be finite")


@dataclass(eq=False)
class SweepTable:
    """Column-oriented sweep result plus provenance."""

    spec: SweepSpec
    data: dict
    preset: str | None = None
    warnings: list = field(default_factory=list)

    @property
    def axis_names(self):
        return [ax.name for ax in self.spec.axes]

    @property
    def columns(self):
        return self.axis_names + list(self.spec.columns)

    def __len__(self):
        return len(self.data["stable"])

    def grid(self, name):
        """Column reshaped to the axis grid."""
        return np.asarray(self.data[name]).reshape(self.spec.shape)

    def header(self):
        units = {**_RESULT_UNITS}
        return [f"{c} [{units.get(c) or unit_of(c)}]" for c in self.columns]

    def provenance(self):
        from .io import spec_to_config

        return {
            "version": __version__,
            "preset": self.preset,
            "config": spec_to_config(self.spec),
        }

    def to_csv(self, stream=None):
        """RFC-4180 CSV with a ``#`` comment prologue; returns the text."""
        buf = io.StringIO()
        prov = self.provenance()
        buf.write(f"# mechent {prov['version']}\n")
        buf.write(f"# preset: {prov['preset'] or 'none'}\n")
        buf.write("# config: " + json.dumps(prov["config"], sort_keys=True) + "\n")
        for w in self.warnings:
            buf.write(f"# warning: {w}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        cols = [self.data[c] for c in self.columns]
        # entangled is undefined (empty cell) wherever E_N is masked
        masked = [c == "entangled" for c in self.columns]
        for row, ok in zip(zip(*cols), self.data["stable"]):
            writer.writerow(["" if (m and not ok) else _fmt(x) for x, m in zip(row, masked)])
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text

    def summary(self):
        en = np.asarray(self.data["E_N"], dtype=float)
        stable = np.asarray(self.data["stable"], dtype=bool)
        out = {
            "version": __version__,
            "preset": self.preset,
            "points": len(self),
            "stable_points": int(stable.sum()),
            "warnings": list(self.warnings),
        }
        if stable.any():
            k = int(np.nanargmax(np.where(stable, en, -np.inf)))
            out["max_E_N"] = float(en[k])
            out["argmax"] = {n: float(self.data[n][k]) for n in self.axis_names}
        return out


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def _evaluate_chunked(flds, jobs):
    npts = len(flds["kappa1"])
    if jobs <= 1 or npts < 2 * jobs:
        return [evaluate_batch(flds)]
    bounds = np.linspace(0, npts, jobs + 1).astype(int)
    chunks = [{k: v[a:b] for k, v in flds.items()} for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(evaluate_batch, chunks))


def run_sweep(spec: SweepSpec, preset=None) -> SweepTable:
    flds, axis_vals = resolve_fields(spec)
    parts = _evaluate_chunked(flds, int(spec.jobs))
    cat = lambda attr: np.concatenate([getattr(p, attr) for p in parts])  # noqa: E731
    stable = cat("stable")
    en = cat("log_negativity")
    data = {ax.name: vals for ax, vals in zip(spec.axes, axis_vals)}
    data.update({
        "stable": stable,
        "margin": cat("margin"),
        "V_s": cat("v_s"),
        "E_N": en,
        "E_N_dB": NATS_TO_DB * en,
        "entangled": stable & (2.0 * np.nan_to_num(cat("v_s"), nan=1.0) < 1.0),
        "min_symplectic": cat("min_symplectic"),
        "lyapunov_residual": cat("residual"),
    })
    table = SweepTable(spec=spec, data=data, preset=preset)
    if not stable.any():
        msg = "no stable point in the swept region; every E_N is masked"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        table.warnings.append(msg)
    phys = cat("physical")
    if not phys.all():
        table.warnings.append(f"{int((~phys).sum())} points failed the physicality check")
    return table


# --------------------------------------------------------------------------
# figure presets

PI = math.pi
FIG_COOPERATIVITY = 62.5
FIG_OCCUPANCY = 0.5
PRESET_IDS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7")


@dataclass(frozen=True)
class FigurePreset:
    id: str
    description: str
    spec: SweepSpec
    fixed: dict


def _base(**kw):
    args = dict(cooperativity=FIG_COOPERATIVITY, occupancy=FIG_OCCUPANCY)
    args.update(kw)
    return ReducedParams.symmetric(**args)


def figure_preset(fig_id, points=101) -> FigurePreset:
    """Fixed parameters and axes for one figure.

    Series values where the legend is not recoverable are representative
    choices: theta/pi in {0, 1/6, 1/4, 1/3, 1/2}, r in {0, 0.5, 1, 1.5},
    n in {0.5, 1, 2}, Lambda/kappa in {0, 0.1, 0.2, 0.3, 0.4, 0.49}.
    """
    r_series = Axis("squeezing", values=(0.0, 0.5, 1.0, 1.5))
    if fig_id == "fig2":
        fixed = dict(squeezing=1.0, occupancy=0.5, cooperativity=62.5)
        spec = SweepSpec(_base(squeezing=1.0), (
            Axis("gain_ratio", 0.0, 0.499, points), Axis("pump_phase_pi", 0.0, 1.0, points)))
        desc = "E_N density over Lambda/kappa and theta/pi"
    elif fig_id == "fig3":
        fixed = dict(gain_ratio=0.26, occupancy=0.5, cooperativity=62.5)
        spec = SweepSpec(_base(gain_ratio=0.26), (
            Axis("pump_phase_pi", values=(0.0, 1 / 6, 0.25, 1 / 3, 0.5)),
            Axis("squeezing", 0.0, 3.0, points)))
        desc = "E_N versus r for several theta"
    elif fig_id == "fig4":
        fixed = dict(pump_phase_pi=1 / 12, occupancy=0.5, cooperativity=62.5)
        spec = SweepSpec(_base(pump_phase=PI / 12), (
            Axis("gain_ratio", values=(0.0, 0.1, 0.2, 0.3, 0.4, 0.49)),
            Axis("squeezing", 0.0, 3.0, points)))
        desc = "E_N versus r for several Lambda at theta = pi/12"
    elif fig_id == "fig5":
        fixed = dict(gain_ratio=0.49, pump_phase_pi=0.0, occupancy=0.5)
        spec = SweepSpec(_base(gain_ratio=0.49), (
            r_series, Axis("cooperativity", 1.0, 100.0, points, "log")))
        desc = "E_N versus C for several r"
    elif fig_id == "fig6":
        fixed = dict(gain_ratio=0.49, pump_phase_pi=0.0, squeezing=1.0)
        spec = SweepSpec(_base(gain_ratio=0.49, squeezing=1.0), (
            Axis("occupancy", values=(0.5, 1.0, 2.0)),
            Axis("cooperativity", 1.0, 100.0, points, "log")))
        desc = "E_N versus C for several n"
    elif fig_id == "fig7":
        fixed = dict(gain_ratio=0.49, pump_phase_pi=0.0, cooperativity=62.5)
        spec = SweepSpec(_base(gain_ratio=0.49, occupancy=0.0), (
            r_series, Axis("temperature", 1e-6, 1e-3, points, "log")))
        desc = "E_N versus bath temperature for several r"
    else:
        raise ParameterError(f"unknown figure preset {fig_id!r}; expected one of {PRESET_IDS}")
    return FigurePreset(fig_id, desc, spec, fixed)


@dataclass
class SignatureCheck:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


@dataclass
class FigureResult:
    preset: FigurePreset
    table: SweepTable
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def summary(self):
        out = self.table.summary()
        out["figure"] = self.preset.id
        out["description"] = self.preset.description
        out["fixed"] = self.preset.fixed
        out["checks"] = [c.as_dict() for c in self.checks]
        out["all_passed"] = self.passed
        return out


def _curves(table):
    """(series values, list of (x, E_N, V_s)) for a two-axis table."""
    outer = table.spec.axes[0].grid()
    en = table.grid("E_N")
    vs = table.grid("V_s")
    x = table.spec.axes[1].grid()
    return outer, [(x, en[i], vs[i]) for i in range(len(outer))]


def _onset(base_spec, series_name, series_value, x, vs):
    """Smallest cooperativity with 2 V_s < 1, refined by bisection-style root finding."""
    ent = 2.0 * vs < 1.0
    if not ent.any():
        return math.nan
    k = int(np.argmax(ent))
    if k == 0:
        return float(x[0])

    def g(c):
        spec = SweepSpec(base_spec.base, (Axis(series_name, values=(series_value,)),
                                          Axis("cooperativity", values=(c,))),
                         mech_freq=base_spec.mech_freq)
        flds, _ = resolve_fields(spec)
        return 2.0 * evaluate_batch(flds).v_s[0] - 1.0

    return float(brentq(g, x[k - 1], x[k], xtol=1e-12, rtol=1e-12))


def _strictly(seq, sign):
    d = np.diff(np.asarray(seq, float))
    return bool(np.all(sign * d > 0))


def signature_checks(preset: FigurePreset, table: SweepTable) -> list:
    fid = preset.id
    checks = []
    tiny = 1e-12
    if fid == "fig2":
        en = table.grid("E_N")
        theta0 = en[:, 0]
        checks.append(SignatureCheck(
            "E_N strictly increasing in Lambda at theta=0",
            bool(np.all(np.isfinite(theta0)) and np.all(np.diff(theta0) > 0)),
            {"E_N_first": float(theta0[0]), "E_N_last": float(theta0[-1])}))
        # extra line at Lambda = 0.45 kappa, theta in [0, pi/2]
        th = np.linspace(0.0, 0.5, len(table.spec.axes[1].grid()) // 2 + 1)
        line = SweepSpec(preset.spec.base, (Axis("gain_ratio", values=(0.45,)),
                                            Axis("pump_phase_pi", values=tuple(th))))
        e45 = run_sweep(line).data["E_N"]
        pos = e45 > 0
        ok = bool(np.all(np.isfinite(e45)) and np.all(np.diff(e45) <= tiny)
                  and np.all(np.diff(e45)[pos[:-1]] < 0) and e45[-1] < e45[0])
        checks.append(SignatureCheck(
            "E_N decreasing toward theta=pi/2 at Lambda=0.45 kappa", ok,
            {"E_N_theta0": float(e45[0]), "E_N_theta_pi2": float(e45[-1])}))
    elif fid == "fig3":
        series, curves = _curves(table)
        for th, (x, en, _) in zip(series, curves):
            if abs(th - 0.5) < 1e-12:
                k = int(np.argmax(en))
                ok = 0 < k < len(en) - 1 and en[k] > en[0] + tiny and en[k] > en[-1] + tiny
                checks.append(SignatureCheck(
                    "interior maximum in r for theta=pi/2", bool(ok),
                    {"r_max": float(x[k]), "E_N_max": float(en[k]),
                     "E_N_r0": float(en[0]), "E_N_rmax": float(en[-1])}))
            if th == 0.0:
                checks.append(SignatureCheck(
                    "E_N non-decreasing in r for theta=0",
                    bool(np.all(np.diff(en) >= -tiny)),
                    {"E_N_r0": float(en[0]), "E_N_rmax": float(en[-1])}))
    elif fid == "fig4":
        series, curves = _curves(table)
        r0 = [float(en[0]) for _, en, _ in curves]
        checks.append(SignatureCheck(
            "E_N at r=0 non-decreasing in Lambda", bool(np.all(np.diff(r0) >= -tiny)),
            {"gain_ratio": [float(s) for s in series], "E_N_r0": r0}))
    elif fid in ("fig5", "fig6"):
        series, curves = _curves(table)
        name = table.spec.axes[0].name
        onsets = [_onset(preset.spec, name, s, x, vs) for s, (x, _, vs) in zip(series, curves)]
        finite = all(math.isfinite(o) for o in onsets)
        sign = -1 if fid == "fig5" else 1
        label = ("onset cooperativity decreasing in r" if fid == "fig5"
                 else "onset cooperativity increasing in n")
        checks.append(SignatureCheck(
            label, finite and _strictly(onsets, sign),
            {name: [float(s) for s in series], "onset_cooperativity": onsets}))
    elif fid == "fig7":
        series, curves = _curves(table)
        mono = [bool(np.all(np.diff(en) <= tiny)) for _, en, _ in curves]
        checks.append(SignatureCheck(
            "E_N non-increasing in T for each r", all(mono),
            {"squeezing": [float(s) for s in series], "per_curve": mono}))
        en = np.array([c[1] for c in curves])
        order = np.argsort(series)
        dom = bool(np.all(np.diff(en[order], axis=0) >= -tiny))
        checks.append(SignatureCheck(
            "larger-r curves dominate at every T", dom,
            {"E_N_at_Tmin": [float(v) for v in en[:, 0]],
             "E_N_at_Tmax": [float(v) for v in en[:, -1]]}))
    return checks


def reproduce_figure(fig_id, points=101, jobs=1) -> FigureResult:
    """Run a preset and its signature checks (failures reported, not raised)."""
    preset = figure_preset(fig_id, points)
    spec = preset.spec
    if jobs != 1:
        spec = SweepSpec(spec.base, spec.axes, spec.columns, spec.mech_freq, jobs)
        preset = FigurePreset(preset.id, preset.description, spec, preset.fixed)
    table = run_sweep(spec, preset=fig_id)
    return FigureResult(preset, table, signature_checks(preset, table))
