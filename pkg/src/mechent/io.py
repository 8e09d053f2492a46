"""Config files (TOML/JSON) and atomic output writing.

A config holds exactly one of the ``[physical]`` or ``[reduced]`` tables,
plus optional ``[sweep]``, ``[optimize]`` and ``[output]`` tables and the
top-level keys ``rad_s``, ``seed`` and ``jobs``.

Frequencies and rates are read as plain Hz and multiplied by 2*pi unless
``rad_s = true``. A key without an index (``kappa``) sets both modes;
giving it together with an indexed form (``kappa1``) is an error.

Example::

    [reduced]
    kappa = 215e3          # Hz
    gamma = 140
    cooperativity = 62.5
    gain_ratio = 0.26
    squeezing = 1.0
    occupancy = 0.5
"""

from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .exceptions import ConfigError, MechentError
from .params import (
    SPEED_OF_LIGHT,
    TWO_PI,
    PhysicalParams,
    ReducedParams,
    thermal_occupancy,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

OUTPUT_DIR_ENV = "MECHENT_OUTPUT_DIR"
FORMATS = ("csv", "json")
DEFAULT_SEED = 0
TOP_KEYS = {"physical", "reduced", "rad_s", "seed", "jobs", "sweep", "optimize", "output"}

_REDUCED_FREQ = {"kappa", "gamma", "coupling", "gain", "mech_freq"}
_REDUCED_PAIRED = {"kappa", "gamma", "coupling"}
_REDUCED_PLAIN = {
    "cooperativity", "coupling_ratio", "gain_ratio", "pump_phase", "pump_phase_pi",
    "squeezing", "squeezing_phase", "occupancy", "n1", "n2", "temperature",
}
_PHYS_FREQ = {"laser_freq", "cavity_freq", "mech_freq", "kappa", "gamma", "gain", "detuning"}
_PHYS_PAIRED = {"laser_freq", "cavity_freq", "mech_freq", "mass", "length", "kappa",
                "gamma", "power", "temperature", "detuning"}
_PHYS_PLAIN = {"gain", "gain_ratio", "pump_phase", "pump_phase_pi", "squeezing",
               "squeezing_phase", "wavelength"}


# --------------------------------------------------------------------------
# loading


def load_config(path) -> dict:
    """Parse a TOML or JSON file (by suffix; unknown suffixes try both)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror or exc}") from exc
    return loads_config(text, path.suffix.lower(), str(path))


def loads_config(text, suffix=".toml", origin="<config>") -> dict:
    def as_json():
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{origin}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc

    def as_toml():
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{origin}: {exc}") from exc

    if suffix == ".json":
        data = as_json()
    elif suffix == ".toml":
        data = as_toml()
    else:
        try:
            data = as_toml()
        except ConfigError:
            data = as_json()
    if not isinstance(data, dict):
        raise ConfigError(f"{origin}: top level must be a table/object")
    return data


def _number(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section}] {key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"[{section}] {key}: must be finite")
    return value


def _paired(section, table, name, scale, out, targets=None):
    """Expand ``name`` / ``name1`` / ``name2`` into two indexed values."""
    targets = targets or (f"{name}1", f"{name}2")
    shared = name in table
    for j, target in zip((1, 2), targets):
        key = f"{name}{j}"
        if key in table and shared:
            raise ConfigError(f"[{section}] give either {name!r} or {key!r}, not both")
        if key in table:
            out[target] = _number(section, key, table[key]) * scale
        elif shared:
            out[target] = _number(section, name, table[name]) * scale


def _check_keys(section, table, allowed):
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {', '.join(unknown)}")


def _exclusive(section, table, *names):
    given = [n for n in names if n in table]
    if len(given) > 1:
        raise ConfigError(f"[{section}] keys {', '.join(given)} are mutually exclusive")
    return given[0] if given else None


def parse_reduced(table: dict, rad_s=False) -> ReducedParams:
    sec = "reduced"
    allowed = set(_REDUCED_PLAIN) | {"gain", "mech_freq"}
    for n in _REDUCED_PAIRED:
        allowed |= {n, f"{n}1", f"{n}2"}
    _check_keys(sec, table, allowed)
    f = 1.0 if rad_s else TWO_PI
    vals = {}
    for n in ("kappa", "gamma"):
        _paired(sec, table, n, f, vals)
        if f"{n}1" not in vals or f"{n}2" not in vals:
            raise ConfigError(f"[{sec}] missing {n!r} (or {n}1 and {n}2)")
    kbar = math.sqrt(vals["kappa1"] * vals["kappa2"])
    gbar = math.sqrt(vals["gamma1"] * vals["gamma2"])

    which = _exclusive(sec, table, "coupling", "cooperativity", "coupling_ratio")
    if which and ("coupling1" in table or "coupling2" in table):
        raise ConfigError(f"[{sec}] {which!r} conflicts with coupling1/coupling2")
    if which == "cooperativity":
        g = math.sqrt(_number(sec, which, table[which]) * gbar * kbar / 4.0)
        vals["coupling1"] = vals["coupling2"] = g
    elif which == "coupling_ratio":
        vals["coupling1"] = vals["coupling2"] = _number(sec, which, table[which]) * kbar
    else:
        _paired(sec, table, "coupling", f, vals)
    vals.setdefault("coupling1", 0.0)
    vals.setdefault("coupling2", 0.0)

    which = _exclusive(sec, table, "gain", "gain_ratio")
    if which == "gain":
        vals["gain"] = _number(sec, which, table[which]) * f
    elif which == "gain_ratio":
        vals["gain"] = _number(sec, which, table[which]) * kbar

    which = _exclusive(sec, table, "pump_phase", "pump_phase_pi")
    if which:
        vals["pump_phase"] = _number(sec, which, table[which]) * (
            math.pi if which == "pump_phase_pi" else 1.0)
    for n in ("squeezing", "squeezing_phase"):
        if n in table:
            vals[n] = _number(sec, n, table[n])

    which = _exclusive(sec, table, "occupancy", "temperature", "n1")
    if which == "n1" or "n2" in table:
        if which not in (None, "n1"):
            raise ConfigError(f"[{sec}] {which!r} conflicts with n1/n2")
        for n in ("n1", "n2"):
            if n in table:
                vals[n] = _number(sec, n, table[n])
    elif which == "occupancy":
        vals["n1"] = vals["n2"] = _number(sec, which, table[which])
    elif which == "temperature":
        if "mech_freq" not in table:
            raise ConfigError(f"[{sec}] 'temperature' needs 'mech_freq'")
        om = _number(sec, "mech_freq", table["mech_freq"]) * f
        n = thermal_occupancy(om, _number(sec, which, table[which]))
        vals["n1"] = vals["n2"] = n
    try:
        return ReducedParams(**vals)
    except MechentError as exc:
        raise ConfigError(f"[{sec}] {exc}") from exc


def parse_physical(table: dict, rad_s=False) -> PhysicalParams:
    sec = "physical"
    allowed = set(_PHYS_PLAIN)
    for n in _PHYS_PAIRED:
        allowed |= {n, f"{n}1", f"{n}2"}
    _check_keys(sec, table, allowed)
    f = 1.0 if rad_s else TWO_PI
    vals = {}
    if "wavelength" in table:
        if any(k in table for k in ("laser_freq", "laser_freq1", "laser_freq2")):
            raise ConfigError(f"[{sec}] 'wavelength' conflicts with laser_freq")
        lam = _number(sec, "wavelength", table["wavelength"])
        if lam <= 0:
            raise ConfigError(f"[{sec}] wavelength must be > 0")
        vals["laser_freq1"] = vals["laser_freq2"] = TWO_PI * SPEED_OF_LIGHT / lam
    for n in _PHYS_PAIRED:
        _paired(sec, table, n, f if n in _PHYS_FREQ else 1.0, vals)
    which = _exclusive(sec, table, "gain", "gain_ratio")
    if which == "gain":
        vals["gain"] = _number(sec, which, table[which]) * f
    elif which == "gain_ratio":
        if "kappa1" not in vals or "kappa2" not in vals:
            raise ConfigError(f"[{sec}] 'gain_ratio' needs kappa")
        vals["gain"] = _number(sec, which, table[which]) * math.sqrt(
            vals["kappa1"] * vals["kappa2"])
    which = _exclusive(sec, table, "pump_phase", "pump_phase_pi")
    if which:
        vals["pump_phase"] = _number(sec, which, table[which]) * (
            math.pi if which == "pump_phase_pi" else 1.0)
    for n in ("squeezing", "squeezing_phase"):
        if n in table:
            vals[n] = _number(sec, n, table[n])
    for j in (1, 2):
        # default: red-detuned by the mechanical frequency, cavity at laser + detuning
        if f"cavity_freq{j}" not in vals and f"laser_freq{j}" in vals:
            det = vals.get(f"detuning{j}", vals.get(f"mech_freq{j}"))
            if det is not None:
                vals[f"cavity_freq{j}"] = vals[f"laser_freq{j}"] + det
    required = ("laser_freq", "cavity_freq", "mech_freq", "mass", "length", "kappa",
                "gamma", "power")
    missing = [f"{n}{j}" for n in required for j in (1, 2) if f"{n}{j}" not in vals]
    if missing:
        raise ConfigError(f"[{sec}] missing keys: {', '.join(missing)}")
    try:
        return PhysicalParams(**vals)
    except MechentError as exc:
        raise ConfigError(f"[{sec}] {exc}") from exc


@dataclass
class RunConfig:
    """Resolved config: one parameter set plus per-subcommand tables."""

    mode: str
    params: ReducedParams | PhysicalParams
    rad_s: bool = False
    seed: int = DEFAULT_SEED
    jobs: int = 1
    sweep: dict | None = None
    optimize: dict | None = None
    output: dict = field(default_factory=dict)

    @property
    def output_format(self):
        return self.output.get("format", "json")

    @property
    def output_path(self):
        return self.output.get("path")


def parse_config(data: dict) -> RunConfig:
    unknown = sorted(set(data) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {', '.join(unknown)}")
    modes = [m for m in ("physical", "reduced") if m in data]
    if len(modes) != 1:
        raise ConfigError("config needs exactly one of [physical] or [reduced]")
    mode = modes[0]
    rad_s = data.get("rad_s", False)
    if not isinstance(rad_s, bool):
        raise ConfigError("rad_s must be true or false")
    params = (parse_physical if mode == "physical" else parse_reduced)(data[mode], rad_s)
    seed = data.get("seed", DEFAULT_SEED)
    jobs = data.get("jobs", 1)
    for name, v in (("seed", seed), ("jobs", jobs)):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{name} must be an integer")
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    output = data.get("output", {})
    _check_keys("output", output, {"format", "path"})
    if output.get("format", "json") not in FORMATS:
        raise ConfigError(f"[output] format must be one of {FORMATS}")
    for sec in ("sweep", "optimize"):
        if sec in data and not isinstance(data[sec], dict):
            raise ConfigError(f"[{sec}] must be a table")
    return RunConfig(mode, params, rad_s, seed, jobs, data.get("sweep"),
                     data.get("optimize"), dict(output))


def read_run_config(path) -> RunConfig:
    return parse_config(load_config(path))


# --------------------------------------------------------------------------
# sweep specs <-> config tables


def params_to_config(params) -> dict:
    """Config fragment (angular units, ``rad_s = true``) that re-parses exactly."""
    if isinstance(params, PhysicalParams):
        return {"rad_s": True, "physical": asdict(params)}
    d = asdict(params)
    out = {k: d[k] for k in ("kappa1", "kappa2", "gamma1", "gamma2", "coupling1",
                             "coupling2", "gain", "pump_phase", "squeezing",
                             "squeezing_phase", "n1", "n2")}
    return {"rad_s": True, "reduced": out}


def spec_to_config(spec) -> dict:
    cfg = params_to_config(spec.base)
    cfg["jobs"] = int(spec.jobs)
    cfg["sweep"] = {
        "axes": [ax.as_dict() for ax in spec.axes],
        "columns": list(spec.columns),
        "mech_freq": spec.mech_freq,
    }
    return cfg


def sweep_spec_from_config(cfg: RunConfig, table: dict | None = None):
    from .sweep import RESULT_COLUMNS, Axis, SweepSpec, unit_of
    from .params import REF_MECH_FREQ

    table = cfg.sweep if table is None else table
    if not table:
        raise ConfigError("config has no [sweep] table")
    _check_keys("sweep", table, {"axes", "columns", "mech_freq"})
    scale = 1.0 if cfg.rad_s else TWO_PI
    axes = []
    raw_axes = table.get("axes")
    if not isinstance(raw_axes, list):
        raise ConfigError("[sweep] axes must be a list of tables")
    for k, ax in enumerate(raw_axes):
        _check_keys(f"sweep.axes[{k}]", ax, {"name", "min", "max", "count", "scale", "values"})
        if "name" not in ax:
            raise ConfigError(f"[sweep.axes[{k}]] missing 'name'")
        fac = scale if unit_of(ax["name"]) == "rad/s" else 1.0
        try:
            if "values" in ax:
                axes.append(Axis(ax["name"], values=tuple(float(v) * fac for v in ax["values"])))
            else:
                axes.append(Axis(ax["name"], float(ax["min"]) * fac, float(ax["max"]) * fac,
                                 ax.get("count", 101), ax.get("scale", "linear")))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"[sweep.axes[{k}]] incomplete axis: {exc}") from exc
        except MechentError as exc:
            raise ConfigError(f"[sweep.axes[{k}]] {exc}") from exc
    mech = table.get("mech_freq")
    mech = REF_MECH_FREQ if mech is None else _number("sweep", "mech_freq", mech) * scale
    try:
        return SweepSpec(cfg.params, tuple(axes), tuple(table.get("columns", RESULT_COLUMNS)),
                         mech, cfg.jobs)
    except MechentError as exc:
        raise ConfigError(f"[sweep] {exc}") from exc


# --------------------------------------------------------------------------
# output


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV) or ".")


def resolve_output(path, default_name) -> Path:
    """Explicit path as given; otherwise ``default_name`` in the default directory."""
    return Path(path) if path else default_output_dir() / default_name


def write_atomic(path, text):
    """Write via a sibling temp file and rename; nothing partial is left behind."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    except OSError as exc:
        raise MechentError(f"{path}: cannot create output: {exc.strerror or exc}") from exc
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException as exc:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        if isinstance(exc, OSError):
            raise MechentError(f"{path}: write failed: {exc.strerror or exc}") from exc
        raise
    return path


def to_json(obj, **kw) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, default=_json_default, **kw) + "\n"


def _json_default(obj):
    import numpy as np

    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")
