"""``mechent`` command-line interface.

Exit codes: 0 on success, 1 when a strict command refuses an unstable
point (or elimination validation fails), 2 for invalid configs or
arguments.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from ._version import __version__
from .covariance import solve_covariance_cramer, solve_lyapunov_generic
from .effective import build_diffusion, build_drift, build_effective_model, matrix_to_json
from .exceptions import ConfigError, MechentError, ParameterError, UnstableSystemError
from .full_model import validate_elimination
from .io import (
    DEFAULT_SEED,
    params_to_config,
    read_run_config,
    resolve_output,
    sweep_spec_from_config,
    to_json,
    write_atomic,
)
from .optimize import OptimizeSpec, maximize_negativity
from .params import REF_GAMMA, REF_KAPPA, PhysicalParams, ReducedParams, reduce
from .pipeline import evaluate
from .stability import routh_hurwitz
from .sweep import PRESET_IDS, figure_preset, reproduce_figure, run_sweep

EXIT_OK, EXIT_UNSTABLE, EXIT_CONFIG = 0, 1, 2

# default single point: C = 62.5, r = 1, n = 0.5 at Lambda = 0.26 kappa, theta = 0
_POINT_DEFAULTS = dict(cooperativity=62.5, gain_ratio=0.26, pump_phase_pi=0.0,
                       squeezing=1.0, occupancy=0.5)


class _UsageError(Exception):
    pass


def _point_args(p):
    g = p.add_argument_group("parameter point (used when no --config is given)")
    g.add_argument("-c", "--config", type=Path, help="TOML or JSON config file")
    g.add_argument("--cooperativity", type=float)
    g.add_argument("--gain-ratio", type=float, help="Lambda / kappa")
    g.add_argument("--pump-phase-pi", type=float, help="theta / pi")
    g.add_argument("--squeezing", type=float, help="r")
    g.add_argument("--squeezing-phase", type=float, default=0.0, help="phi (rad)")
    g.add_argument("--occupancy", type=float, help="thermal phonon number n")


def _flag_values(args):
    return {k: getattr(args, k) for k in _POINT_DEFAULTS if getattr(args, k, None) is not None}


def _load_point(args, **defaults):
    """(params, run config or None) from --config or the point flags."""
    flags = _flag_values(args)
    if args.config is not None:
        if flags:
            raise _UsageError("give either --config or point flags, not both")
        cfg = read_run_config(args.config)
        return cfg.params, cfg
    vals = {**_POINT_DEFAULTS, **defaults, **flags}
    return ReducedParams.symmetric(
        cooperativity=vals["cooperativity"], gain_ratio=vals["gain_ratio"],
        pump_phase=vals["pump_phase_pi"] * math.pi, squeezing=vals["squeezing"],
        squeezing_phase=args.squeezing_phase, occupancy=vals["occupancy"],
        kappa=REF_KAPPA, gamma=REF_GAMMA,
    ), None


def _emit(obj, out, summary):
    """JSON to ``out`` (atomically) or stdout."""
    text = to_json(obj)
    if out:
        path = write_atomic(out, text)
        print(f"{summary} -> {path}")
    else:
        sys.stdout.write(text)


def _header(params):
    return {"version": __version__, "config": params_to_config(params)}


# --------------------------------------------------------------------------
# subcommands


def cmd_compute(args):
    params, _ = _load_point(args)
    res = evaluate(params, strict=not args.lenient)
    _emit({**_header(params), **res.as_dict()}, args.out,
          f"stable={res.stable} E_N={res.log_negativity:.6g}")
    return EXIT_OK


def cmd_stability(args):
    params, _ = _load_point(args)
    rep = routh_hurwitz(build_effective_model(params))
    _emit({**_header(params), **rep.as_dict()}, args.out, f"stable={rep.stable}")
    return EXIT_OK


def cmd_dump_matrices(args):
    params, _ = _load_point(args)
    m = build_effective_model(params)
    obj = {**_header(params),
           "drift": matrix_to_json(build_drift(m), name="drift"),
           "diffusion": matrix_to_json(build_diffusion(m, printed_f14=args.printed_f14),
                                       name="diffusion"),
           "printed_f14": args.printed_f14}
    _emit(obj, args.out, "drift and diffusion")
    return EXIT_OK


def cmd_dump_covariance(args):
    params, _ = _load_point(args)
    m = build_effective_model(params)
    if not routh_hurwitz(m).stable:
        raise UnstableSystemError("unstable point: no steady-state covariance")
    diff = build_diffusion(m)
    if args.method == "cramer":
        cov = solve_covariance_cramer(m, diff)
    else:
        cov = solve_lyapunov_generic(build_drift(m), diff)
    _emit({**_header(params), "covariance": cov.as_dict()}, args.out, f"covariance ({cov.method})")
    return EXIT_OK


def _write_table(table, out, fmt, default_name):
    path = resolve_output(out, default_name)
    if fmt == "json":
        obj = {**table.provenance(), "columns": table.header(),
               "rows": [[table.data[c][k].item() if hasattr(table.data[c][k], "item")
                         else table.data[c][k] for c in table.columns]
                        for k in range(len(table))]}
        stable = table.data["stable"]
        ent = table.columns.index("entangled") if "entangled" in table.columns else -1
        for row, ok in zip(obj["rows"], stable):
            for k, v in enumerate(row):
                if (isinstance(v, float) and math.isnan(v)) or (k == ent and not ok):
                    row[k] = None
        write_atomic(path, to_json(obj))
    else:
        write_atomic(path, table.to_csv())
    summary_path = path.with_suffix(".summary.json")
    return path, summary_path


def cmd_sweep(args):
    if (args.preset is None) == (args.config is None):
        raise _UsageError("sweep needs exactly one of --preset or --config")
    fmt = "csv"
    if args.preset:
        spec = figure_preset(args.preset, args.points).spec
        if args.jobs:
            spec = type(spec)(spec.base, spec.axes, spec.columns, spec.mech_freq, args.jobs)
    else:
        cfg = read_run_config(args.config)
        spec = sweep_spec_from_config(cfg)
        if args.jobs:
            spec = type(spec)(spec.base, spec.axes, spec.columns, spec.mech_freq, args.jobs)
        fmt = cfg.output_format
        args.out = args.out or cfg.output_path
    fmt = args.format or fmt
    table = run_sweep(spec, preset=args.preset)
    path, spath = _write_table(table, args.out, fmt, f"{args.preset or 'sweep'}.{fmt}")
    write_atomic(spath, to_json(table.summary()))
    print(f"{len(table)} rows, {int(table.data['stable'].sum())} stable -> {path}")
    return EXIT_OK


def cmd_figure(args):
    res = reproduce_figure(args.id, points=args.points, jobs=args.jobs or 1)
    path, spath = _write_table(res.table, args.out, "csv", f"{args.id}.csv")
    write_atomic(spath, to_json(res.summary()))
    status = "all signature checks passed" if res.passed else "SIGNATURE CHECK FAILED"
    print(f"{args.id}: {len(res.table)} rows, {status} -> {path}")
    for c in res.checks:
        print(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}")
    return EXIT_OK


def _parse_free(items):
    free = {}
    for item in items:
        try:
            name, lo, hi = item.split(":")
            free[name] = (float(lo), float(hi))
        except ValueError as exc:
            raise _UsageError(f"--free expects name:low:high, got {item!r}") from exc
    return free


def cmd_optimize(args):
    params, cfg = _load_point(args)
    table = dict((cfg.optimize or {}) if cfg else {})
    allowed = {"free", "stability", "tol", "max_iter", "multistart", "grid", "penalty"}
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"[optimize] unknown keys: {', '.join(unknown)}")
    free = _parse_free(args.free) if args.free else {
        k: tuple(v) for k, v in table.get("free", {}).items()}
    if not free:
        raise _UsageError("optimize needs free parameters (--free or [optimize] free)")
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else DEFAULT_SEED)
    opts = {k: table[k] for k in ("stability", "tol", "max_iter", "multistart", "grid",
                                  "penalty") if k in table}
    for k in ("stability", "tol", "max_iter", "multistart"):
        if getattr(args, k) is not None:
            opts[k] = getattr(args, k)
    base = reduce(params) if isinstance(params, PhysicalParams) else params
    spec = OptimizeSpec(base, free, seed=seed, **opts)
    res = maximize_negativity(spec)
    obj = {**_header(base), "seed": seed, "free": {k: list(v) for k, v in spec.free.items()},
           "stability_mode": spec.stability, **res.as_dict()}
    if args.trace:
        obj["trace"] = [{"params": t.params, "E_N": t.log_negativity, "stable": t.stable,
                         "stage": t.stage} for t in res.trace]
    _emit(obj, args.out, f"E_N*={res.log_negativity:.6g} at {res.argmax}")
    return EXIT_OK


def cmd_validate(args):
    params, _ = _load_point(args, squeezing=1.0, occupancy=0.5, gain_ratio=0.26)
    if args.g_over_kappa is not None:
        if not isinstance(params, ReducedParams) or args.config is not None:
            raise _UsageError("--g-over-kappa applies to flag-specified points only")
        g = args.g_over_kappa * params.kappa
        params = params.replace(coupling1=g, coupling2=g)
    rep = validate_elimination(params, tol=args.tol)
    obj = {**_header(params if isinstance(params, ReducedParams) else reduce(params)),
           **rep.as_dict()}
    _emit(obj, args.out, f"passed={rep.passed} deviation={rep.max_rel_cov_deviation:.3g}")
    return EXIT_OK if rep.passed else EXIT_UNSTABLE


# --------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="mechent", description=(
        "Entanglement of two mirrors coupled through a parametrically pumped, "
        "squeezed-light-driven cavity pair."))
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_, point=True, out=True):
        sp = sub.add_parser(name, help=help_)
        if point:
            _point_args(sp)
        if out:
            sp.add_argument("-o", "--out", type=Path, help="output file (default: stdout)")
        sp.set_defaults(func=func)
        return sp

    sp = add("compute", cmd_compute, "full pipeline at one point")
    sp.add_argument("--lenient", action="store_true",
                    help="report unstable points with masked E_N instead of failing")
    add("stability", cmd_stability, "Routh-Hurwitz report")
    sp = add("dump-matrices", cmd_dump_matrices, "drift and diffusion matrices")
    sp.add_argument("--printed-f14", action="store_true",
                    help="use the alternative F14 sign (comparison only)")
    sp = add("dump-covariance", cmd_dump_covariance, "steady-state covariance")
    sp.add_argument("--method", choices=("generic", "cramer"), default="generic")

    sp = add("sweep", cmd_sweep, "grid sweep to CSV/JSON", point=False)
    sp.add_argument("-c", "--config", type=Path, help="config with a [sweep] table")
    sp.add_argument("--preset", choices=PRESET_IDS)
    sp.add_argument("--points", type=int, default=101, help="points per preset axis")
    sp.add_argument("--format", choices=("csv", "json"))
    sp.add_argument("--jobs", type=int, help="worker threads")

    sp = add("figure", cmd_figure, "reproduce a figure preset with signature checks",
             point=False)
    sp.add_argument("id", choices=PRESET_IDS)
    sp.add_argument("--points", type=int, default=101)
    sp.add_argument("--jobs", type=int)

    sp = add("optimize", cmd_optimize, "maximise E_N over a box")
    sp.add_argument("--free", action="append", metavar="NAME:LOW:HIGH",
                    help="free parameter, e.g. pump_phase:0:3.14159 (repeatable)")
    sp.add_argument("--stability", choices=("reject", "penalty"))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--max-iter", dest="max_iter", type=int)
    sp.add_argument("--multistart", type=int)
    sp.add_argument("--trace", action="store_true", help="include every evaluation")

    sp = add("validate", cmd_validate, "full 8x8 model versus the effective model")
    sp.add_argument("--g-over-kappa", type=float, help="coupling G/kappa (<= 0.1)")
    sp.add_argument("--tol", type=float, default=0.02)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, _UsageError) as exc:
        print(f"mechent: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParameterError as exc:
        print(f"mechent: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnstableSystemError as exc:
        print(f"mechent: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except MechentError as exc:
        print(f"mechent: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
