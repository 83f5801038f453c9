"""``coalsim`` command line.

Exit status: 0 success, 1 verification failure, 2 usage error, 3 regime or
domain error.  A JSON config file (``--config``) supplies defaults for any
long option; explicit flags win.  ``--save-config`` writes the resolved
options in canonical form (sorted keys, two-space indent) and exits.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, limits
from .emit import csv_bytes, emit, emit_rates, ensemble_table, json_bytes
from .errors import CoalsimError
from .harness import (
    STAR_GRID_START,
    Rescaling,
    converge_block_count,
    converge_mean_stays_infinite,
    converge_spectrum,
)
from .rates import BetaParams, build_rate_table
from .sim import _backend
from .sim.ensemble import ExperimentSpec, SeedPolicy, run_ensemble

EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3

# options that never go into a saved config
_NOT_CONFIG = {"command", "config", "save_config", "func"}


class UsageError(Exception):
    pass


def parse_grid(text: str) -> np.ndarray:
    """``t0:t1:k`` -> k evenly spaced points from t0 to t1."""
    try:
        t0, t1, k = text.split(":")
        t0, t1, k = float(t0), float(t1), int(k)
    except ValueError:
        raise UsageError(f"grid must look like t0:t1:k, got {text!r}") from None
    if k < 1 or t1 < t0:
        raise UsageError(f"grid needs k >= 1 and t1 >= t0, got {text!r}")
    return np.linspace(t0, t1, k) if k > 1 else np.array([t0])


def parse_n_list(text: str) -> list[int]:
    try:
        ns = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"n-list must be comma separated integers, got {text!r}") from None
    if not ns:
        raise UsageError("n-list is empty")
    return ns


def _params(args) -> BetaParams:
    if args.kingman:
        return BetaParams.kingman()
    if args.a is None or args.b is None:
        raise UsageError("give --a and --b, or --kingman")
    return BetaParams(args.a, args.b)


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("COALSIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"COALSIM_THREADS must be an integer, got {env!r}") from None
    return 1


def _write(args, data: bytes) -> None:
    out = args.out
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    Path(out).write_bytes(data)


def resolved_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


def canonical_config(cfg: dict) -> bytes:
    return (json.dumps(cfg, sort_keys=True, indent=2) + "\n").encode()


def _metadata(args, **extra) -> dict:
    meta = {"version": __version__, "command": args.command, "config": resolved_config(args), "backend": _backend.BACKEND}
    meta.update(extra)
    return meta


# ---------------------------------------------------------------- commands

def cmd_rates(args) -> int:
    table = build_rate_table(_params(args), args.n_max)
    if args.row is not None and not (2 <= args.row <= args.n_max):
        raise UsageError(f"--row must lie in 2..{args.n_max}")
    _write(args, emit_rates(table, args.row, args.format))
    return 0


_CURVES = {"c": "c", "cstar": "c_star", "mean": "m_mean", "spectrum": "spectrum_i", "genfun": "gen_fun_G"}


def cmd_limits(args) -> int:
    params = _params(args)
    kind = _CURVES[args.curve]
    if kind == "spectrum_i" and args.i is None:
        raise UsageError("--curve spectrum needs --i")
    if kind == "gen_fun_G" and args.x is None:
        raise UsageError("--curve genfun needs --x")
    curve = limits.LimitCurve(kind, params, alpha=args.alpha, i=args.i, x=args.x)
    grid = parse_grid(args.t_grid)
    values = curve.evaluate(grid)
    if args.format == "json":
        _write(args, json_bytes({"t": grid, "value": values, "meta": _metadata(args)}))
    else:
        _write(args, csv_bytes(["t", "value"], zip(grid.tolist(), values.tolist())))
    return 0


def _simulate(args, kind: str) -> int:
    params = _params(args)
    grid = parse_grid(args.grid)
    if args.alpha is not None:
        a = 0.0 if params.is_kingman else params.a
        beta = (a - 1.0) if kind == "spectrum" else (1.0 - a) * args.alpha
        if params.a > 1 and kind == "count":
            beta = 0.0
        r = Rescaling(args.alpha, beta, args.tau_const)
        r.check(params, "spectrum" if kind == "spectrum" else "mean")
        clock = grid * r.tau(args.n)
        scale = float(args.n) ** args.alpha
    else:
        r = None
        clock = grid
        scale = 1.0
    table = build_rate_table(params, args.n)
    spec = ExperimentSpec(table, args.n, clock, kind=kind, d=args.d if kind == "spectrum" else 1, t_max=args.t_max)
    policy = SeedPolicy(args.seed)
    stats = run_ensemble(spec, args.replicates, policy, _threads(args))
    header, rows = ensemble_table(stats, grid=grid, scale=scale)
    meta = _metadata(
        args,
        params=params.to_dict(),
        seed_policy=policy.to_dict(),
        rescaling=None if r is None else r.to_dict(),
        columns=header,
    )
    if args.format == "json":
        _write(args, json_bytes({"meta": meta, "rows": rows}))
    else:
        _write(args, csv_bytes(header, rows))
        if args.out not in (None, "-"):
            Path(str(args.out) + ".json").write_bytes(json_bytes(meta))
    return 0


def cmd_simulate(args) -> int:
    return _simulate(args, "count")


def cmd_spectrum(args) -> int:
    return _simulate(args, "spectrum")


def cmd_converge(args) -> int:
    params = _params(args)
    ns = parse_n_list(args.n_list)
    threads = _threads(args)
    if args.experiment == "count":
        default = f"{STAR_GRID_START}:3:64" if args.alpha != -1 else "0:3:64"
        grid = parse_grid(args.grid or default)
        rep = converge_block_count(params, args.alpha, ns, args.replicates, grid, args.seed,
                                   tau_const=args.tau_const, tolerance=args.tolerance, parallelism=threads)
    elif args.experiment == "mean":
        grid = parse_grid(args.grid or "0:1:64")
        rep = converge_mean_stays_infinite(params, ns, args.replicates, grid, args.seed,
                                           tolerance=args.tolerance, parallelism=threads)
    else:
        grid = parse_grid(args.grid or "0:2:64")
        rep = converge_spectrum(params, args.d, ns, args.replicates, grid, args.seed,
                                tau_const=args.tau_const, tolerance=args.tolerance, parallelism=threads)
    rep.config["resolved"] = resolved_config(args)
    csv_path = args.csv
    if csv_path is None and args.out not in (None, "-"):
        csv_path = str(Path(args.out).with_suffix(".csv"))
        if csv_path == args.out:
            csv_path += ".errors.csv"
    if csv_path:
        Path(csv_path).write_bytes(emit(rep, "csv"))
    _write(args, emit(rep, "json"))
    return 0


def cmd_verify(args) -> int:
    from .verify import run_suite

    ok = run_suite(quick=args.quick, statistical=args.statistical, log=lambda line: print(line, flush=True))
    print("verify: all checks passed" if ok else "verify: FAILURES", flush=True)
    return 0 if ok else EXIT_VERIFY


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser, params: bool = True) -> None:
    if params:
        p.add_argument("--a", type=float, help="beta parameter a")
        p.add_argument("--b", type=float, help="beta parameter b")
        p.add_argument("--kingman", action="store_true", help="Kingman's coalescent (pair mergers only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker processes (default: $COALSIM_THREADS or 1)")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", default=None, help="JSON file of option defaults")
    p.add_argument("--save-config", default=None, help="write the resolved options to this file and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coalsim", description="Beta-coalescent rates, limits and simulation.")
    parser.add_argument("--version", action="version", version=f"coalsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="merger rates lambda_{m,k}")
    _common(p)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--row", type=int, default=None, help="emit only row m")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("limits", help="closed-form limit curves on a time grid")
    _common(p)
    p.add_argument("--curve", choices=sorted(_CURVES), required=True)
    p.add_argument("--alpha", type=float, default=-1.0)
    p.add_argument("--i", type=int, default=None, help="size class for --curve spectrum")
    p.add_argument("--x", type=float, default=None, help="argument of the generating function")
    p.add_argument("--t-grid", required=True, help="t0:t1:k")
    p.set_defaults(func=cmd_limits)

    for name, func, help_ in (("simulate", cmd_simulate, "block-count ensemble"), ("spectrum", cmd_spectrum, "size-spectrum ensemble")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--replicates", type=int, required=True)
        p.add_argument("--t-max", type=float, default=None)
        p.add_argument("--grid", required=True, help="t0:t1:k (rescaled time when --alpha is given)")
        p.add_argument("--alpha", type=float, default=None, help="report n^alpha X(t tau_n) instead of raw counts")
        p.add_argument("--tau-const", type=float, default=1.0)
        if name == "spectrum":
            p.add_argument("--d", type=int, required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("converge", help="convergence of ensembles to their limits")
    _common(p)
    p.add_argument("experiment", choices=("count", "mean", "spectrum"))
    p.add_argument("--alpha", type=float, default=-1.0)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--n-list", default="100,1000,10000")
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--grid", default=None)
    p.add_argument("--tau-const", type=float, default=1.0)
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--csv", default=None, help="per-(n, t) error CSV (default: --out with a .csv suffix)")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("verify", help="run the self-check suites")
    _common(p, params=False)
    p.add_argument("--quick", action="store_true", help="reduced sizes")
    p.add_argument("--statistical", action="store_true", help="also run the simulation tests")
    p.set_defaults(func=cmd_verify)
    return parser


def _config_path(argv: list[str]) -> str | None:
    for k, tok in enumerate(argv):
        if tok == "--config" and k + 1 < len(argv):
            return argv[k + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    path = _config_path(argv)
    command = next((tok for tok in argv if not tok.startswith("-")), None)
    subs = parser._subparsers._group_actions[0].choices
    if path is not None and command in subs:
        try:
            cfg = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        sub = subs[command]
        actions = {a.dest: a for a in sub._actions}
        unknown = sorted(set(cfg) - set(actions) - _NOT_CONFIG)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for key, value in cfg.items():
            if key in _NOT_CONFIG:
                continue
            # a value from the config satisfies a required flag
            actions[key].required = False
            actions[key].default = value
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.save_config:
            Path(args.save_config).write_bytes(canonical_config(resolved_config(args)))
            return 0
        return args.func(args)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"coalsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CoalsimError as exc:
        print(f"coalsim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"coalsim: invalid value: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
