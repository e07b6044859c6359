"""Command-line front door: ``axbl {verify,simulate,probe,certify,norms}``.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error,
3 run aborted (partial outputs are still written).  Reports are JSON and
time series are CSV; every file is written to a temporary name and renamed.
With ``--out DIR`` a ``manifest.json`` lists the command, configuration,
code version, timestamps, artifacts and a pass/fail checklist keyed by
acceptance-criterion identifier.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .battery import battery_passed, identity_battery
from .commutators import reports_json, run_probe_suite
from .degiorgi import BRANCHES, certificate_json, certify_sup_bound, load_trace, suite_report
from .dyadic import besov_norm, sobolev_norm
from .lorentz import lorentz_norm
from .solver import MODES, BlowUpError, ConfigError, initial_data, load_config, run, run_summary
from .spectral import GridSpec, VectorField, dumps_json, lebesgue_norm, read_snapshot

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3

# identity-battery records grouped under the acceptance criterion they serve
VERIFY_CRITERIA = {
    "AC1": ("partition_of_unity", "partition_squares_bounds"),
    "AC2": ("littlewood_paley_reconstruction", "square_function_ratio"),
    "AC3": ("riesz_form_vs_cylindrical",),
    "AC4": ("moment_inverse_laplacian_", "riesz_moment_"),
    "AC5": ("biot_savart_", "zeta_"),
    "AC6": ("block_coordinate_commutator", "block_commutator_slope"),
    "AC7": ("lorentz_diagonal_equals_lebesgue",),
}

HEAT_DECAY_RANGE = (-0.85, -0.65)


class UsageError(Exception):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def dumps(obj) -> str:
    return dumps_json(obj)


def write_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text if text.endswith("\n") else text + "\n")
    os.replace(tmp, path)
    return path


def write_manifest(out: Path, command: str, args: argparse.Namespace, started: str, artifacts: list,
                   checklist: dict, config: dict | None = None, seed: int | None = None) -> Path:
    """Record of one invocation; only files that exist are listed."""
    echo = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "command": command,
        "arguments": echo,
        "config": config or {},
        "code_version": __version__,
        "seed": seed,
        "started": started,
        "finished": _now(),
        "artifacts": [str(p) for p in artifacts if Path(p).exists()],
        "checklist": checklist,
    }
    return write_atomic(out / "manifest.json", dumps(manifest))


def _grid(args) -> GridSpec:
    try:
        return GridSpec(args.n, args.L)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _emit(args, name: str, text: str, artifacts: list) -> None:
    if args.out:
        artifacts.append(write_atomic(Path(args.out) / name, text))
    else:
        print(text)


# -- verify ------------------------------------------------------------------


def verify_checklist(records: list[dict]) -> dict:
    out = {}
    for crit, prefixes in VERIFY_CRITERIA.items():
        hits = [r for r in records if r["identity"].startswith(prefixes)]
        if hits:
            out[crit] = all(r["pass"] for r in hits)
    return out


def cmd_verify(args) -> int:
    g = _grid(args)
    started = _now()
    try:
        records = identity_battery(g, args.tolerance_scale)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ok = battery_passed(records)
    report = {"n": g.n, "L": g.L, "tolerance_scale": args.tolerance_scale, "pass": ok, "identities": records}
    artifacts = []
    _emit(args, "verify_report.json", dumps(report), artifacts)
    if args.out:
        write_manifest(Path(args.out), "verify", args, started, artifacts, verify_checklist(records))
    for r in records:
        if not r["pass"]:
            print(f"FAILED {r['identity']}: {r['value']:.3e} > {r['tolerance']} (n={r['n']}, L={r['L']})",
                  file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


# -- simulate ----------------------------------------------------------------


def simulate_checklist(summary: dict) -> dict:
    mode = summary["config"]["mode"]
    checks = summary["checklist"]
    out = {}
    if mode == "euler" and "zeta_L3_drift" in checks:
        out["AC9"] = checks["zeta_L3_drift"]["pass"]
    energy = [v["pass"] for k, v in checks.items() if k == "energy_balance" or k.startswith(("max_principle", "velocity"))]
    if energy:
        out["AC10"] = all(energy)
    expo = summary["fitted"].get("decay_exponent_Linf")
    if mode == "heat" and expo is not None:
        out["AC11"] = HEAT_DECAY_RANGE[0] <= expo <= HEAT_DECAY_RANGE[1]
    return out


def cmd_simulate(args) -> int:
    overrides = {"grid.n": args.n, "grid.L": args.L, "mode": args.mode, "time.T": args.T}
    try:
        cfg, init = load_config(args.config, overrides)
        v0, rho0 = initial_data(cfg.grid, init)
    except ConfigError as exc:
        for line, msg in exc.problems:
            where = f"{args.config}:{line}" if line else str(args.config)
            print(f"{where}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (TypeError, ValueError) as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out or cfg.out_dir or "axbl_run")
    cfg = replace(cfg, out_dir=str(out))
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    try:
        result = run(cfg, v0, rho0)
    except (BlowUpError, FloatingPointError) as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    summary = run_summary(cfg, result, init, tuple(args.decay_window) if args.decay_window else None)
    artifacts = [result.series.write_csv(out / "diagnostics.csv"), write_atomic(out / "summary.json", dumps(summary))]
    artifacts += result.checkpoints
    checklist = simulate_checklist(summary)
    write_manifest(out, "simulate", args, started, artifacts, checklist, summary["config"])
    if result.status != "completed":
        print(f"run aborted: {result.message}; partial outputs in {out}", file=sys.stderr)
        return EXIT_ABORT
    failed = [k for k, v in result.checklist.items() if not v["pass"]]
    for k in failed:
        print(f"FAILED {k}: {result.checklist[k]}", file=sys.stderr)
    print(f"{result.steps} steps to t = {result.state.time:.6g}; outputs in {out}")
    return EXIT_FAIL if failed else EXIT_OK


# -- probe -------------------------------------------------------------------


def cmd_probe(args) -> int:
    g = _grid(args)
    if args.ensemble < 1:
        raise UsageError("--ensemble must be at least 1")
    started = _now()
    reports = run_probe_suite(args.seed, args.ensemble, g)
    finite = all(r.ratio and all(math.isfinite(x) for x in r.ratio) for r in reports)
    artifacts = []
    _emit(args, "probe_report.json", reports_json(reports, args.seed), artifacts)
    if args.out:
        write_manifest(Path(args.out), "probe", args, started, artifacts, {"AC8": finite}, seed=args.seed)
    return EXIT_OK if finite else EXIT_FAIL


# -- certify -----------------------------------------------------------------


def cmd_certify(args) -> int:
    started = _now()
    artifacts = []
    if args.suite:
        report = suite_report(rel_resolution=args.resolution)
        ok = report["soundness_violations"] == 0 and report["recursion_audit"]["pass"]
        _emit(args, "certify_suite.json", dumps(report), artifacts)
    else:
        try:
            trace = load_trace(args.trace, r=args.r)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from None
        cert = certify_sup_bound(trace, args.branch, args.resolution)
        ok = cert.sound is True
        _emit(args, "certificate.json", certificate_json(cert), artifacts)
    if args.out:
        write_manifest(Path(args.out), "certify", args, started, artifacts, {"AC14": ok})
    return EXIT_OK if ok else EXIT_FAIL


# -- norms -------------------------------------------------------------------


def cmd_norms(args) -> int:
    try:
        u, meta = read_snapshot(args.snapshot)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if isinstance(u, VectorField):
        raise UsageError("norms act on scalar snapshots")
    if args.lorentz:
        p, q = args.lorentz
        name, value = f"lorentz L^({p:g},{q:g})", lorentz_norm(u, p, q)
    elif args.lebesgue is not None:
        name, value = f"lebesgue L^{args.lebesgue:g}", lebesgue_norm(u, args.lebesgue)
    elif args.besov:
        s, p, r = args.besov
        name, value = f"besov B^{s:g}_({p:g},{r:g})", besov_norm(u, s, p, r)
    else:
        name, value = f"sobolev H^{args.sobolev:g}", sobolev_norm(u, args.sobolev)
    if args.json:
        print(dumps({"norm": name, "value": value, "n": u.grid.n, "L": u.grid.L, "time": meta.get("time")}))
    else:
        print(repr(float(value)))
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _exponent(text: str) -> float:
    low = text.lower()
    if low in ("inf", "infinity"):
        return math.inf
    return float(text)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="axbl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"axbl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def grid_flags(p, n, L=8.0):
        p.add_argument("--n", type=int, default=n, help=f"grid points per axis (default {n})")
        p.add_argument("--L", type=float, default=L, help=f"box half-width (default {L:g})")

    p = sub.add_parser("verify", help="run the identity battery")
    grid_flags(p, 64)
    p.add_argument("--tolerance-scale", type=float, default=1.0, help="multiply residual tolerances")
    p.add_argument("--out", help="output directory (default: report on stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="run the solver from a configuration file")
    p.add_argument("--config", required=True, help="key = value configuration file")
    p.add_argument("--n", type=int, help="override grid.n")
    p.add_argument("--L", type=float, help="override grid.L")
    p.add_argument("--T", type=float, help="override time.T")
    p.add_argument("--mode", choices=MODES, help="override mode")
    p.add_argument("--decay-window", type=float, nargs=2, metavar=("T0", "T1"),
                   help="heat mode: time window of the decay fit")
    p.add_argument("--out", help="output directory (default: output.dir or ./axbl_run)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("probe", help="commutator and product probes over a random ensemble")
    grid_flags(p, 32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ensemble", type=int, default=50)
    p.add_argument("--out", help="output directory (default: report on stdout)")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("certify", help="level-set certification of sup bounds")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace", help="directory of f_*.axbl or solver rho_*.axbl snapshots")
    src.add_argument("--suite", action="store_true", help="certify and audit the built-in ten-trace suite")
    p.add_argument("--branch", choices=BRANCHES, default="full")
    p.add_argument("--resolution", type=float, default=0.01, help="relative bisection resolution")
    p.add_argument("--r", type=float, default=2.0, help="Lebesgue exponent of the initial-data norm")
    p.add_argument("--out", help="output directory (default: transcript on stdout)")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("norms", help="norms of a scalar snapshot")
    p.add_argument("snapshot")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--lorentz", type=_exponent, nargs=2, metavar=("P", "Q"))
    which.add_argument("--lebesgue", type=_exponent, metavar="P")
    which.add_argument("--besov", type=_exponent, nargs=3, metavar=("S", "P", "R"))
    which.add_argument("--sobolev", type=float, metavar="S")
    p.add_argument("--json", action="store_true", help="print a JSON record with the grid")
    p.set_defaults(func=cmd_norms)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"axbl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FloatingPointError) as exc:
        print(f"axbl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
