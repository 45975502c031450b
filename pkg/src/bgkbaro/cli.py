"""Command line: ``bgkbaro {simulate,limit-study,euler,verify} --config PATH``.

Exit status is 0 on success, 1 when a verification margin is violated or a
run-time check fails, 2 for unusable input (bad config, unreadable file).
Failures print one JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import ExperimentConfig, load_config, parse_config
from .errors import BGKError, ConfigError
from .euler import EulerState, run_euler
from .study import SUITES, limit_study, run_margins, simulate

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def error_record(exc: BaseException, command: str) -> dict:
    rec = {"status": "error", "command": command, "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        rec["violations"] = exc.violations
    increments = getattr(exc, "increments", None)
    if increments:
        rec["increments"] = [float(x) for x in increments]
    return rec


def _emit_error(exc, command, stream=None):
    print(json.dumps(error_record(exc, command)), file=stream or sys.stderr)


def _out_dir(cfg: ExperimentConfig, out):
    path = out or cfg.directory
    os.makedirs(path, exist_ok=True)
    return path


def cmd_simulate(cfg: ExperimentConfig, out=None) -> int:
    path = _out_dir(cfg, out)
    sim = simulate(cfg, out_dir=path)
    if sim.picard is not None:
        print(f"picard: {sim.picard.iterations} iterations, last increment "
              f"{sim.picard.increments[-1]:.3e}" if sim.picard.increments else "picard: T = 0")
        return EXIT_OK
    res = run_margins(sim)
    res.write_csv(os.path.join(path, "margins.csv"))
    for m in res.margins:
        print(f"{m.name:16s} {m.value: .3e}  tol {m.tol:.3e}  {'ok' if m.ok else 'VIOLATED'}")
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_limit_study(cfg: ExperimentConfig, eps_list=None, out=None) -> int:
    path = _out_dir(cfg, out)
    study = limit_study(cfg, eps_list, out_dir=path)
    print(study.table())
    print(f"floor: l1_rho {study.floor['l1_rho']:.3e}, l1_momentum {study.floor['l1_momentum']:.3e}")
    return EXIT_OK


def cmd_euler(cfg: ExperimentConfig, out=None) -> int:
    path = _out_dir(cfg, out)
    grid = cfg.grid()
    rho, u = cfg.profile.macro(grid)
    state = EulerState(rho, rho[..., None] * u)
    run = run_euler(cfg.regime(), state, grid.dx, cfg.solver.T,
                    check_shock=not cfg.profile.post_shock_capable)
    run.write_csv(os.path.join(path, "euler.csv"))
    print(f"euler: {run.steps} steps to t={run.t:.6g}; mass {run.series[-1][1]:.15g}")
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, suite: str, out=None) -> int:
    path = _out_dir(cfg, out)
    res = SUITES[suite](cfg, path)
    res.write_csv(os.path.join(path, f"verify_{suite}.csv"))
    report = {"suite": suite, "passed": res.passed,
              "margins": [{"name": m.name, "value": m.value, "tol": m.tol, "ok": m.ok} for m in res.margins]}
    if res.info:
        report["info"] = {k: (np.asarray(v).tolist() if isinstance(v, (tuple, list, np.ndarray)) else v)
                          for k, v in res.info.items()}
    print(json.dumps(report, default=float))
    if not res.passed:
        w = res.worst
        print(f"worst offender: {w.name} = {w.value:.6g} > tol {w.tol:.6g}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bgkbaro", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file (defaults when omitted)")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--seed", type=int, help="overrides run.seed")
        return p

    common(sub.add_parser("simulate", help="run the configured kinetic scheme"))
    lim = common(sub.add_parser("limit-study", help="relax_eps sweep against the Euler reference"))
    lim.add_argument("--eps-list", help="comma separated relax_eps values (overrides limit.eps_list)")
    common(sub.add_parser("euler", help="run the finite-volume Euler solver alone"))
    ver = common(sub.add_parser("verify", help="run a verification suite"))
    ver.add_argument("suite", choices=sorted(SUITES))
    ver.add_argument("--tolerance-scale", type=float, help="overrides verify.tolerance_scale")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    changes = {}
    if args.seed is not None:
        changes["run.seed"] = args.seed
    if getattr(args, "eps_list", None):
        changes["limit.eps_list"] = args.eps_list
    if getattr(args, "tolerance_scale", None) is not None:
        changes["verify.tolerance_scale"] = args.tolerance_scale
    return cfg.with_overrides(changes) if changes else cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        _emit_error(exc, command)
        return EXIT_INPUT
    try:
        if command == "simulate":
            return cmd_simulate(cfg, args.out)
        if command == "limit-study":
            return cmd_limit_study(cfg, None, args.out)
        if command == "euler":
            return cmd_euler(cfg, args.out)
        return cmd_verify(cfg, args.suite, args.out)
    except ConfigError as exc:
        _emit_error(exc, command)
        return EXIT_INPUT
    except (BGKError, FloatingPointError) as exc:
        _emit_error(exc, command)
        return EXIT_FAIL
