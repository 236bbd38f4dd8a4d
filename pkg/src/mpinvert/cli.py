"""Command-line interface: ``mpinvert {invert,audit,probe,mpass,demo}``.

Exit codes: 0 success, 1 bad input, 2 stalled, 3 hypothesis violated
(invert), 4 hypothesis contradiction (audit), 5 coercivity/PS probe failed,
6 no mountain-pass geometry.
"""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .coercivity import PSProbeOptions, ps_probe, ray_growth
from .config import ProblemConfig
from .demos import DEMO_NAMES, run_demo
from .errors import ConfigError, GeometryError, InversionError, StallError
from .functional import LeastSquaresFunctional
from .inverter import CONVERGED, HYPOTHESIS_VIOLATED, invert
from .mountain_pass import (
    HYPOTHESIS_CONTRADICTION,
    MountainPassOptions,
    injectivity_audit,
    make_injectivity_functional,
    mountain_pass,
)

log = logging.getLogger("mpinvert")

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_STALLED = 2
EXIT_HYPOTHESIS = 3
EXIT_CONTRADICTION = 4
EXIT_PROBE = 5
EXIT_GEOMETRY = 6


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _parse_vector(text):
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse vector {text!r}") from None


def _load_config(args):
    if args.config:
        cfg = ProblemConfig.load(args.config)
    elif args.problem:
        cfg = ProblemConfig.from_dict({"problem": args.problem})
    else:
        raise ConfigError("give --config PATH or --problem NAME")
    if args.problem:
        cfg.problem = args.problem
    if getattr(args, "target", None) is not None:
        cfg.target = _parse_vector(args.target)
    return cfg


def cmd_invert(args):
    cfg = _load_config(args)
    op = cfg.operator()
    opts = cfg.solver_options(args.seed)
    y = cfg.target_vector(op)
    report = invert(op, y, cfg.start_vector(op), opts)
    out = args.out
    _write_json(
        os.path.join(out, "report.json"),
        {"command": "invert", "config": cfg.to_dict(args.seed), "operator": op.name, "target": y.tolist(), **report.to_dict()},
    )
    _write_csv(os.path.join(out, "trace.csv"), ["iter", "phi", "grad_norm"], report.trace)
    with open(os.path.join(out, "solution.txt"), "w") as fh:
        fh.writelines(f"{v!r}\n" for v in map(float, report.solution))
    log.info("status %s, residual %.3e, solution %s", report.status, report.residual_norm, np.array2string(report.solution[:8]))
    return {CONVERGED: EXIT_OK, HYPOTHESIS_VIOLATED: EXIT_HYPOTHESIS}.get(report.status, EXIT_STALLED)


def _mp_options(cfg, seed):
    mp = dict(cfg.extra.get("mountain_pass") or {})
    if seed is not None:
        mp["seed"] = seed
    try:
        return MountainPassOptions(**mp)
    except TypeError as exc:
        raise ConfigError(f"bad mountain_pass options: {exc}") from None


def cmd_audit(args):
    cfg = _load_config(args)
    op = cfg.operator()
    x1 = _parse_vector(args.x1) if args.x1 is not None else cfg.x1
    x2 = _parse_vector(args.x2) if args.x2 is not None else cfg.x2
    if x1 is None or x2 is None:
        raise ConfigError("audit needs x1 and x2")
    opts = cfg.solver_options(args.seed)
    report = injectivity_audit(op, x1, x2, _mp_options(cfg, args.seed), opts.tols)
    _write_json(
        os.path.join(args.out, "audit.json"),
        {"command": "audit", "config": cfg.to_dict(args.seed), "x1": list(map(float, x1)), "x2": list(map(float, x2)), **report.to_dict()},
    )
    log.info("verdict %s (gap %.3e, critical value %s)", report.verdict, report.gap, report.psi_value)
    return EXIT_CONTRADICTION if report.verdict == HYPOTHESIS_CONTRADICTION else EXIT_OK


def cmd_probe(args):
    cfg = _load_config(args)
    op = cfg.operator()
    y = cfg.target_vector(op) if cfg.target is not None else np.zeros(op.dim_out)
    seed = cfg.solver_options(args.seed).seed
    pcfg = dict(cfg.extra.get("probe") or {})
    radii = np.geomspace(pcfg.get("r_min", 1.0), pcfg.get("r_max", 1e3), int(pcfg.get("n_radii", 16)))
    growth = ray_growth(op, y, int(pcfg.get("n_directions", 64)), radii, seed)
    try:
        ps_opts = PSProbeOptions(**{**(pcfg.get("ps") or {}), "seed": seed})
    except TypeError as exc:
        raise ConfigError(f"bad ps options: {exc}") from None
    ps = ps_probe(LeastSquaresFunctional(op, y), ps_opts)
    _write_json(os.path.join(args.out, "growth_report.json"), {"command": "probe", "config": cfg.to_dict(args.seed), **growth.to_dict()})
    _write_json(os.path.join(args.out, "ps_probe_report.json"), {"command": "probe", "config": cfg.to_dict(args.seed), **ps.to_dict()})
    log.info(
        "min exponent %.4f, coercive %s, PS violation %s (evidence only)",
        growth.min_exponent,
        growth.coercive_flag,
        ps.violation_found,
    )
    return EXIT_OK if growth.coercive_flag and not ps.violation_found else EXIT_PROBE


def cmd_mpass(args):
    cfg = _load_config(args)
    mp_opts = _mp_options(cfg, args.seed)
    anchors = cfg.extra.get("anchors") or {}
    start = _parse_vector(args.start) if args.start is not None else anchors.get("start")
    end = _parse_vector(args.end) if args.end is not None else anchors.get("end")
    if cfg.is_functional:
        func = cfg.functional()
        if end is None:
            raise ConfigError("mpass on a benchmark functional needs an end anchor")
    else:
        op = cfg.operator()
        if cfg.x1 is None or cfg.x2 is None:
            raise ConfigError("mpass on an operator needs x1 and x2 (psi of the collision)")
        func = make_injectivity_functional(op, cfg.x1, cfg.x2)
        if end is None:
            end = list(np.asarray(cfg.x2, float) - np.asarray(cfg.x1, float))
    report = mountain_pass(func, end, mp_opts, start)
    _write_json(
        os.path.join(args.out, "mpass.json"),
        {"command": "mpass", "config": cfg.to_dict(args.seed), "options": mp_opts.to_dict(), "start": start, "end": list(map(float, end)), **report.to_dict()},
    )
    _write_csv(os.path.join(args.out, "path_history.csv"), ["iter", "path_max"], enumerate(report.path_history))
    dim = report.path.nodes.shape[1]
    _write_csv(
        os.path.join(args.out, "path.csv"),
        [f"x{i}" for i in range(dim)] + ["value"],
        (list(p) + [v] for p, v in zip(report.path.nodes, report.path.values)),
    )
    log.info("critical point %s, value %.12g", report.critical_point, report.critical_value)
    return EXIT_OK


def cmd_demo(args):
    if args.name not in DEMO_NAMES:
        raise ConfigError(f"unknown demo {args.name!r}; choose from {', '.join(DEMO_NAMES)}")
    ok, lines = run_demo(args.name)
    if not args.quiet:
        print("\n".join(lines))
    return EXIT_OK if ok else EXIT_STALLED


def build_parser():
    parser = argparse.ArgumentParser(prog="mpinvert", description="Variational inversion of nonlinear maps.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON problem configuration")
    common.add_argument("--problem", help="built-in problem name (overrides the config)")
    common.add_argument("--out", default=".", help="output directory (default: current directory)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invert", parents=[common], help="solve F(x) = y")
    p.add_argument("--target", help="comma-separated target vector (overrides the config)")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("audit", parents=[common], help="injectivity audit of a candidate collision")
    p.add_argument("--x1")
    p.add_argument("--x2")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("probe", parents=[common], help="coercivity and Palais-Smale probes")
    p.add_argument("--target")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("mpass", parents=[common], help="mountain-pass saddle search")
    p.add_argument("--start", help="first anchor (default: origin)")
    p.add_argument("--end", help="second anchor")
    p.set_defaults(func=cmd_mpass)

    p = sub.add_parser("demo", parents=[common], help="run a worked reproduction")
    p.add_argument("name")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        if args.command != "demo":
            os.makedirs(args.out, exist_ok=True)
        return args.func(args)
    except GeometryError as exc:
        print(f"mpinvert: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except StallError as exc:
        print(f"mpinvert: {exc}", file=sys.stderr)
        return EXIT_STALLED
    except (InversionError, OSError) as exc:
        print(f"mpinvert: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
