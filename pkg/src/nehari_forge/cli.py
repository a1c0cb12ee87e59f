"""Command-line front end: ``nehari-forge <command> ...``.

Exit codes: 0 success (certified solution), 1 configuration error,
2 solver failure.
"""
import argparse
import datetime
import json
import os
import sys
import warnings

import numpy as np

from .config import ConfigError, load_config, parse_array, parse_matrix
from .errors import CriterionFails, NehariError
from .scaling_map import ScalingCoeffs, bracket, degree_sign_check, eval_M, solve_scaling
from .selftest import run_selftest
from .sync import sync_criterion, sync_solve, unboundedness_experiment
from .system_solver import continue_in_t, lambda_sweep, verify_solution, write_trace_csv

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2


def _dump(payload):
    return json.dumps(payload, sort_keys=True, indent=2, default=_default)


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj).__name__)


def _timestamp():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _write_fields(cfg, u, out, prefix="u"):
    for i, ui in enumerate(u):
        cfg.domain.write_csv(ui, os.path.join(out, f"{prefix}{i + 1}.csv"))


def _require_params(cfg, name):
    if cfg.params is None:
        raise ConfigError(f"{name} needs a [params] section")
    return cfg.params


def cmd_solve(args):
    cfg = load_config(args.config)
    params = _require_params(cfg, "solve")
    t = cfg.t if args.t is None else args.t
    if not 0 <= t <= 1:
        raise ConfigError(f"--t must lie in [0, 1], got {t}")
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    out = _outdir(args.out)
    try:
        u, trace = continue_in_t(params, cfg.domain, cfg.solver, t_end=t)
    except NehariError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        with open(os.path.join(out, "report.json"), "w") as fh:
            fh.write(_dump({"error": f"{type(exc).__name__}: {exc}", "timestamp": _timestamp()}) + "\n")
        return EXIT_SOLVER
    report = verify_solution(params, cfg.domain, u, t, tol=cfg.solver.tol)
    report.extra = {"max_linf_along_path": max(r["linf"] for r in trace), "steps": len(trace) - 1}
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(report.to_json(timestamp=_timestamp()) + "\n")
    _write_fields(cfg, u, out)
    write_trace_csv(trace, os.path.join(out, "trace.csv"))
    print(f"residual={report.residual_relative:.3e} certified={report.certified}")
    return EXIT_OK if report.certified else EXIT_SOLVER


def cmd_scaling_solve(args):
    try:
        a = parse_array(args.a)
        b = parse_array(args.b)
        ell = len(a)
        d = parse_matrix(args.d) if args.d else np.zeros((ell, ell))
        alpha = parse_matrix(args.alpha)
        beta = parse_matrix(args.beta)
        coeffs = ScalingCoeffs(a=a, b=b, d=d, alpha=alpha, beta=beta, p=args.p)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        s = solve_scaling(coeffs)
    except NehariError as exc:
        print(_dump({"error": type(exc).__name__, "message": str(exc)}))
        return EXIT_SOLVER
    r, R = bracket(coeffs)
    print(
        _dump(
            {
                "s": s.tolist(),
                "degree_sign": degree_sign_check(coeffs, s),
                "bracket": [r, R],
                "max_abs_M": float(np.max(np.abs(eval_M(coeffs, s)))),
            }
        )
    )
    return EXIT_OK


def cmd_sync_check(args):
    cfg = load_config(args.config)
    params = _require_params(cfg, "sync-check")
    try:
        verdict = sync_criterion(params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(_dump(verdict.to_dict()))
    return EXIT_OK


def cmd_sync_solve(args):
    cfg = load_config(args.config)
    params = _require_params(cfg, "sync-solve")
    try:
        verdict = sync_criterion(params)
        u = sync_solve(params, cfg.domain)
    except CriterionFails as exc:
        print(_dump({"error": "CriterionFails", "message": str(exc)}))
        return EXIT_SOLVER
    except NehariError as exc:
        print(_dump({"error": type(exc).__name__, "message": str(exc)}))
        return EXIT_SOLVER
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = _outdir(args.out)
    report = verify_solution(params, cfg.domain, u, 1.0, tol=1e-7)
    report.extra = {"verdict": verdict.to_dict()}
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(report.to_json(timestamp=_timestamp()) + "\n")
    _write_fields(cfg, u, out)
    print(f"residual={report.residual_relative:.3e} certified={report.residual_relative <= 1e-7}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = load_config(args.config)
    params = _require_params(cfg, "sweep-lambda")
    out = _outdir(args.out)
    try:
        base, _ = continue_in_t(params, cfg.domain, cfg.solver)
    except NehariError as exc:
        print(f"base solve failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    reports = lambda_sweep(params, cfg.domain, cfg.multipliers, cfg.solver, base=base)
    ell = params.ell
    pairs = [f"{i + 1}-{j + 1}" for i in range(ell) for j in range(i + 1, ell)]
    header = (
        ["kappa"]
        + [f"norm_u{i + 1}" for i in range(ell)]
        + [f"overlap_{p.replace('-', '_')}" for p in pairs]
        + ["residual", "failed"]
    )
    with open(os.path.join(out, "sweep.csv"), "w") as fh:
        fh.write(",".join(header) + "\n")
        for rep in reports:
            vals = [rep.kappa, *rep.norms, *(rep.overlaps[p] for p in pairs), rep.residual_relative]
            fh.write(",".join(f"{v:.17g}" for v in vals) + f",{int(not rep.certified)}\n")
    for rep in reports:
        if not rep.certified:
            print(f"kappa={rep.kappa}: failed ({rep.error})", file=sys.stderr)
    return EXIT_OK


def cmd_unbounded(args):
    cfg = load_config(args.config)
    spec = cfg.unbounded
    try:
        table = unboundedness_experiment(spec.mu, spec.p, spec.q, spec.a_list, cfg.domain, workers=cfg.workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = _outdir(args.out)
    table.write_csv(os.path.join(out, "unbounded.csv"))
    for row in table.rows:
        if row.error:
            print(f"a={row.a}: failed ({row.error})", file=sys.stderr)
    print(f"increasing={table.increasing} stable_from={table.stable_from} lower_bound_ok={table.lower_bound_ok}")
    return EXIT_OK


def cmd_selftest(args):
    nodes, seed, tolerances = 32, 0, {}
    if args.config:
        cfg = load_config(args.config)
        nodes, seed, tolerances = cfg.selftest_nodes, cfg.seed, cfg.tolerances
    elif os.environ.get("NEHARI_FORGE_SEED"):
        seed = int(os.environ["NEHARI_FORGE_SEED"])
    try:
        results = run_selftest(nodes=nodes, seed=seed, tolerances=tolerances)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} passed" + (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_OK if not failed else EXIT_SOLVER


def build_parser():
    parser = argparse.ArgumentParser(prog="nehari-forge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="continuation solve of the coupled system")
    p.add_argument("config")
    p.add_argument("--t", type=float, default=None, help="homotopy parameter to stop at (default from config, 1)")
    p.add_argument("--out", default="nehari_out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("scaling-solve", help="zero and degree sign of the scaling map")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--a", required=True, help="comma list")
    p.add_argument("--b", required=True, help="comma list")
    p.add_argument("--d", default=None, help="matrix, rows separated by ';'")
    p.add_argument("--alpha", default="1")
    p.add_argument("--beta", default="1")
    p.set_defaults(func=cmd_scaling_solve)

    p = sub.add_parser("sync-check", help="synchronized-existence criterion")
    p.add_argument("config")
    p.set_defaults(func=cmd_sync_check)

    p = sub.add_parser("sync-solve", help="construct a synchronized solution")
    p.add_argument("config")
    p.add_argument("--out", default="nehari_out")
    p.set_defaults(func=cmd_sync_solve)

    p = sub.add_parser("sweep-lambda", help="re-solve along lambda <- kappa * lambda")
    p.add_argument("config")
    p.add_argument("--out", default="nehari_out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("unbounded", help="profile norms as the interaction coefficient grows")
    p.add_argument("config")
    p.add_argument("--out", default="nehari_out")
    p.set_defaults(func=cmd_unbounded)

    p = sub.add_parser("selftest", help="run the invariant suite")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
