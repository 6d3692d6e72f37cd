"""Command-line entry point ``dpk``.

Subcommands: ``certify`` (theorem certificate), ``solve`` (three-solutions
experiment), ``lab`` (inequality audit) and ``sweep`` (grid over delta,
r_param and lambda position).

Exit codes: 0 success, 1 experiment ran but ``--expect-three`` was not met,
2 invalid configuration (the message names the violated hypothesis),
3 runtime failure.

``DPK_THREADS`` sets the number of worker processes for ``sweep``; the
default of 1 runs sequentially.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, ProblemConfig, build_problem, load_config
from .energy import AssumptionError
from .mesh import MeshError

EXIT_OK, EXIT_UNMET, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

GNUPLOT_TRACES = """\
# energy and residual traces written by `dpk solve`
set datafile separator ","
set key autotitle columnhead
set logscale y
set xlabel "iteration"
set ylabel "residual"
plot for [s in system("tail -n +2 traces.csv | cut -d, -f1 | sort -u")] \\
    "< grep '^".s.",' traces.csv" using 2:4 with lines title s
"""


def _dump(obj, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n")


def _parse_lambda(text):
    if text is None or text == "mid":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--lambda must be 'mid' or a number, got {text!r}")


def _load(args) -> ProblemConfig:
    cfg = load_config(args.config) if args.config else ProblemConfig()
    return cfg.with_overrides(mesh_level=args.mesh_level, seed=args.seed,
                              lam=getattr(args, "lam", None))


def _header(cfg):
    return {"config": cfg.to_dict(), "config_hash": cfg.config_hash(), "seed": cfg.solver.seed}


def cmd_certify(args):
    from .theorem import sigma_bounds
    cfg = _load(args)
    cert = sigma_bounds(build_problem(cfg))
    out = {**_header(cfg), "certificate": cert.to_dict()}
    _dump(out, Path(args.out) / "certificate.json")
    lo_hi = cert.lambda_interval
    print(f"f4 holds: {cert.hypothesis_f4_holds}; lambda interval: "
          f"{'empty' if lo_hi is None else f'({lo_hi[0]:.6g}, {lo_hi[1]:.6g})'}")
    return EXIT_OK


def cmd_solve(args):
    from .solver import energy_trace_csv, resolve_lambda, three_solutions_experiment
    from .theorem import sigma_bounds
    cfg = _load(args)
    problem = build_problem(cfg)
    cert = sigma_bounds(problem)
    if cfg.lam == "mid" and cert.lambda_interval is None:
        print("certified lambda interval is empty; pass --lambda VALUE", file=sys.stderr)
        return EXIT_UNMET if args.expect_three else EXIT_RUNTIME
    lam = resolve_lambda(cfg.lam, cert)
    outcome = three_solutions_experiment(problem, lam=lam)
    out = {**_header(cfg), "certificate": cert.to_dict(), "outcome": outcome.to_dict(),
           "mesh_level": cfg.domain.mesh_level}
    d = Path(args.out)
    _dump(out, d / "solve.json")
    (d / "traces.csv").write_text(energy_trace_csv(outcome.points))
    (d / "traces.gp").write_text(GNUPLOT_TRACES)
    print(f"lambda = {lam:.6g}; distinct critical points: {outcome.distinct_count}")
    for p in outcome.points:
        print(f"  {p.start:>12s}  {p.classification:<16s} energy {p.energy:.10g}  "
              f"residual {p.residual_norm:.3e}")
    if args.expect_three and outcome.distinct_count < 3:
        print("expectation unmet: fewer than three distinct critical points", file=sys.stderr)
        return EXIT_UNMET
    return EXIT_OK


def cmd_lab(args):
    from .inequalities import run_lab
    cfg = _load(args)
    rep = run_lab(n_cases=args.cases, seed=cfg.solver.seed)
    _dump({**_header(cfg), "audit": rep}, Path(args.out) / "lab.json")
    print(f"cases {rep['cases']}, failures {rep['failures']}, "
          f"degenerate_skipped {rep['degenerate_skipped']}, "
          f"max lhs/rhs {rep['max_lhs_over_rhs']:.6g}")
    return EXIT_OK


def _sweep_point(job):
    from .solver import three_solutions_experiment
    from .theorem import sigma_bounds
    cfg_dict, delta, r_param, pos, solve = job
    d = json.loads(json.dumps(cfg_dict))
    d["theorem"]["delta"], d["theorem"]["r_param"] = delta, r_param
    problem = build_problem(ProblemConfig.from_dict(d))
    cert = sigma_bounds(problem)
    row = {"delta": delta, "r_param": r_param, "position": pos,
           "f4": cert.hypothesis_f4_holds, "sigma_lower": cert.sigma_lower,
           "sigma_upper": cert.sigma_upper, "lambda_lo": "", "lambda_hi": "", "lambda": "",
           "distinct_count": ""}
    if cert.lambda_interval is not None:
        lo, hi = cert.lambda_interval
        lam = lo + pos * (hi - lo)
        row.update(lambda_lo=lo, lambda_hi=hi, **{"lambda": lam})
        if solve:
            row["distinct_count"] = three_solutions_experiment(problem, lam=lam,
                                                               rounds=1).distinct_count
    return row


SWEEP_COLUMNS = ["delta", "r_param", "position", "f4", "sigma_lower", "sigma_upper",
                 "lambda_lo", "lambda_hi", "lambda", "distinct_count"]


def cmd_sweep(args):
    cfg = _load(args)
    jobs = [(cfg.to_dict(), dl, rp, pos, not args.no_solve)
            for dl in args.deltas for rp in args.r_params for pos in args.positions]
    workers = max(1, int(os.environ.get("DPK_THREADS", "1")))
    if workers == 1:
        rows = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_sweep_point, jobs))
    lines = [",".join(SWEEP_COLUMNS)]
    for r in rows:
        lines.append(",".join("" if r[c] == "" else repr(r[c]) if isinstance(r[c], float)
                              else str(r[c]) for c in SWEEP_COLUMNS))
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    (d / "sweep.csv").write_text("\n".join(lines) + "\n")
    _dump({**_header(cfg), "rows": rows}, d / "sweep.json")
    print(f"{len(rows)} grid points, {sum(r['f4'] for r in rows)} with nonempty interval")
    return EXIT_OK


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser():
    ap = argparse.ArgumentParser(prog="dpk", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config (default: built-in default instance)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, help="override solver.seed")
    common.add_argument("--mesh-level", type=int, help="override domain.mesh_level")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("certify", parents=[common], help="write the theorem certificate")
    s = sub.add_parser("solve", parents=[common], help="run the three-solutions experiment")
    s.add_argument("--lambda", dest="lam", type=_parse_lambda, help="'mid' or a value")
    s.add_argument("--expect-three", action="store_true",
                   help="exit 1 when fewer than three distinct points are found")
    lab = sub.add_parser("lab", parents=[common], help="run the inequality audit")
    lab.add_argument("--cases", type=int, default=100_000)
    sw = sub.add_parser("sweep", parents=[common], help="grid over delta, r_param, lambda")
    sw.add_argument("--deltas", type=_floats, default=[0.05, 0.1, 0.2])
    sw.add_argument("--r-params", type=_floats, default=[0.001, 0.002, 0.005])
    sw.add_argument("--positions", type=_floats, default=[0.5],
                    help="relative positions inside the lambda interval")
    sw.add_argument("--no-solve", action="store_true", help="skip the solution counts")
    return ap


COMMANDS = {"certify": cmd_certify, "solve": cmd_solve, "lab": cmd_lab, "sweep": cmd_sweep}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except AssumptionError as exc:
        print(f"config invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, MeshError, OSError) as exc:
        print(f"config invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
