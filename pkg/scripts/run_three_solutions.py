"""Run the three-solutions experiment on a config and print a summary table.

    python scripts/run_three_solutions.py [--config FILE] [--mesh-level N] [--out DIR]
"""
import argparse
import json
import time
from pathlib import Path

from dpkirchhoff.config import ProblemConfig, build_problem, load_config
from dpkirchhoff.solver import residual_tolerance, three_solutions_experiment
from dpkirchhoff.theorem import sigma_bounds


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config")
    ap.add_argument("--mesh-level", type=int)
    ap.add_argument("--out", default="out/three_solutions")
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else ProblemConfig()
    cfg = cfg.with_overrides(mesh_level=args.mesh_level)
    problem = build_problem(cfg)
    cert = sigma_bounds(problem)
    t0 = time.perf_counter()
    out = three_solutions_experiment(problem, cert=cert)
    elapsed = time.perf_counter() - t0
    print(f"level {cfg.domain.mesh_level}, lambda {out.lam:.6g}, tol {residual_tolerance(problem):.3e}")
    for p in out.points:
        print(f"{p.start:>12s} {p.classification:<16s} E={p.energy:+.10f} "
              f"res={p.residual_norm:.3e} it={p.iterations}")
    print(f"distinct: {out.distinct_count}   wall time {elapsed:.1f} s")
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    (d / "summary.json").write_text(json.dumps(
        {"config_hash": cfg.config_hash(), "elapsed_s": elapsed,
         "outcome": out.to_dict(with_values=False)}, sort_keys=True, indent=2) + "\n")


if __name__ == "__main__":
    main()
