"""Cutoff sandwich and cutoff-gradient error under uniform refinement.

    python scripts/mesh_convergence.py [--levels 3,4,5,6,7]
"""
import argparse

import numpy as np

from dpkirchhoff.config import build_problem, default_config
from dpkirchhoff.mesh import rect_mesh
from dpkirchhoff.theorem import build_cutoff, sandwich_study


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", default="3,4,5,6,7")
    args = ap.parse_args()
    levels = [int(v) for v in args.levels.split(",")]
    problem = build_problem(default_config())
    delta = problem.cfg.theorem.delta
    rows = sandwich_study(problem, levels=levels)
    print(f"{'level':>5} {'h':>9} {'lower':>10} {'K(ubar)':>10} {'upper':>10} "
          f"{'|dK|/h':>8} {'grad err':>9}")
    prev = None
    for r in rows:
        mesh = rect_mesh(r["level"])
        R, x0 = problem.with_mesh(mesh).ball
        cut = build_cutoff(mesh, R, x0, delta)
        g = cut.u.grad_norm()[cut.annulus_elements()]
        gerr = np.abs(g / (2 * delta / R) - 1).max()
        dk = "" if prev is None else f"{abs(r['K'] - prev['K']) / prev['h']:.4f}"
        print(f"{r['level']:>5} {r['h']:>9.5f} {r['lower']:>10.5f} {r['K']:>10.5f} "
              f"{r['upper']:>10.5f} {dk:>8} {gerr:>9.4f}")
        prev = r


if __name__ == "__main__":
    main()
