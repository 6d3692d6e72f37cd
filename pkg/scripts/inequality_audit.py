"""Vector-inequality audit, split by the |X| <= 1 and |X| > 1 regimes.

    python scripts/inequality_audit.py [--cases 100000] [--seed 0]
"""
import argparse
import json
import time

from dpkirchhoff.inequalities import audit_vector_inequality


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cases", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    t0 = time.perf_counter()
    rep = audit_vector_inequality(n_cases=args.cases, seed=args.seed)
    elapsed = time.perf_counter() - t0
    print(f"cases {rep.cases} in {elapsed:.2f} s; failures {rep.failures} "
          f"(|X| <= 1: {rep.failures_with_unit_X}); triangle-bound failures "
          f"{rep.triangle_bound_failures}; max lhs/rhs {rep.max_lhs_over_rhs:.4g}")
    print("worst case:", json.dumps(rep.worst_case))


if __name__ == "__main__":
    main()
