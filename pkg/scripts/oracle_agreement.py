"""Compare solve_extended against brute-force KKT enumeration on random instances.

    python3 scripts/oracle_agreement.py --count 500 --max-n 6 --max-m 4 --seed 0
"""
import argparse
import time

import numpy as np

from etrs.instances import random_instance
from etrs.oracle import kkt_enumerate
from etrs.reduction import solve_extended


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--max-n", type=int, default=5)
    ap.add_argument("--max-m", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-6)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    worst, bad = 0.0, []
    t_solver = t_oracle = 0.0
    for i in range(args.count):
        n = int(rng.integers(1, args.max_n + 1))
        m = int(rng.integers(0, args.max_m + 1))
        inst = random_instance(n, m, args.seed * 100_003 + i)
        t0 = time.perf_counter()
        got = solve_extended(inst).value
        t1 = time.perf_counter()
        ref = kkt_enumerate(inst).value
        t2 = time.perf_counter()
        t_solver += t1 - t0
        t_oracle += t2 - t1
        err = abs(got - ref) / (1 + abs(ref))
        worst = max(worst, err)
        if err > args.tol:
            bad.append((i, n, m, got, ref))
    print(f"instances        {args.count}")
    print(f"disagreements    {len(bad)}")
    print(f"max rel error    {worst:.3e}")
    print(f"solver seconds   {t_solver:.2f}")
    print(f"oracle seconds   {t_oracle:.2f}")
    for row in bad[:20]:
        print("  index %d  n=%d m=%d  solver=%r oracle=%r" % row)


if __name__ == "__main__":
    main()
