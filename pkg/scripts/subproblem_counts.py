"""Distribution of ball-subproblem solves and recursion nodes by number of cuts.

    python3 scripts/subproblem_counts.py --per-m 300 --max-m 4
"""
import argparse
from collections import Counter

import numpy as np

from etrs.instances import random_instance
from etrs.reduction import solve_extended


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--per-m", type=int, default=300)
    ap.add_argument("--max-m", type=int, default=4)
    ap.add_argument("--max-n", type=int, default=6)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'m':>2} {'max solves':>11} {'mean solves':>12} {'max nodes':>10} {'memo hits':>10}  cases")
    for m in range(1, args.max_m + 1):
        solves, nodes, hits, cases = [], [], 0, Counter()
        for i in range(args.per_m):
            n = int(rng.integers(1, args.max_n + 1))
            rep = solve_extended(random_instance(n, m, int(rng.integers(2**31))))
            solves.append(rep.trs0_solves)
            nodes.append(rep.nodes_visited)
            hits += rep.memo_hits
            cases[rep.case] += 1
        shown = ", ".join(f"{k}={v}" for k, v in sorted(cases.items()))
        print(f"{m:>2} {max(solves):>11} {np.mean(solves):>12.2f} {max(nodes):>10} {hits:>10}  {shown}")


if __name__ == "__main__":
    main()
