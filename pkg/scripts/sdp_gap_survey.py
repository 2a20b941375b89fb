"""How often the rank condition holds, and the exact-versus-surrogate gap when it does not.

    python3 scripts/sdp_gap_survey.py --count 400
"""
import argparse

import numpy as np

from etrs.instances import random_instance
from etrs.model import ProblemInstance
from etrs.reduction import solve_extended
from etrs.sdpcheck import certify_tightness


def structured(rng, n, m):
    """Q with a repeated smallest eigenvalue; rows sometimes orthogonal to its eigenspace."""
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    k = int(rng.integers(1, n + 1))
    spec = np.concatenate([np.full(k, -1.0), rng.uniform(0, 2, n - k)])
    Q = (U * spec) @ U.T
    A = rng.standard_normal((m, n))
    if rng.uniform() < 0.5:
        z = U[:, 0]
        A -= np.outer(A @ z, z)
    b = A @ (rng.standard_normal(n) * 0.1) + np.abs(rng.standard_normal(m))
    return ProblemInstance(Q, rng.standard_normal(n), A, b)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=400)
    ap.add_argument("--seed", type=int, default=2)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    rows = {"random": [], "structured": []}
    for i in range(args.count):
        n, m = int(rng.integers(2, 6)), int(rng.integers(1, 4))
        kind = "random" if i % 2 else "structured"
        inst = random_instance(n, m, int(rng.integers(2**31))) if kind == "random" else structured(rng, n, m)
        rep = solve_extended(inst)
        if not rep.optimal:
            continue
        cond = certify_tightness(inst)
        rows[kind].append((cond.dc_holds, cond.newdc_holds, rep.value - cond.surrogate_value))
    for kind, data in rows.items():
        if not data:
            continue
        dc = sum(r[0] for r in data)
        nd = sum(r[1] for r in data)
        gaps_nd = [r[2] for r in data if r[1]]
        gaps_other = [r[2] for r in data if not r[1]]
        print(f"{kind}: {len(data)} instances, dc {dc}, newdc {nd}")
        if gaps_nd:
            print(f"  newdc holds:  max |gap| {max(abs(g) for g in gaps_nd):.2e}")
        if gaps_other:
            g = np.array(gaps_other)
            print(f"  newdc fails:  min gap {g.min():.2e}, median {np.median(g):.3f}, "
                  f"positive gaps {int(np.sum(g > 1e-6))}/{g.size}")


if __name__ == "__main__":
    main()
