"""Brute-force reference solvers for small instances.

``kkt_enumerate`` lists every first-order point of every face: for each
independent working set of linear constraints it collects the stationary
points of the quadratic on that flat, with the ball either inactive or
active, including whole spheres of stationary points in the hard case.  The
global minimum is the best feasible candidate.  Nothing here uses the
pruning logic of the reduction driver, so agreement between the two is a
meaningful check.

``grid_polish`` is cruder: a dense grid followed by projected gradient
descent.  It only ever returns feasible points, so it bounds the optimum
from above.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterator, List, Tuple

import numpy as np

from etrs.convex import flat_basis
from etrs.errors import BudgetExceeded, Infeasible
from etrs.geometry import BallSpec, Point, sphere_polytope_intersect
from etrs.model import ProblemInstance, SolverConfig, objective_value, validate_instance
from etrs.trs0 import safeguarded_root

KKT_MAX_N = 8
KKT_MAX_M = 5
GRID_MAX_N = 4
GRID_MAX_POINTS = 4_000_000


@dataclass(frozen=True, eq=False)
class OracleResult:
    value: float
    x: np.ndarray
    candidates_examined: int
    method: str


def _clusters(vals: np.ndarray, tol: float) -> List[np.ndarray]:
    groups, start = [], 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[start] > tol * max(1.0, abs(vals[start])):
            groups.append(np.arange(start, i))
            start = i
    return groups


def _all_roots(lam: np.ndarray, e2: np.ndarray, rho: float, poles: np.ndarray) -> Iterator[float]:
    """Every mu with sum e2/(lam+mu)^2 = rho; ``poles`` are the sorted live poles."""

    def fn(mu):
        s = lam + mu
        return float(np.sum(e2 / s**2) - rho), float(np.sum(-2.0 * e2 / s**3))

    def dfn(mu):
        s = lam + mu
        return float(np.sum(-2.0 * e2 / s**3))

    if poles.size == 0:
        return
    reach = float(np.sqrt(e2.sum() / rho))
    # right of the largest pole: decreasing from +inf to -rho
    yield safeguarded_root(fn, poles[-1], poles[-1] + reach, increasing=False, tol=0.0)
    # left of the smallest pole: increasing from -rho to +inf
    yield safeguarded_root(fn, poles[0] - reach, poles[0], increasing=True, tol=0.0)
    for lo, hi in zip(poles[:-1], poles[1:]):
        a, b = lo, hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            if not a < mid < b:
                break
            if dfn(mid) < 0:
                a = mid
            else:
                b = mid
        mid = 0.5 * (a + b)
        vmin, _ = fn(mid)
        if vmin > 0:
            continue
        if vmin == 0:
            yield mid
            continue
        yield safeguarded_root(fn, lo, mid, increasing=False, tol=0.0)
        yield safeguarded_root(fn, mid, hi, increasing=True, tol=0.0)


def _face_candidates(inst: ProblemInstance, S: Tuple[int, ...], cfg: SolverConfig):
    n, r = inst.n, inst.radius_sq
    flat = flat_basis(inst.A[list(S)], inst.b[list(S)], n, cfg.rank_tol)
    if flat is None:
        return
    x0, N = flat
    rho = r - float(x0 @ x0)
    if rho < -cfg.feas_tol:
        return
    if N.shape[1] == 0 or rho <= cfg.feas_tol:
        yield x0
        return
    Qr = N.T @ inst.Q @ N
    lam, V = np.linalg.eigh(0.5 * (Qr + Qr.T))
    e = V.T @ (N.T @ (inst.Q @ x0 + inst.c))
    to_x = lambda w: x0 + N @ (V @ w)  # noqa: E731
    scale = max(1.0, float(np.max(np.abs(lam))))
    e_tol = 1e-12 * (1.0 + float(np.linalg.norm(e)))
    groups = _clusters(lam, cfg.cluster_tol)
    live = [grp for grp in groups if np.linalg.norm(e[grp]) > e_tol]

    # ball inactive: least-norm stationary point on the flat
    zero = np.abs(lam) <= cfg.rank_tol * scale
    if not np.any(np.abs(e[zero]) > e_tol):
        w = np.zeros_like(e)
        w[~zero] = -e[~zero] / lam[~zero]
        yield to_x(w)

    # ball active, multiplier off the spectrum
    e2 = np.where(np.abs(e) > e_tol, e**2, 0.0)
    poles = np.sort(np.array([-lam[grp[0]] for grp in live]))
    for mu in _all_roots(lam, e2, rho, poles):
        s = lam + mu
        w = np.where(e2 > 0, -e / np.where(s == 0, 1.0, s), 0.0)
        yield to_x(w)

    # ball active, multiplier on the spectrum: a sphere of stationary points
    rest = [i for i in range(inst.m) if i not in S]
    for grp in groups:
        if any(grp is g for g in live):
            continue
        others = np.setdiff1d(np.arange(lam.size), grp)
        w = np.zeros_like(e)
        gap = lam[others] - lam[grp[0]]
        w[others] = np.where(e2[others] > 0, -e[others] / np.where(gap == 0, 1.0, gap), 0.0)
        slack = rho - float(w @ w)
        if slack < -cfg.feas_tol:
            continue
        if slack <= cfg.feas_tol or not rest:
            if slack > cfg.feas_tol:
                w[grp[0]] = np.sqrt(slack)
            yield to_x(w)
            continue
        basis = N @ V[:, grp]
        H = inst.A[rest] @ basis
        g = inst.b[rest] - inst.A[rest] @ to_x(w)
        wit = sphere_polytope_intersect(H, g, BallSpec(slack), cfg)
        if isinstance(wit, Point):
            yield to_x(w) + basis @ wit.u


def _feasible(inst: ProblemInstance, x, tol: float) -> bool:
    if x @ x > inst.radius_sq + tol:
        return False
    if inst.m == 0:
        return True
    return bool(np.all(inst.A @ x - inst.b <= tol * (1.0 + np.linalg.norm(inst.A, axis=1))))


def _better(val, x, best) -> bool:
    if best is None:
        return True
    bval, bx = best
    if val < bval - 1e-12 * (1.0 + abs(bval)):
        return True
    return abs(val - bval) <= 1e-12 * (1.0 + abs(bval)) and tuple(x) < tuple(bx)


def kkt_enumerate(inst: ProblemInstance, cfg: SolverConfig = SolverConfig()) -> OracleResult:
    """Global minimum by exhaustive KKT-point enumeration (n <= 8, m <= 5)."""
    inst = validate_instance(inst, cfg)
    if inst.n > KKT_MAX_N or inst.m > KKT_MAX_M:
        raise BudgetExceeded(
            f"kkt_enumerate handles n <= {KKT_MAX_N}, m <= {KKT_MAX_M}; got n={inst.n}, m={inst.m}"
        )
    best = None
    seen = 0
    for size in range(min(inst.m, inst.n) + 1):
        for S in combinations(range(inst.m), size):
            for x in _face_candidates(inst, S, cfg):
                seen += 1
                if not _feasible(inst, x, cfg.feas_tol):
                    continue
                val = objective_value(inst, x)
                if _better(val, x, best):
                    best = (val, x)
    if best is None:
        raise Infeasible("no feasible KKT point")
    return OracleResult(best[0], best[1], seen, "kkt")


# -- grid search ----------------------------------------------------------

def _project(x, A, b, radius_sq, sweeps=200, tol=1e-13):
    """Dykstra's alternating projections onto the ball and the halfspaces."""
    sets = A.shape[0] + 1
    incr = np.zeros((sets, x.size))
    y = x.copy()
    sq = np.einsum("ij,ij->i", A, A)
    for _ in range(sweeps):
        prev = y.copy()
        for s in range(sets):
            z = y + incr[s]
            if s == 0:
                nz = float(z @ z)
                p = z if nz <= radius_sq else z * np.sqrt(radius_sq / nz)
            else:
                viol = A[s - 1] @ z - b[s - 1]
                p = z - (viol / sq[s - 1]) * A[s - 1] if viol > 0 else z
            incr[s] = z - p
            y = p
        if np.max(np.abs(y - prev)) <= tol:
            break
    return y


def _polish(inst: ProblemInstance, x, iters=400):
    L = max(float(np.linalg.norm(inst.Q, 2)), 1e-12)
    step = 1.0 / L
    for _ in range(iters):
        nxt = _project(x - step * (inst.Q @ x + inst.c), inst.A, inst.b, inst.radius_sq)
        if np.max(np.abs(nxt - x)) <= 1e-14:
            return nxt
        x = nxt
    return x


def grid_polish(inst: ProblemInstance, grid_density: int = 50, cfg: SolverConfig = SolverConfig(),
                starts: int = 8) -> OracleResult:
    """Best point of a uniform grid on the bounding box, refined by projected gradient.

    The grid has ``grid_density + 1`` points per axis so that doubling the
    density refines the previous grid.
    """
    inst = validate_instance(inst, cfg)
    n = inst.n
    total = (grid_density + 1) ** n
    if n > GRID_MAX_N or total > GRID_MAX_POINTS:
        raise BudgetExceeded(f"grid of {total} points in dimension {n} exceeds the budget")
    rho = np.sqrt(inst.radius_sq)
    axis = np.linspace(-rho, rho, grid_density + 1)
    pts = np.array(list(product(axis, repeat=n))) if n else np.zeros((1, 0))
    ok = np.einsum("ij,ij->i", pts, pts) <= inst.radius_sq + cfg.feas_tol
    if inst.m:
        tol = cfg.feas_tol * (1.0 + np.linalg.norm(inst.A, axis=1))
        ok &= np.all(pts @ inst.A.T - inst.b <= tol, axis=1)
    pts = pts[ok]
    if pts.shape[0] == 0:
        x = _project(np.zeros(n), inst.A, inst.b, inst.radius_sq, sweeps=5000)
        if not _feasible(inst, x, cfg.feas_tol):
            raise Infeasible("no grid point is feasible")
        pts = x[None, :]
    vals = 0.5 * np.einsum("ij,jk,ik->i", pts, inst.Q, pts) + pts @ inst.c + inst.offset
    order = np.argsort(vals, kind="stable")[:starts]
    best = (float(vals[order[0]]), pts[order[0]])
    for i in order:
        x = _polish(inst, pts[i].copy())
        if _feasible(inst, x, cfg.feas_tol):
            val = objective_value(inst, x)
            if val < best[0]:
                best = (val, x)
    return OracleResult(best[0], best[1], int(pts.shape[0]), "grid")
