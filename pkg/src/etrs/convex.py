"""Exact minimization of a convex quadratic over a polytope, optionally cut by a ball.

    min 0.5 x'Gx + h'x   s.t.  Hx <= g,  x'x <= radius_sq  (G PSD)

The solver walks every linearly independent working set S of polytope rows.
On the flat {H_S x = g_S} there are at most two KKT candidates: the
least-norm minimizer with the ball inactive, and the unique point where the
ball is active with a positive multiplier (a secular-equation root).  The
best feasible candidate is optimal; the least-norm choice guarantees it is
found even when G is singular on the flat.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Optional

import numpy as np

from etrs.errors import CombinatorialBudgetExceeded, Infeasible, Unbounded
from etrs.lp import lp_minimize
from etrs.model import SolverConfig
from etrs.trs0 import safeguarded_root


@dataclass(frozen=True, eq=False)
class ConvexResult:
    value: float
    x: np.ndarray
    ball_multiplier: float
    multipliers: np.ndarray
    active: tuple
    kkt_residual: float
    candidates: int

    @property
    def ball_active(self) -> bool:
        return self.ball_multiplier > 0.0


def _row_slack_tol(H: np.ndarray, tol: float) -> np.ndarray:
    return tol * (1.0 + np.linalg.norm(H, axis=1))


def flat_basis(H_S: np.ndarray, g_S: np.ndarray, p: int, rank_tol: float):
    """Least-norm point and orthonormal null-space basis of {H_S x = g_S}.

    Returns None if the rows are (numerically) dependent.
    """
    if H_S.shape[0] == 0:
        return np.zeros(p), np.eye(p)
    U, s, Vt = np.linalg.svd(H_S)
    r = H_S.shape[0]
    if s[-1] <= rank_tol * max(1.0, s[0]) * max(r, p):
        return None
    x0 = Vt[:r].T @ ((U.T @ g_S) / s)
    return x0, Vt[r:].T


def _check_budget(m: int, p: int, budget: int) -> None:
    total = sum(comb(m, s) for s in range(min(m, p) + 1))
    if total > budget:
        raise CombinatorialBudgetExceeded(
            f"{total} working sets exceed the enumeration budget {budget}"
        )


def convex_minimize(G, h, H=None, g=None, radius_sq: Optional[float] = None,
                    cfg: SolverConfig = SolverConfig()) -> ConvexResult:
    """Minimize 0.5 x'Gx + h'x over {Hx <= g} (intersected with x'x <= radius_sq).

    Raises Infeasible when the feasible set is empty and Unbounded when there
    is no ball and the objective decreases without bound.
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    p = h.shape[0]
    G = np.asarray(G, dtype=float).reshape(p, p)
    G = 0.5 * (G + G.T)
    H = np.zeros((0, p)) if H is None else np.asarray(H, dtype=float).reshape(-1, p)
    g = np.zeros(0) if g is None else np.asarray(g, dtype=float).reshape(-1)
    m = H.shape[0]
    tol = cfg.feas_tol
    has_ball = radius_sq is not None
    r = float(radius_sq) if has_ball else np.inf

    _check_budget(m, p, cfg.max_vertex_enum)
    if m:
        bound = np.sqrt(r) * (1.0 + 1e-9) if has_ball else None
        if lp_minimize(np.zeros(p), H, g, bound=bound).status == "infeasible":
            raise Infeasible("polytope has no point in the ball")
    if not has_ball:
        _assert_bounded(G, h, H, cfg)

    row_tol = _row_slack_tol(H, tol)
    best = None
    count = 0
    for size in range(min(m, p) + 1):
        for S in combinations(range(m), size):
            flat = flat_basis(H[list(S)], g[list(S)], p, cfg.rank_tol)
            if flat is None:
                continue
            x0, N = flat
            for x, lam in _flat_candidates(G, h, x0, N, r, has_ball, cfg):
                count += 1
                if has_ball and x @ x > r + tol:
                    continue
                if m and np.any(H @ x - g > row_tol):
                    continue
                val = float(0.5 * x @ G @ x + h @ x)
                if best is None or val < best[0] - 1e-15 * (1.0 + abs(val)):
                    best = (val, x, lam)
    if best is None:
        raise Infeasible("no feasible point found")
    val, x, lam = best
    active = tuple(int(i) for i in np.flatnonzero(np.abs(H @ x - g) <= 10 * row_tol)) if m else ()
    grad = G @ x + h + lam * x
    mult = np.zeros(m)
    if active:
        sub = H[list(active)]
        mu, *_ = np.linalg.lstsq(sub.T, -grad, rcond=None)
        mult[list(active)] = mu
    resid = float(np.linalg.norm(grad + H.T @ mult)) if m else float(np.linalg.norm(grad))
    return ConvexResult(val, x, lam, mult, active, resid, count)


def _flat_candidates(G, h, x0, N, r, has_ball, cfg):
    """KKT candidates of the problem restricted to the flat x0 + range(N)."""
    rho = r - float(x0 @ x0)
    if has_ball and rho < -cfg.feas_tol:
        return
    q = N.shape[1]
    if q == 0 or (has_ball and rho <= cfg.feas_tol):
        yield x0, 0.0
        return
    Gr = N.T @ G @ N
    lam_r, V = np.linalg.eigh(0.5 * (Gr + Gr.T))
    lam_r = np.maximum(lam_r, 0.0)
    e = V.T @ (N.T @ (G @ x0 + h))
    zero = lam_r <= cfg.rank_tol * max(1.0, float(lam_r[-1]))
    e_tol = 1e-12 * (1.0 + float(np.linalg.norm(e)))

    interior_ok = not np.any(np.abs(e[zero]) > e_tol)
    w0 = None
    if interior_ok:
        w0 = np.zeros(q)
        w0[~zero] = -e[~zero] / lam_r[~zero]
        yield x0 + N @ (V @ w0), 0.0
    if not has_ball:
        return
    if w0 is not None and w0 @ w0 <= rho:
        return
    e2 = e**2
    ee = float(np.sqrt(e2.sum()))
    if ee == 0.0:
        return

    def fn(lam):
        s = lam_r + lam
        return float(np.sum(e2 / s**2) - rho), float(np.sum(-2.0 * e2 / s**3))

    lam = safeguarded_root(fn, 0.0, ee / np.sqrt(rho), increasing=False, tol=1e-15 * rho)
    w = -e / (lam_r + lam)
    yield x0 + N @ (V @ w), float(lam)


def _assert_bounded(G, h, H, cfg):
    p = h.shape[0]
    evals, evecs = np.linalg.eigh(G)
    scale = max(1.0, float(np.max(np.abs(evals)))) if evals.size else 1.0
    null = evecs[:, evals <= cfg.rank_tol * scale]
    if null.shape[1] == 0:
        return
    cost = null.T @ h
    res = lp_minimize(cost, H @ null, np.zeros(H.shape[0]), bound=1.0)
    if res.optimal and res.value < -cfg.feas_tol * (1.0 + np.linalg.norm(h)):
        raise Unbounded("objective decreases along a recession direction")
