"""Small dense linear programs: min c'u s.t. Hu <= g, optionally |u_i| <= bound.

Two-phase tableau simplex with Bland's rule.  The problems fed to it here
have a handful of rows, so no attempt is made at sparsity or refactoring.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"

_PIV_TOL = 1e-11


@dataclass(frozen=True, eq=False)
class LPResult:
    status: str
    value: Optional[float] = None
    x: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Equality-form tableau for min cost'z, Tz = rhs, z >= 0."""

    def __init__(self, T, rhs, basis):
        self.T = T
        self.rhs = rhs
        self.basis = list(basis)

    def pivot(self, row, col):
        T, rhs = self.T, self.rhs
        piv = T[row, col]
        T[row] /= piv
        rhs[row] /= piv
        for i in range(T.shape[0]):
            if i != row and T[i, col] != 0.0:
                f = T[i, col]
                T[i] -= f * T[row]
                rhs[i] -= f * rhs[row]
                T[i, col] = 0.0
        self.basis[row] = col

    def run(self, cost, allowed, tol):
        """Bland's rule iterations; returns OPTIMAL or UNBOUNDED."""
        T, rhs = self.T, self.rhs
        scale = max(1.0, float(np.max(np.abs(cost))))
        for _ in range(50_000):
            cb = cost[self.basis]
            reduced = cost - cb @ T
            entering = None
            for j in range(T.shape[1]):
                if allowed[j] and j not in self.basis and reduced[j] < -tol * scale:
                    entering = j
                    break
            if entering is None:
                return OPTIMAL
            col = T[:, entering]
            best = None
            for i in range(T.shape[0]):
                if col[i] > _PIV_TOL:
                    ratio = rhs[i] / col[i]
                    key = (ratio, self.basis[i])
                    if best is None or key[0] < best[0][0] - 1e-14 or (
                        abs(key[0] - best[0][0]) <= 1e-14 and key[1] < best[0][1]
                    ):
                        best = (key, i)
            if best is None:
                return UNBOUNDED
            self.pivot(best[1], entering)
            np.maximum(rhs, 0.0, out=rhs, where=np.abs(rhs) < 1e-13)
        raise RuntimeError("simplex iteration limit reached")


def lp_minimize(cost, H, g, bound: Optional[float] = None, tol: float = 1e-10) -> LPResult:
    """Minimize cost'u over {u : Hu <= g} (and |u_i| <= bound when given)."""
    cost = np.asarray(cost, dtype=float).reshape(-1)
    p = cost.shape[0]
    H = np.asarray(H, dtype=float).reshape(-1, p)
    g = np.asarray(g, dtype=float).reshape(-1)
    if bound is not None:
        H = np.vstack([H, np.eye(p), -np.eye(p)])
        g = np.concatenate([g, np.full(2 * p, float(bound))])
    m = H.shape[0]
    if p == 0:
        if np.all(g >= -tol):
            return LPResult(OPTIMAL, 0.0, np.zeros(0))
        return LPResult(INFEASIBLE)

    # variables: u+ (p), u- (p), slack (m), artificial (m)
    sign = np.where(g < 0, -1.0, 1.0)
    nvar = 2 * p + 2 * m
    T = np.zeros((m, nvar))
    T[:, :p] = H * sign[:, None]
    T[:, p:2 * p] = -H * sign[:, None]
    T[:, 2 * p:2 * p + m] = np.diag(sign)
    T[:, 2 * p + m:] = np.eye(m)
    rhs = g * sign
    basis = [2 * p + i if sign[i] > 0 else 2 * p + m + i for i in range(m)]
    tab = _Tableau(T, rhs.copy(), basis)

    art = np.zeros(nvar, dtype=bool)
    art[2 * p + m:] = True
    needs_phase1 = any(b >= 2 * p + m for b in tab.basis)
    if needs_phase1:
        phase1 = art.astype(float)
        tab.run(phase1, np.ones(nvar, dtype=bool), tol)
        infeas = float(phase1[tab.basis] @ tab.rhs)
        if infeas > tol * max(1.0, float(np.max(np.abs(g)))):
            return LPResult(INFEASIBLE)
        # drive remaining artificials out of the basis
        for row, bv in enumerate(list(tab.basis)):
            if art[bv]:
                cand = np.flatnonzero((np.abs(tab.T[row]) > 1e-9) & ~art)
                if cand.size:
                    tab.pivot(row, int(cand[0]))
    full_cost = np.concatenate([cost, -cost, np.zeros(2 * m)])
    allowed = ~art
    status = tab.run(full_cost, allowed, tol)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    z = np.zeros(nvar)
    z[tab.basis] = tab.rhs
    u = z[:p] - z[p:2 * p]
    return LPResult(OPTIMAL, float(cost @ u), u)
