"""Polytopes L = {u : Hu <= g} against balls B = {u : u'u <= r}.

The central routine, ``sphere_polytope_intersect``, decides whether L meets
the sphere u'u = r and returns a witness when it does.  It works in stages:
find a common point of L and B, then push it out to the sphere along a
recession direction of L or towards a vertex of L outside the ball.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional, Union

import numpy as np

from etrs.convex import ConvexResult, convex_minimize
from etrs.errors import CombinatorialBudgetExceeded, Infeasible, ZeroDirection
from etrs.lp import LPResult, lp_minimize
from etrs.model import SolverConfig

__all__ = [
    "Polytope", "BallSpec", "Empty", "Point", "Bounded", "UnboundedAlong",
    "lp_minimize", "LPResult", "convex_minimize", "ConvexResult",
    "column_dependence_check", "boundedness_probe", "enumerate_vertices",
    "segment_sphere_crossing", "ray_to_sphere", "sphere_polytope_intersect",
]


@dataclass(frozen=True, eq=False)
class Polytope:
    H: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        g = np.asarray(self.g, dtype=float).reshape(-1)
        if H.shape[0] != g.shape[0]:
            raise ValueError("H and g disagree on the number of rows")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "g", g)

    @property
    def dim(self) -> int:
        return self.H.shape[1]

    def contains(self, u, tol: float) -> bool:
        return bool(np.all(self.H @ u - self.g <= tol * (1.0 + np.linalg.norm(self.H, axis=1))))


@dataclass(frozen=True)
class BallSpec:
    radius_sq: float

    def __post_init__(self):
        if not self.radius_sq > 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class Empty:
    reason: str = ""


@dataclass(frozen=True, eq=False)
class Point:
    u: np.ndarray
    how: str = ""


IntersectionWitness = Union[Empty, Point]


@dataclass(frozen=True)
class Bounded:
    value: float


@dataclass(frozen=True, eq=False)
class UnboundedAlong:
    direction: np.ndarray
    value: float


def _rank(M: np.ndarray, cfg: SolverConfig) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.count_nonzero(s > cfg.rank_tol * s[0] * max(M.shape)))


def column_dependence_check(H, cfg: SolverConfig = SolverConfig()) -> bool:
    """True when the columns of H are linearly dependent."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    return _rank(H, cfg) < H.shape[1]


def boundedness_probe(H, g, u0=None, cfg: SolverConfig = SolverConfig()):
    """Decide boundedness of a nonempty polytope with independent columns.

    Solves min e'Hu over Hu <= 0, |u|_inf <= 1; a negative optimum exposes a
    recession direction.  ``u0`` (a known feasible point) is not needed by the
    computation and is accepted for interface symmetry.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    cost = H.sum(axis=0)
    res = lp_minimize(cost, H, np.zeros(H.shape[0]), bound=1.0)
    if res.value >= -cfg.feas_tol:
        return Bounded(res.value)
    return UnboundedAlong(direction=res.x, value=res.value)


def enumerate_vertices(H, g, cfg: SolverConfig = SolverConfig()) -> List[np.ndarray]:
    """All vertices of a bounded polytope, by solving every p-row subsystem."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    g = np.asarray(g, dtype=float).reshape(-1)
    m, p = H.shape
    if m < p:
        return []
    if math.comb(m, p) > cfg.max_vertex_enum:
        raise CombinatorialBudgetExceeded(
            f"C({m},{p}) = {math.comb(m, p)} exceeds max_vertex_enum={cfg.max_vertex_enum}"
        )
    poly = Polytope(H, g)
    out: List[np.ndarray] = []
    for S in combinations(range(m), p):
        sub = H[list(S)]
        s = np.linalg.svd(sub, compute_uv=False)
        if s[-1] <= cfg.rank_tol * max(1.0, s[0]) * p:
            continue
        u = np.linalg.solve(sub, g[list(S)])
        if not poly.contains(u, cfg.feas_tol):
            continue
        if any(np.max(np.abs(u - v)) <= 10 * cfg.feas_tol * (1.0 + np.max(np.abs(v))) for v in out):
            continue
        out.append(u)
    return out


def ray_to_sphere(x, z, r: float = 1.0) -> np.ndarray:
    """x + beta*z with beta >= 0 the nonnegative root of |x + beta z|^2 = r."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    zz = float(z @ z)
    if zz == 0.0:
        raise ZeroDirection("direction vector is zero")
    xz = float(x @ z)
    disc = xz * xz + zz * (r - float(x @ x))
    beta = (-xz + math.sqrt(max(disc, 0.0))) / zz
    return x + beta * z


def segment_sphere_crossing(inside, outside, r: float) -> np.ndarray:
    """The point of the segment [inside, outside] lying on u'u = r."""
    inside = np.asarray(inside, dtype=float)
    outside = np.asarray(outside, dtype=float)
    if float(outside @ outside) == r:
        return outside.copy()
    step = outside - inside
    ss = float(step @ step)
    if ss == 0.0:
        return inside.copy()
    a = float(inside @ step)
    disc = a * a - ss * (float(inside @ inside) - r)
    t = (-a + math.sqrt(max(disc, 0.0))) / ss
    return inside + min(max(t, 0.0), 1.0) * step


def sphere_polytope_intersect(H, g, ball: BallSpec, cfg: SolverConfig = SolverConfig()) -> IntersectionWitness:
    """Find a point of {Hu <= g, u'u = r}, or report that there is none."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    g = np.asarray(g, dtype=float).reshape(-1)
    p = H.shape[1]
    r = ball.radius_sq
    tol = cfg.feas_tol
    if H.shape[0] == 0:
        u = np.zeros(p)
        u[0] = math.sqrt(r)
        return Point(u, "no constraints")

    # common point of L and B: the least-norm point of L
    try:
        near = convex_minimize(np.eye(p), np.zeros(p), H, g, cfg=cfg)
    except Infeasible:
        return Empty("polytope is empty")
    u_hat = near.x
    nrm = float(u_hat @ u_hat)
    if nrm > r + tol:
        return Empty("polytope and ball are separated")
    if abs(nrm - r) <= tol:
        return Point(u_hat, "nearest point on sphere")

    if column_dependence_check(H, cfg):
        _, _, Vt = np.linalg.svd(H)
        return Point(ray_to_sphere(u_hat, Vt[-1], r), "lineality direction")

    probe = boundedness_probe(H, g, u_hat, cfg)
    if isinstance(probe, UnboundedAlong):
        return Point(ray_to_sphere(u_hat, probe.direction, r), "recession direction")

    verts = enumerate_vertices(H, g, cfg)
    norms = np.array([v @ v for v in verts])
    if norms.size == 0 or norms.max() < r - tol:
        return Empty("polytope strictly inside ball")
    on = np.flatnonzero(np.abs(norms - r) <= tol)
    if on.size:
        return Point(verts[int(on[0])].copy(), "vertex on sphere")
    far = verts[int(np.argmax(norms))]
    return Point(segment_sphere_crossing(u_hat, far, r), "segment to outer vertex")
