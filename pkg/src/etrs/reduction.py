"""Recursive facet reduction for the trust region subproblem with linear cuts.

Each recursion node is an instance over the unit ball together with the
affine map ``x = origin + M w`` back to the caller's coordinates.  A node's
value is decided by, in order:

* a convex solve, when its Hessian is positive semidefinite;
* the global solution set of the unconstrained-ball problem, when that set
  meets the polytope;
* otherwise the best of the facet subproblems (one per constraint held at
  equality, each a smaller instance of the same kind) and the unique
  candidate for a local non-global minimizer of the ball problem, the latter
  only if it is strictly inside the polytope and beats every facet.

Facet subproblems are keyed by the set of original constraints held at
equality, so reaching the same flat through a different order is a memo hit.
"""
from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Optional, Tuple, Union

import numpy as np

from etrs.convex import convex_minimize
from etrs.errors import Infeasible, InfeasibleProblem, ZeroNormal
from etrs.geometry import BallSpec, Point, sphere_polytope_intersect
from etrs.lp import lp_minimize
from etrs.model import (
    ProblemInstance,
    SolutionReport,
    SolverConfig,
    SpectralData,
    objective_value,
    spectral_decompose,
    validate_instance,
)
from etrs.trs0 import Singleton, global_solve, local_nonglobal

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FacetBasis:
    P: np.ndarray
    z0: np.ndarray
    offset_sq: float


@dataclass
class ReductionStats:
    trs0_solves: int = 0
    nodes_visited: int = 0
    memo_hits: int = 0
    max_depth: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def bump(self, name: str, by: int = 1) -> None:
        with self._lock:
            setattr(self, name, getattr(self, name) + by)

    def depth(self, d: int) -> None:
        with self._lock:
            self.max_depth = max(self.max_depth, d)


@dataclass(frozen=True, eq=False)
class PointOnly:
    x: np.ndarray


@dataclass(frozen=True, eq=False)
class Reduced:
    """The facet subproblem, expressed over its own unit ball.

    Parent coordinates are recovered as ``z0 + scale * P @ w``.  ``kept``
    lists the parent rows that survive, in order.
    """

    instance: ProblemInstance
    facet: FacetBasis
    scale: float
    kept: Tuple[int, ...]
    # |P' a_i| / |a_i| for each kept row, used to spot rows parallel to the facet
    tilt: np.ndarray


class FacetInfeasible:
    """Marker returned when a facet subproblem has no feasible point."""

    def __repr__(self):
        return "FacetInfeasible"


INFEASIBLE = FacetInfeasible()


def facet_basis(a, b: float) -> FacetBasis:
    """Orthonormal basis of {x : a'x = 0} and the least-norm point of a'x = b."""
    a = np.asarray(a, dtype=float).reshape(-1)
    nrm = float(np.linalg.norm(a))
    if nrm == 0.0:
        raise ZeroNormal("facet normal is zero")
    v = a / nrm
    n = a.shape[0]
    # Householder reflector sending v to -sign(v_0) e_1
    u = v.copy()
    u[0] += math.copysign(1.0, v[0])
    refl = np.eye(n) - 2.0 * np.outer(u, u) / float(u @ u)
    P = refl[:, 1:]
    z0 = (b / nrm**2) * a
    return FacetBasis(P=P, z0=z0, offset_sq=float(b * b / nrm**2))


def restrict_to_facet(inst: ProblemInstance, j: int, cfg: SolverConfig = SolverConfig()):
    """Hold constraint ``j`` at equality; returns INFEASIBLE, PointOnly or Reduced."""
    a, bj = inst.A[j], float(inst.b[j])
    fb = facet_basis(a, bj)
    r2 = inst.radius_sq - fb.offset_sq
    if r2 < -cfg.feas_tol:
        return INFEASIBLE
    if abs(r2) <= cfg.feas_tol or inst.n == 1:
        return PointOnly(fb.z0)
    scale = math.sqrt(r2)
    P, z0 = fb.P, fb.z0
    Q, c = inst.Q, inst.c
    kept = tuple(i for i in range(inst.m) if i != j)
    A_par = inst.A[list(kept)]
    PA = A_par @ P
    norms = np.linalg.norm(A_par, axis=1)
    tilt = np.linalg.norm(PA, axis=1) / np.where(norms > 0, norms, 1.0)
    Qp = r2 * (P.T @ Q @ P)
    child = ProblemInstance(
        Q=0.5 * (Qp + Qp.T),
        c=scale * (P.T @ (Q @ z0 + c)),
        A=scale * PA,
        b=inst.b[list(kept)] - A_par @ z0,
        radius_sq=1.0,
        offset=inst.offset + 0.5 * float(z0 @ Q @ z0) + float(c @ z0),
    )
    return Reduced(child, fb, scale, kept, tilt)


def prune_redundant(red: Reduced, cfg: SolverConfig = SolverConfig()):
    """Drop rows parallel to the facet that it already satisfies.

    Returns INFEASIBLE if a parallel row is violated on the facet.
    """
    if not red.kept:
        return red
    parallel = red.tilt <= cfg.rank_tol
    if not parallel.any():
        return red
    inst = red.instance
    if np.any(parallel & (inst.b < -cfg.feas_tol)):
        return INFEASIBLE
    keep = ~parallel
    child = inst.replace(A=inst.A[keep], b=inst.b[keep])
    kept = tuple(k for k, flag in zip(red.kept, keep) if flag)
    return Reduced(child, red.facet, red.scale, kept, red.tilt[keep])


@dataclass(frozen=True, eq=False)
class _Node:
    inst: ProblemInstance
    origin: np.ndarray
    M: np.ndarray
    scale_sq: float
    rows: Tuple[int, ...]
    fixed: FrozenSet[int]
    depth: int

    def to_original(self, w) -> np.ndarray:
        return self.origin + self.M @ w

    def child(self, red: Reduced, j: int) -> "_Node":
        fb = red.facet
        return _Node(
            inst=red.instance,
            origin=self.to_original(fb.z0),
            M=self.M @ (red.scale * fb.P),
            scale_sq=self.scale_sq * red.scale**2,
            rows=tuple(self.rows[i] for i in red.kept),
            fixed=self.fixed | {self.rows[j]},
            depth=self.depth + 1,
        )


@dataclass(frozen=True, eq=False)
class _Result:
    value: float
    x: np.ndarray
    multiplier: Optional[float]
    case: str


class _Memo:
    """Insert-or-get table; concurrent requests for one key share a Future."""

    def __init__(self, enabled: bool):
        self.enabled = enabled
        self._table: Dict[FrozenSet[int], Future] = {}
        self._lock = threading.Lock()

    def get_or_compute(self, key, compute, stats: ReductionStats):
        if not self.enabled:
            return compute()
        with self._lock:
            fut = self._table.get(key)
            owner = fut is None
            if owner:
                fut = Future()
                self._table[key] = fut
        if not owner:
            stats.bump("memo_hits")
            return fut.result()
        try:
            res = compute()
        except BaseException as exc:
            fut.set_exception(exc)
            raise
        fut.set_result(res)
        return res


class _Solver:
    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.stats = ReductionStats()
        self.memo = _Memo(cfg.memoize)
        self.pool: Optional[ThreadPoolExecutor] = None
        self.root: Optional[_Node] = None
        self._canonical: Dict[FrozenSet[int], Optional[_Node]] = {}
        self._canonical_lock = threading.Lock()

    def row_tol(self, A: np.ndarray) -> np.ndarray:
        return self.cfg.feas_tol * (1.0 + np.linalg.norm(A, axis=1))

    def feasible(self, inst: ProblemInstance, w, strict: bool = False) -> bool:
        if inst.m == 0:
            return True
        slack = inst.A @ w - inst.b
        tol = self.row_tol(inst.A)
        return bool(np.all(slack < -tol)) if strict else bool(np.all(slack <= tol))

    def point_result(self, node: _Node, w, case: str, mult=None) -> _Result:
        val = 0.5 * float(w @ node.inst.Q @ w) + float(node.inst.c @ w) + node.inst.offset
        return _Result(val, node.to_original(w), mult, case)

    # -- recursion ---------------------------------------------------------
    def solve(self, node: _Node) -> Optional[_Result]:
        self.stats.bump("nodes_visited")
        self.stats.depth(node.depth)
        inst, cfg = node.inst, self.cfg
        sd = spectral_decompose(inst, cfg)
        spread = float(np.max(np.abs(sd.sigma))) if sd.n else 0.0
        if sd.sigma[0] >= -cfg.rank_tol * spread:
            return self.convex_leaf(node)

        gs = global_solve(sd, cfg)
        self.stats.bump("trs0_solves")
        hit = self.global_hit(node, sd, gs)
        if hit is not None:
            return hit
        if inst.m == 0:
            # the global set is always a hit without constraints
            raise AssertionError("unconstrained node missed its own global set")

        best = self.best_facet(node)
        cand = local_nonglobal(sd, cfg)
        if cand is not None:
            w = sd.to_x(cand.y_bar)
            if self.feasible(inst, w, strict=True):
                res = self.point_result(node, w, "local", cand.mu_bar / node.scale_sq)
                if best is None or res.value < best.value:
                    return res
        if best is None:
            return None
        return _Result(best.value, best.x, best.multiplier, "facet")

    def convex_leaf(self, node: _Node) -> Optional[_Result]:
        inst = node.inst
        try:
            res = convex_minimize(inst.Q, inst.c, inst.A, inst.b, radius_sq=1.0, cfg=self.cfg)
        except Infeasible:
            return None
        return self.point_result(node, res.x, "convex", res.ball_multiplier / node.scale_sq)

    def global_hit(self, node: _Node, sd: SpectralData, gs) -> Optional[_Result]:
        inst = node.inst
        mult = gs.mu_star / node.scale_sq
        if isinstance(gs, Singleton):
            w = sd.to_x(gs.y_star)
            return self.point_result(node, w, "global", mult) if self.feasible(inst, w) else None
        if inst.m == 0:
            return self.point_result(node, sd.to_x(gs.representative()), "global", mult)
        At = inst.A @ sd.basis.T
        H = At[:, : gs.k]
        g = inst.b - At[:, gs.k:] @ gs.tail
        if gs.radius_sq <= 0.0:
            y = gs.point(np.zeros(gs.k))
            w = sd.to_x(y)
            return self.point_result(node, w, "global", mult) if self.feasible(inst, w) else None
        wit = sphere_polytope_intersect(H, g, BallSpec(gs.radius_sq), self.cfg)
        if isinstance(wit, Point):
            return self.point_result(node, sd.to_x(gs.point(wit.u)), "global", mult)
        return None

    def canonical_node(self, key: FrozenSet[int]) -> Optional[_Node]:
        """The node for ``key`` built by fixing its rows in ascending order.

        Different fixing orders reach the same flat with different rounding;
        building every memo entry along one order makes the answer independent
        of which thread gets there first.  None when the chain degenerates (a
        tangent or empty facet, or a row pruned on the way).
        """
        if key == self.root.fixed:
            return self.root
        with self._canonical_lock:
            if key in self._canonical:
                return self._canonical[key]
        last = max(key - self.root.fixed)
        parent = self.canonical_node(key - {last})
        node = None
        if parent is not None and last in parent.rows:
            j = parent.rows.index(last)
            red = restrict_to_facet(parent.inst, j, self.cfg)
            if isinstance(red, Reduced):
                red = prune_redundant(red, self.cfg)
                if isinstance(red, Reduced):
                    node = parent.child(red, j)
        with self._canonical_lock:
            return self._canonical.setdefault(key, node)

    def facet(self, node: _Node, j: int) -> Optional[_Result]:
        key = node.fixed | {node.rows[j]}
        last = max(key - self.root.fixed)
        if node.rows[j] != last:
            parent = self.canonical_node(key - {last})
            if parent is not None and last in parent.rows:
                node, j = parent, parent.rows.index(last)
        inst = node.inst

        def compute():
            red = restrict_to_facet(inst, j, self.cfg)
            if red is INFEASIBLE:
                return None
            if isinstance(red, PointOnly):
                z = red.x
                if z @ z > inst.radius_sq + self.cfg.feas_tol:
                    return None
                others = [i for i in range(inst.m) if i != j]
                if others:
                    slack = inst.A[others] @ z - inst.b[others]
                    if np.any(slack > self.row_tol(inst.A[others])):
                        return None
                return self.point_result(node, z, "point")
            red = prune_redundant(red, self.cfg)
            if red is INFEASIBLE:
                return None
            return self.solve(node.child(red, j))

        return self.memo.get_or_compute(key, compute, self.stats)

    def best_facet(self, node: _Node) -> Optional[_Result]:
        m = node.inst.m
        if self.pool is not None and node.depth == 0 and m > 1:
            futures = [self.pool.submit(self.facet, node, j) for j in range(m)]
            results = [f.result() for f in futures]
        else:
            results = [self.facet(node, j) for j in range(m)]
        best = None
        tie = 10 * self.cfg.feas_tol
        for res in results:
            if res is None:
                continue
            if best is None or res.value < best.value - tie:
                best = res
        return best


def _forced_rows(inst: ProblemInstance, cfg: SolverConfig):
    """Rows that hold with equality on the whole polytope-in-box (None if empty)."""
    bound = math.sqrt(inst.radius_sq)
    forced = []
    for i in range(inst.m):
        res = lp_minimize(inst.A[i], inst.A, inst.b, bound=bound)
        if res.status == "infeasible":
            return None
        tol = cfg.feas_tol * (1.0 + np.linalg.norm(inst.A[i]))
        if res.value >= inst.b[i] - tol:
            forced.append(i)
    return forced


def _active_set(inst: ProblemInstance, x, cfg: SolverConfig) -> tuple:
    if inst.m == 0:
        return ()
    tol = 10 * cfg.feas_tol * (1.0 + np.linalg.norm(inst.A, axis=1))
    return tuple(int(i) for i in np.flatnonzero(np.abs(inst.A @ x - inst.b) <= tol))


def solve_extended(inst: ProblemInstance, cfg: SolverConfig = SolverConfig(),
                   raise_on_infeasible: bool = False) -> SolutionReport:
    """Globally minimize the instance's quadratic over ball and polytope."""
    original = inst
    inst = validate_instance(inst, cfg)
    solver = _Solver(cfg)

    def infeasible(reason):
        if raise_on_infeasible:
            raise InfeasibleProblem(reason)
        return SolutionReport(status="infeasible", value=None, x=None,
                              trs0_solves=solver.stats.trs0_solves, case=reason)

    # phase 1: least-norm point of the polytope
    fallback = None
    if inst.m:
        try:
            near = convex_minimize(np.eye(inst.n), np.zeros(inst.n), inst.A, inst.b, cfg=cfg)
        except Infeasible:
            return infeasible("polytope is empty")
        if near.x @ near.x > inst.radius_sq + cfg.feas_tol:
            return infeasible("polytope misses the ball")
        fallback = near.x

    rho = math.sqrt(inst.radius_sq)
    root_inst = ProblemInstance(
        Q=inst.Q * inst.radius_sq, c=inst.c * rho, A=inst.A * rho, b=inst.b,
        radius_sq=1.0, offset=inst.offset,
    )
    node = _Node(root_inst, np.zeros(inst.n), rho * np.eye(inst.n), inst.radius_sq,
                 tuple(range(inst.m)), frozenset(), 0)

    result = None
    pinned = False
    while node.inst.m:
        forced = _forced_rows(node.inst, cfg)
        if forced is None:
            return infeasible("polytope is empty")
        if not forced:
            break
        j = forced[0]
        red = restrict_to_facet(node.inst, j, cfg)
        if red is INFEASIBLE:
            return infeasible("implicit equality misses the ball")
        if isinstance(red, PointOnly):
            result = solver.point_result(node, red.x, "point")
            pinned = True
            break
        red = prune_redundant(red, cfg)
        if red is INFEASIBLE:
            return infeasible("implicit equalities are inconsistent")
        node = node.child(red, j)
        node = _Node(node.inst, node.origin, node.M, node.scale_sq, node.rows, node.fixed, 0)

    if not pinned:
        solver.root = node
        if cfg.parallel_facets:
            with ThreadPoolExecutor(max_workers=cfg.max_workers) as pool:
                solver.pool = pool
                result = solver.solve(node)
        else:
            result = solver.solve(node)

    if result is None:
        if fallback is None:
            return infeasible("no feasible point found")
        log.debug("recursion found no point; using the phase-1 point")
        result = _Result(objective_value(inst, fallback), fallback, None, "phase1")

    x = result.x
    st = solver.stats
    return SolutionReport(
        status="optimal",
        value=objective_value(original, x),
        x=x,
        multiplier=result.multiplier,
        active_set=_active_set(original, x, cfg),
        trs0_solves=st.trs0_solves,
        case=result.case,
        nodes_visited=st.nodes_visited,
        memo_hits=st.memo_hits,
        max_depth=st.max_depth,
    )
