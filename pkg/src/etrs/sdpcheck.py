"""Rank conditions under which the semidefinite relaxation is exact.

No semidefinite program is solved.  When the stacked matrix
``[Q - lmin*I, a_1, ..., a_m]`` has rank at most n-1, the problem shares its
optimal value with the convex surrogate

    min 0.5 x'(Q - lmin*I)x + c'x + 0.5*lmin*r   over the same feasible set,

and a surrogate minimizer strictly inside the ball can be pushed onto the
sphere along a common null direction without changing the objective.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from etrs.convex import convex_minimize
from etrs.geometry import ray_to_sphere
from etrs.model import ProblemInstance, SolverConfig

__all__ = [
    "ConditionReport", "check_dc", "check_newdc", "surrogate_solve",
    "lift_to_sphere", "certify_tightness", "stacked_matrix",
]


@dataclass(frozen=True, eq=False)
class ConditionReport:
    lambda_min: float
    dc_holds: bool
    newdc_holds: bool
    rank_bracket: Tuple[int, int]
    kernel_dim: int
    span_dim: int
    surrogate_value: Optional[float] = None
    surrogate_point: Optional[np.ndarray] = None
    lifted_point: Optional[np.ndarray] = None


def _lambda_min(inst: ProblemInstance) -> float:
    return float(np.linalg.eigvalsh(inst.Q)[0])


def stacked_matrix(inst: ProblemInstance) -> np.ndarray:
    """[Q - lmin*I, a_1, ..., a_m], an n x (n+m) matrix."""
    shifted = inst.Q - _lambda_min(inst) * np.eye(inst.n)
    return np.hstack([shifted, inst.A.T])


def _ranks(inst: ProblemInstance, cfg: SolverConfig):
    """Ranks of the shifted Hessian, the constraint normals, and both stacked.

    One absolute threshold is shared by all three so the rank inequalities
    between them survive rounding.  It is scaled by the larger of the stacked
    matrix and Q itself: the shift Q - lmin*I carries rounding of order
    eps*|Q|, which would otherwise look full rank when Q is a multiple of I.
    """
    n, m = inst.n, inst.m
    stacked = stacked_matrix(inst)
    s = np.linalg.svd(stacked, compute_uv=False)
    scale = max(float(s[0]) if s.size else 0.0, float(np.linalg.norm(inst.Q, 2)))
    thresh = cfg.rank_tol * scale * max(n, n + m)

    def rank(M):
        if M.size == 0:
            return 0
        return int(np.count_nonzero(np.linalg.svd(M, compute_uv=False) > thresh))

    return rank(stacked[:, :n]), rank(inst.A), int(np.count_nonzero(s > thresh))


def check_dc(inst: ProblemInstance, cfg: SolverConfig = SolverConfig()) -> bool:
    """dim Ker(Q - lmin*I) >= dim span{a_i} + 1."""
    r_shift, r_a, _ = _ranks(inst, cfg)
    return inst.n - r_shift >= r_a + 1


def check_newdc(inst: ProblemInstance, cfg: SolverConfig = SolverConfig()) -> bool:
    """rank [Q - lmin*I, a_1, ..., a_m] <= n - 1."""
    return _ranks(inst, cfg)[2] <= inst.n - 1


def surrogate_solve(inst: ProblemInstance, cfg: SolverConfig = SolverConfig()):
    """Convexified problem: returns (value, minimizer, ball multiplier)."""
    shift = min(_lambda_min(inst), 0.0)
    G = inst.Q - shift * np.eye(inst.n)
    res = convex_minimize(G, inst.c, inst.A, inst.b, radius_sq=inst.radius_sq, cfg=cfg)
    value = res.value + 0.5 * shift * inst.radius_sq + inst.offset
    return value, res.x, res.ball_multiplier


def lift_to_sphere(x_star, z, radius_sq: float = 1.0) -> np.ndarray:
    """x* + beta*z on the sphere, beta the nonnegative root of |x* + beta z|^2 = r."""
    return ray_to_sphere(x_star, z, radius_sq)


def _null_direction(inst: ProblemInstance) -> np.ndarray:
    """A unit z with (Q - lmin*I) z = 0 and a_i'z = 0 for every i."""
    U, _, _ = np.linalg.svd(stacked_matrix(inst))
    return U[:, -1]


def certify_tightness(inst: ProblemInstance, cfg: SolverConfig = SolverConfig()) -> ConditionReport:
    lmin = _lambda_min(inst)
    r_shift, r_a, r_all = _ranks(inst, cfg)
    n = inst.n
    dc = n - r_shift >= r_a + 1
    newdc = r_all <= n - 1
    value, x, ball_mult = surrogate_solve(inst, cfg)
    lifted = None
    if newdc:
        if x @ x < inst.radius_sq - cfg.feas_tol:
            lifted = lift_to_sphere(x, _null_direction(inst), inst.radius_sq)
        else:
            lifted = x.copy()
    return ConditionReport(
        lambda_min=lmin,
        dc_holds=dc,
        newdc_holds=newdc,
        rank_bracket=(r_all, n - 1),
        kernel_dim=n - r_shift,
        span_dim=r_a,
        surrogate_value=value,
        surrogate_point=x,
        lifted_point=lifted,
    )
