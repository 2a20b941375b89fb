"""Problem data, solver configuration, spectral preprocessing.

An instance is

    min  0.5 * x'Qx + c'x + offset
    s.t. x'x <= radius_sq
         A x <= b

with ``A`` holding one constraint per row.  ``offset`` is a constant that
does not affect the minimizer; it lets reformulations (for example the
standard quadratic program embedding) keep their exact objective values.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from etrs.errors import (
    DimensionMismatch,
    EigenFailure,
    NonSymmetric,
    ZeroRowInfeasible,
)


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SolverConfig:
    sym_tol: float = 1e-10
    feas_tol: float = 1e-9
    root_tol: float = 1e-12
    cluster_tol: float = 1e-8
    rank_tol: float = 1e-9
    max_vertex_enum: int = 100_000
    parallel_facets: bool = False
    memoize: bool = True
    max_workers: Optional[int] = None

    def __post_init__(self):
        for name in ("sym_tol", "feas_tol", "root_tol", "cluster_tol", "rank_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.max_vertex_enum < 1:
            raise ValueError("max_vertex_enum must be positive")

    def with_tol(self, tol: float) -> "SolverConfig":
        """Rescale the feasibility and root tolerances from a single knob."""
        return dataclasses.replace(
            self, feas_tol=tol, root_tol=min(self.root_tol, tol * 1e-3)
        )


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    Q: np.ndarray
    c: np.ndarray
    A: np.ndarray = None
    b: np.ndarray = None
    radius_sq: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = c.shape[0]
        if Q.shape != (n, n):
            raise DimensionMismatch(f"Q has shape {Q.shape}, expected ({n}, {n})")
        if self.A is None or np.size(self.A) == 0:
            A = np.zeros((0, n))
        else:
            A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.zeros(0) if self.b is None else np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[1] != n:
            raise DimensionMismatch(f"A has {A.shape[1]} columns, expected {n}")
        if A.shape[0] != b.shape[0]:
            raise DimensionMismatch(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        if not self.radius_sq > 0:
            raise DimensionMismatch("radius_sq must be positive")
        for arr in (Q, c, A, b):
            if not np.all(np.isfinite(arr)):
                raise DimensionMismatch("instance data must be finite")
        object.__setattr__(self, "Q", _frozen(Q))
        object.__setattr__(self, "c", _frozen(c))
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "radius_sq", float(self.radius_sq))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def replace(self, **changes) -> "ProblemInstance":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigen-structure of Q: ``basis @ Q @ basis.T == diag(sigma)``, ``d = basis @ c``."""

    sigma: np.ndarray
    basis: np.ndarray
    d: np.ndarray
    k: int

    @property
    def n(self) -> int:
        return self.sigma.shape[0]

    def to_y(self, x):
        return self.basis @ x

    def to_x(self, y):
        return self.basis.T @ y


@dataclass
class SolutionReport:
    status: str
    value: Optional[float]
    x: Optional[np.ndarray]
    multiplier: Optional[float] = None
    active_set: tuple = ()
    trs0_solves: int = 0
    newdc_holds: Optional[bool] = None
    # which branch of the combination rule produced the answer at the root
    case: str = ""
    nodes_visited: int = 0
    memo_hits: int = 0
    max_depth: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def validate_instance(inst: ProblemInstance, cfg: SolverConfig = SolverConfig()) -> ProblemInstance:
    """Symmetrize Q and drop vacuous zero rows.

    Raises NonSymmetric if ``Q`` is asymmetric beyond ``sym_tol * ||Q||`` and
    ZeroRowInfeasible for a zero row whose right-hand side is negative.
    """
    Q = inst.Q
    scale = max(1.0, float(np.max(np.abs(Q)))) if Q.size else 1.0
    asym = float(np.max(np.abs(Q - Q.T))) if Q.size else 0.0
    if asym > cfg.sym_tol * scale:
        raise NonSymmetric(f"Q asymmetry {asym:.3e} exceeds tolerance")
    row_norms = np.linalg.norm(inst.A, axis=1)
    zero = row_norms == 0.0
    if np.any(zero & (inst.b < -cfg.feas_tol)):
        i = int(np.flatnonzero(zero & (inst.b < -cfg.feas_tol))[0])
        raise ZeroRowInfeasible(f"constraint {i} reads 0 <= {inst.b[i]}")
    keep = ~zero
    if asym == 0.0 and keep.all():
        return inst
    return inst.replace(Q=0.5 * (Q + Q.T), A=inst.A[keep], b=inst.b[keep])


def cluster_size(sigma: np.ndarray, cluster_tol: float) -> int:
    """Number of leading eigenvalues equal to sigma[0] up to the clustering rule."""
    if sigma.size == 0:
        return 0
    thresh = cluster_tol * max(1.0, abs(sigma[0]))
    return int(np.count_nonzero(sigma - sigma[0] <= thresh))


def spectral_decompose(inst: ProblemInstance, cfg: SolverConfig = SolverConfig()) -> SpectralData:
    try:
        sigma, vecs = np.linalg.eigh(inst.Q)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    basis = vecs.T
    k = cluster_size(sigma, cfg.cluster_tol)
    # snap the cluster to a single value so the hard case is detected exactly
    sigma = sigma.copy()
    sigma[:k] = sigma[0]
    return SpectralData(sigma=sigma, basis=basis, d=basis @ inst.c, k=k)


def objective_value(inst: ProblemInstance, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != inst.n:
        raise DimensionMismatch(f"x has {x.shape[0]} entries, expected {inst.n}")
    return float(0.5 * x @ inst.Q @ x + inst.c @ x + inst.offset)


def is_feasible(inst: ProblemInstance, x, tol: float) -> bool:
    x = np.asarray(x, dtype=float)
    if x @ x > inst.radius_sq + tol:
        return False
    return inst.m == 0 or bool(np.all(inst.A @ x <= inst.b + tol))
