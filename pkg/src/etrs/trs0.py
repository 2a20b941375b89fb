"""Classical trust region subproblem: min 0.5 y'Σy + d'y s.t. y'y <= 1.

Everything is phrased in eigen-coordinates (see ``model.spectral_decompose``).
Internally the multiplier mu is shifted to ``t = mu + sigma_1`` so that the
distance to the leading pole, ``sigma_1 + mu``, is carried exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from etrs.errors import PoleProximity
from etrs.model import SolverConfig, SpectralData

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class SecularFunction:
    sigma: np.ndarray
    d: np.ndarray
    k: int = 1

    @classmethod
    def from_spectral(cls, sd: SpectralData) -> "SecularFunction":
        return cls(sigma=sd.sigma, d=sd.d, k=sd.k)


@dataclass(frozen=True, eq=False)
class Singleton:
    y_star: np.ndarray
    mu_star: float

    def representative(self) -> np.ndarray:
        return self.y_star


@dataclass(frozen=True, eq=False)
class Sphere:
    """All y = (u, tail) with u'u = radius_sq, u in R^k."""

    k: int
    tail: np.ndarray
    radius_sq: float
    mu_star: float

    def point(self, u) -> np.ndarray:
        return np.concatenate([np.asarray(u, dtype=float), self.tail])

    def representative(self) -> np.ndarray:
        u = np.zeros(self.k)
        u[0] = math.sqrt(self.radius_sq)
        return self.point(u)


GlobalSet = Union[Singleton, Sphere]


@dataclass(frozen=True, eq=False)
class LocalCandidate:
    y_bar: np.ndarray
    mu_bar: float
    phi_prime: float


def secular_eval(sf: SecularFunction, mu: float, pole_guard: float = 0.0) -> Tuple[float, float]:
    """Return phi(mu) and phi'(mu)."""
    shifted = sf.sigma + mu
    live = sf.d != 0
    if np.any(np.abs(shifted[live]) <= pole_guard):
        raise PoleProximity(f"mu={mu} lies on a pole of the secular function")
    d2 = sf.d[live] ** 2
    s = shifted[live]
    return float(np.sum(d2 / s**2) - 1.0), float(np.sum(-2.0 * d2 / s**3))


def _shifted_phi(gaps: np.ndarray, d2: np.ndarray, rhs: float = 1.0) -> Callable:
    """phi as a function of t = mu + sigma_1: sum d_i^2 / (gap_i + t)^2 - rhs."""

    def fn(t):
        s = gaps + t
        return float(np.sum(d2 / s**2) - rhs), float(np.sum(-2.0 * d2 / s**3))

    return fn


def safeguarded_root(fn: Callable, lo: float, hi: float, increasing: bool, tol: float,
                     start: Optional[float] = None, maxiter: int = 500) -> float:
    """Newton's method kept inside a sign-change bracket, bisecting on escape.

    ``fn`` returns (value, derivative).  The endpoints are never evaluated,
    so they may be poles.
    """
    t = 0.5 * (lo + hi) if start is None or not lo < start < hi else start
    best_t, best_v = t, math.inf
    for _ in range(maxiter):
        v, dv = fn(t)
        if abs(v) < best_v:
            best_t, best_v = t, abs(v)
        if v == 0.0 or abs(v) <= tol:
            return t
        if (v > 0) == increasing:
            hi = t
        else:
            lo = t
        if hi - lo <= 4 * _EPS * max(abs(lo), abs(hi), 1e-300):
            return best_t
        tn = t - v / dv if dv != 0 and math.isfinite(dv) else math.nan
        if not lo < tn < hi:
            tn = 0.5 * (lo + hi)
        t = tn
    return best_t


def _hard_threshold(d: np.ndarray, cfg: SolverConfig) -> float:
    return cfg.root_tol * (1.0 + float(np.linalg.norm(d)))


def global_solve(sd: SpectralData, cfg: SolverConfig = SolverConfig()) -> GlobalSet:
    """Global solution set of the trust region subproblem in eigen-coordinates."""
    sigma, d, k = sd.sigma, sd.d, sd.k
    s1 = float(sigma[0])
    gaps = sigma - s1
    gaps[:k] = 0.0
    hard = float(np.linalg.norm(d[:k])) <= _hard_threshold(d, cfg)
    if hard:
        d = d.copy()
        d[:k] = 0.0
    d2 = d**2

    if s1 >= 0.0:
        # PSD: the unconstrained minimizer of least norm, if it fits in the ball
        if s1 > 0.0 or hard:
            y = np.zeros_like(d)
            pos = sigma > 0.0
            y[pos] = -d[pos] / sigma[pos]
            if y @ y <= 1.0:
                return Singleton(y_star=y, mu_star=0.0)
        t_lo = s1
    else:
        t_lo = 0.0
        if hard:
            tail = -d[k:] / gaps[k:]
            slack = 1.0 - float(tail @ tail)
            if slack >= 0.0 or abs(slack) <= cfg.root_tol:
                r2 = 0.0 if slack <= cfg.root_tol else slack
                return Sphere(k=k, tail=tail, radius_sq=r2, mu_star=-s1)

    fn = _shifted_phi(gaps, d2)
    t_hi = t_lo + float(np.linalg.norm(d))
    t = safeguarded_root(fn, t_lo, t_hi, increasing=False, tol=cfg.root_tol * 1e-2)
    y = -d / (gaps + t)
    return Singleton(y_star=y, mu_star=t - s1)


def local_nonglobal(sd: SpectralData, cfg: SolverConfig = SolverConfig()) -> Optional[LocalCandidate]:
    """The unique candidate for a local non-global minimizer, if one exists.

    The multiplier lies in (max(-sigma_2, 0), -sigma_1) and is the root of the
    secular function at which its derivative is positive.
    """
    sigma, d, k = sd.sigma, sd.d, sd.k
    s1 = float(sigma[0])
    if k >= 2 or s1 >= 0.0:
        return None
    if abs(d[0]) <= _hard_threshold(d, cfg):
        return None
    gaps = sigma - s1
    gaps[0] = 0.0
    d2 = d**2
    fn = _shifted_phi(gaps, d2)
    gap2 = float(gaps[1]) if sd.n > 1 else math.inf
    # interval for t = mu + s1 is (max(-gap2, s1), 0)
    left = max(-gap2, s1)

    # minimizer of the convex function on (left, 0): bisect on the derivative
    lo, hi = left, 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        _, dv = fn(mid)
        if dv < 0:
            lo = mid
        else:
            hi = mid
    t_min = 0.5 * (lo + hi)
    v_min, _ = fn(t_min)
    if not v_min < 0.0:
        return None
    t_bar = safeguarded_root(fn, t_min, 0.0, increasing=True, tol=cfg.root_tol * 1e-2)
    v, dv = fn(t_bar)
    if not (left < t_bar < 0.0) or not dv > 0.0:
        return None
    # tangency (double root) cannot be certified
    if abs(v_min) <= cfg.root_tol:
        return None
    y = -d / (gaps + t_bar)
    return LocalCandidate(y_bar=y, mu_bar=t_bar - s1, phi_prime=dv)


def trs_value(sd: SpectralData, y) -> float:
    y = np.asarray(y, dtype=float)
    return float(0.5 * y @ (sd.sigma * y) + sd.d @ y)
