import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from etrs.errors import InfeasibleProblem
from etrs.instances import random_instance
from etrs.model import ProblemInstance, SolverConfig, objective_value, spectral_decompose
from etrs.oracle import kkt_enumerate
from etrs.reduction import (
    INFEASIBLE, PointOnly, Reduced, facet_basis, prune_redundant, restrict_to_facet, solve_extended,
)
from etrs.trs0 import Singleton, global_solve

from conftest import tight_cut, gap_cut, random_symmetric

CFG = SolverConfig()


def rel_close(a, b, tol=1e-6):
    return abs(a - b) <= tol * (1 + abs(b))


# -- facet algebra ----------------------------------------------------------

def test_facet_basis_offset_plane():
    fb = facet_basis([1.0, 0.0], 0.5)
    np.testing.assert_allclose(fb.z0, [0.5, 0.0])
    assert fb.offset_sq == 0.25
    np.testing.assert_allclose(np.abs(fb.P[:, 0]), [0.0, 1.0], atol=1e-15)


def test_facet_basis_through_origin():
    fb = facet_basis([0.0, -1.0], 0.0)
    np.testing.assert_array_equal(fb.z0, [0.0, 0.0])
    assert fb.offset_sq == 0.0
    np.testing.assert_allclose(np.abs(fb.P[:, 0]), [1.0, 0.0], atol=1e-15)


def test_facet_basis_scaled_normal():
    fb = facet_basis([3.0, 0.0], 3.0)
    np.testing.assert_allclose(fb.z0, [1.0, 0.0])
    assert fb.offset_sq == pytest.approx(1.0)


@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_facet_basis_orthonormal(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(n)
    fb = facet_basis(a, float(rng.standard_normal()))
    np.testing.assert_allclose(fb.P.T @ fb.P, np.eye(n - 1), atol=1e-13)
    assert np.max(np.abs(a @ fb.P)) <= 1e-13 * np.linalg.norm(a)


def test_restrict_hand_example():
    inst = ProblemInstance(np.diag([-1.0, 2.0]), np.zeros(2), [[1.0, 0.0]], [0.5])
    red = restrict_to_facet(inst, 0)
    assert isinstance(red, Reduced)
    assert red.instance.n == 1 and red.instance.m == 0
    np.testing.assert_allclose(red.instance.Q, [[1.5]])
    np.testing.assert_allclose(red.instance.c, [0.0], atol=1e-15)
    assert red.instance.offset == pytest.approx(-0.125)
    assert red.scale == pytest.approx(np.sqrt(0.75))
    # rescaled problem is convex with its minimum at w = 0, i.e. x = (0.5, 0)
    rep = solve_extended(red.instance)
    assert rep.value == pytest.approx(-0.125)
    x = red.facet.z0 + red.scale * red.facet.P @ rep.x
    np.testing.assert_allclose(x, [0.5, 0.0], atol=1e-12)


def test_restrict_plane_outside_ball():
    inst = ProblemInstance(np.eye(2), np.zeros(2), [[1.0, 0.0]], [2.0])
    assert restrict_to_facet(inst, 0) is INFEASIBLE


def test_restrict_tangent_plane():
    inst = ProblemInstance(np.eye(2), np.zeros(2), [[1.0, 0.0]], [1.0])
    red = restrict_to_facet(inst, 0)
    assert isinstance(red, PointOnly)
    np.testing.assert_allclose(red.x, [1.0, 0.0])


def _two_row(b2):
    return ProblemInstance(np.eye(2), np.zeros(2), [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [0.5, b2, 0.3])


def test_prune_duplicate_row():
    red = prune_redundant(restrict_to_facet(_two_row(0.5), 0))
    assert red.kept == (2,)


def test_prune_violated_parallel_row():
    assert prune_redundant(restrict_to_facet(_two_row(-0.5), 0)) is INFEASIBLE


def test_prune_keeps_tilted_rows():
    red = prune_redundant(restrict_to_facet(_two_row(0.9), 0))
    assert red.kept == (2,)
    inst = ProblemInstance(np.eye(2), np.zeros(2), [[1.0, 0.0], [1.0, 1.0]], [0.5, 0.3])
    assert prune_redundant(restrict_to_facet(inst, 0)).kept == (1,)


@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 3))
def test_reduced_objective_matches_parent(seed, n, m):
    rng = np.random.default_rng(seed)
    inst = random_instance(n, m, int(rng.integers(2**31)))
    j = int(rng.integers(m))
    red = restrict_to_facet(inst, j)
    if not isinstance(red, Reduced):
        return
    w = rng.standard_normal(n - 1)
    x = red.facet.z0 + red.scale * red.facet.P @ w
    assert abs(inst.A[j] @ x - inst.b[j]) <= 1e-12 * (1 + np.linalg.norm(x))
    assert objective_value(red.instance, w) == pytest.approx(objective_value(inst, x), abs=1e-10)
    kept = list(red.kept)
    np.testing.assert_allclose(red.instance.A @ w - red.instance.b, inst.A[kept] @ x - inst.b[kept],
                               atol=1e-10)


# -- driver -----------------------------------------------------------------

def test_tight_cut():
    rep = solve_extended(tight_cut())
    assert rep.optimal and rep.value == pytest.approx(-1.0, abs=1e-8)
    np.testing.assert_allclose(np.abs(rep.x), [1.0, 0.0], atol=1e-8)
    assert rep.case == "global" and rep.trs0_solves == 1


def test_gap_cut():
    rep = solve_extended(gap_cut())
    assert rep.value == pytest.approx(0.0, abs=1e-8)
    np.testing.assert_allclose(rep.x, [0.0, 0.0], atol=1e-8)
    assert rep.case == "facet"


def test_infeasible_report_and_raise():
    inst = ProblemInstance(np.eye(2), np.zeros(2), [[1.0, 0.0]], [-2.0])
    assert solve_extended(inst).status == "infeasible"
    with pytest.raises(InfeasibleProblem):
        solve_extended(inst, raise_on_infeasible=True)


def test_implicit_equality_single_point():
    # x1 <= 0.5 and -x1 <= -0.5 pin x1; the ball leaves x2 in an interval
    inst = ProblemInstance(np.diag([1.0, -1.0]), np.zeros(2), [[1.0, 0.0], [-1.0, 0.0]], [0.5, -0.5])
    rep = solve_extended(inst)
    assert rep.value == pytest.approx(0.125 - 0.375, abs=1e-10)
    assert rep.x[0] == pytest.approx(0.5)


def test_tangent_feasible_set():
    inst = ProblemInstance(-np.eye(2), np.array([0.0, 1.0]), [[-1.0, 0.0]], [-1.0])
    rep = solve_extended(inst)
    np.testing.assert_allclose(rep.x, [1.0, 0.0], atol=1e-9)
    assert rep.value == pytest.approx(-0.5)


@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_origin_cut_value_is_half_lambda_min(seed, n):
    rng = np.random.default_rng(seed)
    Q = random_symmetric(rng, n)
    lmin = np.linalg.eigvalsh(Q)[0]
    if lmin >= 0:
        Q -= (lmin + 0.1) * np.eye(n)
        lmin = -0.1
    inst = ProblemInstance(Q, np.zeros(n), [rng.standard_normal(n)], [0.0])
    rep = solve_extended(inst)
    assert rep.value == pytest.approx(0.5 * lmin, abs=1e-8)


def _oracle_instance(seed):
    rng = np.random.default_rng(seed)
    return random_instance(int(rng.integers(2, 6)), int(rng.integers(0, 4)), seed)


@given(st.integers(0, 2**31 - 1))
def test_matches_oracle(seed):
    inst = _oracle_instance(seed)
    rep = solve_extended(inst)
    ref = kkt_enumerate(inst)
    assert rel_close(rep.value, ref.value)
    assert rep.x @ rep.x <= 1 + 1e-8
    if inst.m:
        assert np.all(inst.A @ rep.x - inst.b <= 1e-8 * (1 + np.linalg.norm(inst.A, axis=1)))
    assert rep.value == pytest.approx(objective_value(inst, rep.x), abs=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_value_bounded_below_by_ball_problem(seed):
    inst = _oracle_instance(seed)
    rep = solve_extended(inst)
    gs = global_solve(spectral_decompose(inst))
    sd = spectral_decompose(inst)
    v0 = objective_value(inst, sd.to_x(gs.representative()))
    assert rep.value >= v0 - 1e-9 * (1 + abs(v0))
    if rep.case == "global":
        assert rep.value == pytest.approx(v0, abs=1e-8 * (1 + abs(v0)))


@given(st.integers(0, 2**31 - 1))
def test_memo_and_parallel_do_not_change_answers(seed):
    inst = _oracle_instance(seed)
    base = solve_extended(inst)
    plain = solve_extended(inst, dataclasses.replace(CFG, memoize=False))
    par = solve_extended(inst, dataclasses.replace(CFG, parallel_facets=True, max_workers=4))
    assert plain.value == base.value and par.value == base.value
    np.testing.assert_array_equal(plain.x, base.x)
    np.testing.assert_array_equal(par.x, base.x)


@given(st.integers(0, 2**31 - 1), st.integers(1, 2))
def test_subproblem_count_bounds(seed, m):
    rng = np.random.default_rng(seed)
    inst = random_instance(int(rng.integers(1, 7)), m, seed)
    assert solve_extended(inst).trs0_solves <= {1: 2, 2: 5}[m]


@given(st.integers(0, 2**31 - 1))
def test_facet_value_matches_oracle_on_flat(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 5)), int(rng.integers(1, 4))
    inst = random_instance(n, m, seed)
    j = int(rng.integers(m))
    red = restrict_to_facet(inst, j)
    eq = inst.replace(A=np.vstack([inst.A, -inst.A[j]]), b=np.concatenate([inst.b, [-inst.b[j]]]))
    if red is INFEASIBLE:
        return
    if isinstance(red, PointOnly):
        return
    red = prune_redundant(red)
    if red is INFEASIBLE:
        return
    rep = solve_extended(red.instance)
    if not rep.optimal:
        return
    ref = kkt_enumerate(eq)
    assert rel_close(rep.value, ref.value)


def test_singleton_interior_hit_counts_one_solve():
    inst = ProblemInstance(np.diag([-1.0, 1.0]), np.array([1.0, 0.0]), [[1.0, 0.0]], [0.0])
    assert isinstance(global_solve(spectral_decompose(inst)), Singleton)
    rep = solve_extended(inst)
    assert rep.trs0_solves == 1 and rep.value == pytest.approx(-1.5)
