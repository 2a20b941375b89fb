import numpy as np
import pytest
from hypothesis import given, strategies as st

from etrs.errors import CombinatorialBudgetExceeded, ZeroDirection
from etrs.geometry import (
    BallSpec, Bounded, Empty, Point, Polytope, UnboundedAlong, boundedness_probe,
    column_dependence_check, enumerate_vertices, ray_to_sphere, segment_sphere_crossing,
    sphere_polytope_intersect,
)
from etrs.model import SolverConfig

CFG = SolverConfig()
TRI_H = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])


def as_set(vertices):
    return sorted(tuple(np.round(v, 9)) for v in vertices)


@pytest.mark.parametrize("H, want", [
    (TRI_H, False),
    (np.array([[1.0, 1.0], [2.0, 2.0]]), True),
    (np.array([[1.0, 0.0, 0.0]]), True),
])
def test_column_dependence(H, want):
    assert column_dependence_check(H) is want


def test_probe_bounded_triangle():
    res = boundedness_probe(TRI_H, np.array([1.0, 1.0, 0.0]), np.zeros(2))
    assert isinstance(res, Bounded) and res.value == pytest.approx(0.0)


def test_probe_negative_orthant():
    res = boundedness_probe(np.eye(2), np.ones(2), np.zeros(2))
    assert isinstance(res, UnboundedAlong)
    assert np.all(res.direction <= 1e-12) and np.linalg.norm(res.direction) > 0


def test_probe_interval():
    assert isinstance(boundedness_probe(np.array([[1.0], [-1.0]]), np.ones(2)), Bounded)


def test_vertices_triangle():
    got = enumerate_vertices(TRI_H, np.array([1.0, 1.0, 0.0]))
    assert as_set(got) == as_set([(1, 1), (1, -1), (-1, 1)])


def test_vertices_interval():
    got = enumerate_vertices(np.array([[1.0], [-1.0]]), np.array([1.0, 0.0]))
    assert as_set(got) == as_set([(1.0,), (0.0,)])


def test_vertices_square():
    H = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    got = enumerate_vertices(H, np.array([1.0, 1.0, 0.0, 0.0]))
    assert as_set(got) == as_set([(0, 0), (1, 0), (0, 1), (1, 1)])


def test_vertex_budget():
    H = np.vstack([np.eye(3), -np.eye(3)])
    with pytest.raises(CombinatorialBudgetExceeded):
        enumerate_vertices(H, np.ones(6), SolverConfig(max_vertex_enum=10))


@pytest.mark.parametrize("inside, outside, want", [
    ((0.0, 0.0), (2.0, 0.0), (1.0, 0.0)),
    ((0.5, 0.0), (0.5, 2.0), (0.5, np.sqrt(0.75))),
    ((0.0, 0.0), (1.0, 0.0), (1.0, 0.0)),
])
def test_segment_crossing(inside, outside, want):
    np.testing.assert_allclose(segment_sphere_crossing(np.array(inside), np.array(outside), 1.0),
                               want, atol=1e-15)


@pytest.mark.parametrize("x, z, want", [
    ((0.0, 0.0), (1.0, 0.0), (1.0, 0.0)),
    ((0.0, 0.5), (0.0, 1.0), (0.0, 1.0)),
    ((0.6, 0.8), (1.0, 1.0), (0.6, 0.8)),
])
def test_ray_to_sphere(x, z, want):
    np.testing.assert_allclose(ray_to_sphere(x, z), want, atol=1e-15)


def test_ray_zero_direction():
    with pytest.raises(ZeroDirection):
        ray_to_sphere([0.0, 0.0], [0.0, 0.0])


def test_intersect_separated():
    assert isinstance(sphere_polytope_intersect(np.array([[1.0, 0.0]]), np.array([-2.0]), BallSpec(1.0)),
                      Empty)


def test_intersect_halfplane():
    res = sphere_polytope_intersect(np.array([[-1.0, 0.0]]), np.array([0.0]), BallSpec(1.0))
    assert isinstance(res, Point)
    assert res.u @ res.u == pytest.approx(1.0) and res.u[0] >= -1e-12


def test_intersect_small_square_inside():
    H = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    res = sphere_polytope_intersect(H, np.array([0.1, 0.1, 0.0, 0.0]), BallSpec(1.0))
    assert isinstance(res, Empty)


def test_polytope_contains():
    P = Polytope(TRI_H, np.array([1.0, 1.0, 0.0]))
    assert P.contains(np.array([0.5, 0.0]), 1e-9)
    assert not P.contains(np.array([-1.0, -1.0]), 1e-9)


def random_polytope(rng, p):
    """A mix of small interior boxes, far-away sets and sets crossing the sphere."""
    kind = rng.integers(0, 3)
    m = int(rng.integers(1, 7))
    H = rng.standard_normal((m, p))
    if kind == 0:
        centre = rng.standard_normal(p) * 0.2
        half = rng.uniform(0.05, 0.4)
        H = np.vstack([np.eye(p), -np.eye(p), H[: max(0, m - 2 * p)]])
        g = H @ centre + half * np.linalg.norm(H, axis=1)
    elif kind == 1:
        g = H @ (rng.standard_normal(p) * 1.5) + rng.uniform(-0.5, 0.5, H.shape[0])
    else:
        g = rng.standard_normal(m) * 0.7
    return H, g


def check_witness(H, g, r, res):
    if isinstance(res, Point):
        assert abs(res.u @ res.u - r) <= CFG.feas_tol * 10
        assert np.all(H @ res.u - g <= CFG.feas_tol * 10 * (1 + np.linalg.norm(H, axis=1)))
        return True
    assert isinstance(res, Empty)
    return False


def rejection_all_violate(rng, H, g, r, samples):
    u = rng.standard_normal((samples, H.shape[1]))
    u *= np.sqrt(r) / np.linalg.norm(u, axis=1, keepdims=True)
    return not np.any(np.all(u @ H.T <= g, axis=1))


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_intersection_witness_invariants(seed, p):
    rng = np.random.default_rng(seed)
    H, g = random_polytope(rng, p)
    r = float(rng.uniform(0.3, 2.0))
    res = sphere_polytope_intersect(H, g, BallSpec(r))
    if not check_witness(H, g, r, res):
        assert rejection_all_violate(rng, H, g, r, 20_000)
