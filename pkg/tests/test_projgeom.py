from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustqi.localfield import padic_field, real_field
from robustqi.matlin import Matrix
from robustqi.projgeom import (Ball, Flag, HyperComplement, Hyperplane, Intersection, ProjPoint,
                               SamplingBudgetError, contains, dist_to_hyperplane, hyperplane_bound,
                               hyperplane_excess, padic_hyperplane_witness, proj_dist,
                               random_vector, sample, set_margin)

from oracles import padic_brute_dist


def test_proj_dist_examples(R, Q2):
    e1, e2 = ProjPoint.of(R, [1, 0, 0]), ProjPoint.of(R, [0, 1, 0])
    assert abs(proj_dist(e1, e2) - R.ctx.sqrt(2)) < R.tolerance()
    assert proj_dist(e1, e1) < R.tolerance()
    x, y = ProjPoint.of(Q2, [1, 0, 0]), ProjPoint.of(Q2, [1, 2, 0])
    assert proj_dist(x, y) == Fraction(1, 2)
    assert proj_dist(x, y) == padic_brute_dist(Q2, x.vec, y.vec)
    assert proj_dist(x, x) == 0


def test_proj_dist_dimension_check(Q2):
    with pytest.raises(ValueError):
        proj_dist(ProjPoint.of(Q2, [1, 0]), ProjPoint.of(Q2, [1, 0, 0]))


def test_hyperplane_examples(R, Q2, Q3):
    x = ProjPoint.of(Q2, [1, 0, 0])
    V = Hyperplane.of(Q2, [1, 0, 0])
    d = dist_to_hyperplane(x, V)
    assert d.lower_bound == 1 and d.distance == 1
    xr = ProjPoint.of(R, [1, 0, 0])
    dr = dist_to_hyperplane(xr, Hyperplane.of(R, [1, 0, 0]))
    assert abs(dr.lower_bound - 1) < R.tolerance()
    assert dr.lower_bound <= dr.distance * (1 + R.tolerance())
    W = Hyperplane.of(Q3, [1, 3, 0])
    assert hyperplane_bound(ProjPoint.of(Q3, [1, 0, 0]), W) == 1
    inside = ProjPoint.of(Q2, [0, 1, 0])
    assert dist_to_hyperplane(inside, V).distance == 0


def test_padic_witness_attains_bound(Q3):
    rng = np.random.default_rng(3)
    for _ in range(30):
        x = ProjPoint.of(Q3, random_vector(Q3, 3, rng))
        V = Hyperplane.of(Q3, random_vector(Q3, 3, rng))
        w = padic_hyperplane_witness(x, V)
        assert V.contains_vector(w.vec)
        assert proj_dist(x, w) == hyperplane_bound(x, V)


def test_hyperplane_spanned_by(Q2):
    V = Hyperplane.spanned_by(Q2, [[0, 1, 0], [0, 0, 1]])
    assert V.contains_vector([0, 5, 7])
    assert not V.contains_vector([1, 0, 0])
    assert hyperplane_excess(V, V) == 0


def test_contains_examples(R, Q2):
    for f in (R, Q2):
        e1, e2 = ProjPoint.of(f, [1, 0, 0]), ProjPoint.of(f, [0, 1, 0])
        assert contains(Ball(e1, Fraction(1, 10)), e1)
        assert not contains(Ball(e1, Fraction(1, 10)), e2)
        assert contains(HyperComplement(Hyperplane.of(f, [1, 0, 0]), Fraction(1, 2)), e1)
        S = Intersection((Ball(e1, Fraction(1, 10)), HyperComplement(Hyperplane.of(f, [1, 0, 0]), Fraction(1, 2))))
        assert set_margin(S, e1) >= 0 and set_margin(S, e2) < 0


def test_sampling_examples(R, Q2):
    for f in (R, Q2):
        x = ProjPoint.of(f, [1, 1, 0])
        eps = Fraction(1, 16)
        B = Ball(x, eps)
        (y,) = sample(B, 1, 5)
        assert proj_dist(x, y) <= B.radius
        H = HyperComplement(Hyperplane.of(f, [0, 1, 1]), Fraction(1, 4))
        pts = sample(H, 100, 6)
        assert len(pts) == 100 and all(contains(H, p) for p in pts)
        assert sample(H, 20, 11) == sample(H, 20, 11)


def test_sampling_budget_error(Q2):
    H = HyperComplement(Hyperplane.of(Q2, [1, 0, 0]), Fraction(2))
    with pytest.raises(SamplingBudgetError):
        sample(H, 1, 0, budget=200)


def test_flag_transversality(Q2):
    a = Flag(ProjPoint.of(Q2, [1, 0, 0]), Hyperplane.of(Q2, [0, 0, 1]))
    b = Flag(ProjPoint.of(Q2, [0, 0, 1]), Hyperplane.of(Q2, [1, 0, 0]))
    assert a.incident and b.incident
    assert a.transverse_to(b) and a.margin_to(b) == 1
    assert not a.transverse_to(a)


points = st.lists(st.integers(-50, 50), min_size=3, max_size=3).filter(any)


@settings(max_examples=150, deadline=None)
@given(points, points, points, st.sampled_from([2, 3, 5]))
def test_padic_triangle_and_symmetry(u, v, w, p):
    f = padic_field(p)
    x, y, z = (ProjPoint.of(f, a) for a in (u, v, w))
    assert proj_dist(x, y) == proj_dist(y, x)
    assert proj_dist(x, z) <= max(proj_dist(x, y), proj_dist(y, z))
    assert proj_dist(x, y) <= 1


@settings(max_examples=100, deadline=None)
@given(points, points, points)
def test_real_triangle(u, v, w):
    f = real_field(128)
    x, y, z = (ProjPoint.of(f, a) for a in (u, v, w))
    assert proj_dist(x, z) <= proj_dist(x, y) + proj_dist(y, z) + f.tolerance()


@settings(max_examples=60, deadline=None)
@given(points, points, st.integers(0, 3))
def test_padic_unit_matrices_are_isometries(u, v, k):
    f = padic_field(2)
    # integral with odd determinant, so in GL_3(Z_2)
    g = Matrix.from_values(f, [[1, 2 ** k, 0], [2, 1, 4], [0, 2, 3]])
    assert f.abs(g.det()) == 1
    x, y = ProjPoint.of(f, u), ProjPoint.of(f, v)
    assert proj_dist(x.image(g), y.image(g)) == proj_dist(x, y)


@settings(max_examples=60, deadline=None)
@given(points, points)
def test_hyperplane_bound_below_distance(u, v):
    f = real_field(128)
    x = ProjPoint.of(f, u)
    V = Hyperplane.of(f, v)
    d = dist_to_hyperplane(x, V)
    assert d.lower_bound <= d.distance * (1 + f.tolerance())
