from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustqi.localfield import padic_field
from robustqi.matlin import Matrix, eigen_moduli, mat_norm
from robustqi.spectral import (Poly, PreconditionError, charpoly, charpoly_dist,
                               diagonalize_perturbed, hensel_refine, newton_polygon, root_moduli,
                               theta_bound)

NU = Fraction(1, 2 ** 7)


def nu_diag(f):
    return Matrix.diag(f, [NU, 1 + NU, 1 / (NU + NU * NU)])


def test_theta_examples(Q2):
    assert theta_bound(nu_diag(Q2), Fraction(1, 8)) == Fraction(1, 2 ** 149)
    C = Matrix.diag(Q2, [1, 1 + 2 ** 10])
    # eps = 1/2 is not below half the gap here, so only the closed form is evaluated
    assert theta_bound(C, Fraction(1, 2), strict=False) == Fraction(1, 2 ** 10 * 100)
    with pytest.raises(PreconditionError):
        theta_bound(C, Fraction(1, 2))


def test_theta_preconditions(Q2):
    C = Matrix.diag(Q2, [1, 1 + 2 ** 10])
    with pytest.raises(PreconditionError):
        theta_bound(C, Fraction(1, 2 ** 11))
    with pytest.raises(PreconditionError):
        theta_bound(Matrix.diag(Q2, [1, 1]), Fraction(1, 4))
    with pytest.raises(PreconditionError):
        theta_bound(Matrix.from_values(Q2, [[1, 1], [0, 2]]), Fraction(1, 4))


def test_newton_polygon_examples(Q2, Q3):
    for f in (Q2, Q3):
        p = f.prime
        assert newton_polygon(Poly(f, (Fraction(-p), Fraction(0), Fraction(1)))) == (Fraction(1, 2),) * 2
        split = Poly(f, (Fraction(p), Fraction(-(1 + p)), Fraction(1)))
        assert root_moduli(split) == (1, Fraction(1, p))
    assert newton_polygon(charpoly(nu_diag(Q2))) == (-7, -7, 14)


def test_half_integral_moduli(Q3):
    (m1, m2) = root_moduli(Poly(Q3, (Fraction(-3), Fraction(0), Fraction(1))))
    assert abs(m1 - Q3.ctx.power(3, -0.5)) < Q3.ctx.mpf(10) ** -60
    assert m1 == m2


def test_charpoly_matches_det(Q3):
    A = Matrix.from_values(Q3, [[1, 2, 0], [Fraction(1, 3), 4, 1], [5, 0, 9]])
    chi = charpoly(A)
    for t in (Fraction(0), Fraction(2), Fraction(-7, 3)):
        assert chi(t) == (A - Matrix.identity(Q3, 3).scale(t)).det()


def test_charpoly_dist_examples(Q2):
    C = nu_diag(Q2)
    assert charpoly_dist(C, C)[0] == 0
    ident = Matrix.identity(Q2, 3)
    E = Matrix.from_values(Q2, [[0, 2 ** 5, 0], [0, 0, 0], [0, 0, 0]])
    lhs, rhs = charpoly_dist(ident, ident + E)
    assert lhs <= rhs == Fraction(1, 2 ** 5)
    with pytest.raises(PreconditionError):
        charpoly_dist(ident.scale(Fraction(2)), ident)


def test_hensel_simple_root(Q3):
    f = Poly(Q3, (Fraction(-7), Fraction(0), Fraction(1)))
    r = hensel_refine(f, Fraction(1), 40)
    assert Q3.val(f(r)) >= 40


def test_diagonalize_identity_perturbation(Q2):
    C = nu_diag(Q2)
    res = diagonalize_perturbed(C, C, Fraction(1, 8))
    assert res.conjugator == Matrix.identity(Q2, 3)
    for a, b in zip(res.eigenvalues, C.diagonal()):
        assert a == b or Q2.abs(a - b) <= Fraction(1, 2 ** 64)
    assert res.residual <= Fraction(1, 2 ** 64)


def test_diagonalize_rejects_large_perturbation(Q2):
    C = Matrix.diag(Q2, [1, 3, 5])
    with pytest.raises(PreconditionError):
        diagonalize_perturbed(C, C + Matrix.identity(Q2, 3).scale(Fraction(1, 2)), Fraction(1, 8))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 3]))
def test_diagonalize_random(seed, p):
    from oracles import random_admissible_pair
    f = padic_field(p, 64)
    C, C2, eps = random_admissible_pair(f, np.random.default_rng(seed))
    res = diagonalize_perturbed(C, C2, eps, depth=64)
    assert res.conjugator_defect < eps and res.eigen_defect < eps
    assert res.residual <= Fraction(1, p ** 64)
    assert sorted(f.val(a) for a in res.eigenvalues) == list(newton_polygon(charpoly(C2)))
    assert mat_norm(C2 - C) < theta_bound(C, eps)
    assert eigen_moduli(C2).valuations == tuple(sorted(f.val(a) for a in res.eigenvalues))
