from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustqi.localfield import padic_field
from robustqi.matlin import (Matrix, SingularMatrixError, cond_C, eigen_moduli, exterior_power,
                             mat_norm, singular_values, smith_valuations, sv_gap)

NU = Fraction(1, 2 ** 7)


def nu_diag(f):
    return Matrix.diag(f, [NU, 1 + NU, 1 / (NU + NU * NU)])


def test_norms(R, Q2):
    assert mat_norm(Matrix.identity(Q2, 3)) == 1
    assert abs(mat_norm(Matrix.identity(R, 3)) - 1) < R.tolerance()
    assert mat_norm(nu_diag(Q2)) == 2 ** 7
    phi = (1 + R.ctx.sqrt(5)) / 2
    assert abs(mat_norm(Matrix.from_values(R, [[1, 1], [0, 1]])) - phi) < R.tolerance()


def test_cond_C(R, Q2):
    assert cond_C(Matrix.identity(Q2, 4)) == 2
    assert abs(cond_C(Matrix.diag(R, [4, "1/4"])) - 32) < R.tolerance()


def test_padic_singular_values(Q2, Q3):
    prof = singular_values(Matrix.diag(Q2, [Fraction(1, 8), 1, 8]))
    assert prof.values() == (8, 1, Fraction(1, 8))
    for f in (Q2, Q3):
        p = f.prime
        vals = singular_values(Matrix.from_values(f, [[1, Fraction(1, p)], [0, 1]])).values()
        assert vals == (p, Fraction(1, p))


def test_singular_matrix_raises(Q2):
    with pytest.raises(SingularMatrixError):
        smith_valuations(Matrix.from_values(Q2, [[1, 2], [2, 4]]))


def test_eigen_moduli_examples(R, Q2):
    assert eigen_moduli(nu_diag(Q2)).values() == (2 ** 7, 2 ** 7, Fraction(1, 2 ** 14))
    ctx = R.ctx
    xi = ctx.mpf("0.3")
    rot = Matrix.from_values(R, [[ctx.cos(xi), -ctx.sin(xi)], [ctx.sin(xi), ctx.cos(xi)]])
    mods = eigen_moduli(rot)
    assert all(abs(x) < R.tolerance(4) for x in mods.logs)
    assert mods.equal(1)


def test_exterior_power_diag(Q3):
    a, b, c = Fraction(2), Fraction(3), Fraction(5)
    D = Matrix.diag(Q3, [a, b, c])
    assert exterior_power(D, 1) == D
    assert exterior_power(D, 2) == Matrix.diag(Q3, [a * b, a * c, b * c])
    assert exterior_power(D, 3) == Matrix.diag(Q3, [a * b * c])
    with pytest.raises(ValueError):
        exterior_power(D, 4)


def test_sv_gaps(R, Q2):
    assert sv_gap(Matrix.identity(Q2, 3), 1) == 1
    assert sv_gap(Matrix.identity(Q2, 3), 2) == 1
    D = nu_diag(Q2)
    for p in (1, 2, 7):
        assert sv_gap(D ** p, 1) == 1
    # for negative powers the equal pair moves to the bottom of the spectrum
    for p in (-5, -1):
        assert sv_gap(D ** p, 1) == 2 ** (21 * -p)
        assert sv_gap(D ** p, 2) == 1
    assert abs(sv_gap(Matrix.diag(R, [8, 1, "1/8"]), 1) - 8) < R.tolerance()
    with pytest.raises(IndexError):
        sv_gap(D, 3)


def _rand_int_matrix(rng, n):
    while True:
        M = rng.integers(-9, 10, size=(n, n))
        if round(np.linalg.det(M)) != 0:
            return M.tolist()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 3, 5]), st.integers(2, 4))
def test_padic_product_equals_det(seed, p, n):
    f = padic_field(p)
    rng = np.random.default_rng(seed)
    A = Matrix.from_values(f, _rand_int_matrix(rng, n))
    A = A.scale(Fraction(1, p ** int(rng.integers(0, 3))))
    prod = Fraction(1)
    for s in singular_values(A).values():
        prod *= s
    assert prod == f.abs(A.det())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 4))
def test_real_product_equals_det(seed, n):
    from robustqi.localfield import real_field
    f = real_field(256)
    rng = np.random.default_rng(seed)
    A = Matrix.from_values(f, _rand_int_matrix(rng, n))
    prof = singular_values(A)
    det = f.abs(A.det())
    assert abs(f.ctx.fsum(prof.logs) - f.ctx.log(det)) <= f.tolerance(2) * 10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 3]))
def test_padic_norm_submultiplicative(seed, p):
    f = padic_field(p)
    rng = np.random.default_rng(seed)
    A = Matrix.from_values(f, _rand_int_matrix(rng, 3)).scale(Fraction(1, p))
    B = Matrix.from_values(f, _rand_int_matrix(rng, 3))
    assert mat_norm(A @ B) <= mat_norm(A) * mat_norm(B)
    assert mat_norm(Matrix.identity(f, 3)) == 1
