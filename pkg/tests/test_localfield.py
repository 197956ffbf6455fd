from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustqi.localfield import (ElementError, FieldSpec, FieldSpecError, PadicDigits,
                                 UnsupportedFieldError, is_prime, make_field, padic_field,
                                 vp_int)

rationals = st.fractions(max_denominator=10 ** 6).filter(lambda q: abs(q.numerator) < 10 ** 9)


def test_padic_abs_examples(Q2):
    assert Q2.abs(12) == Fraction(1, 4)
    assert Q2.abs(Fraction(1, 2 ** 7) + Fraction(1, 2 ** 14)) == 2 ** 14
    assert Q2.abs(0) == 0
    assert Q2.val(Fraction(3, 8)) == -3


def test_vec_norms(R, Q2):
    nu = Fraction(1, 2 ** 7)
    assert Q2.vec_norm([1, nu, -(1 + nu)]) == 2 ** 7
    assert abs(R.vec_norm(R.vector([1, 1, 1])) - R.ctx.sqrt(3)) < R.ctx.mpf(10) ** -70


def test_dot_examples(C, Q2):
    v = C.vector([1, [0, 1]])
    assert C.dot(v, v) == 2
    assert Q2.dot([1, 2, 0], [3, 1, 0]) == 5
    with pytest.raises(ValueError):
        Q2.dot([1], [1, 2])


def test_log_norm_is_log_of_real_norm(Q3, R):
    v = [Fraction(1, 9), 3, 1]
    assert Q3.vec_norm(v) == 9
    assert abs(Q3.log_norm(v) - Q3.ctx.log(9)) < Q3.ctx.mpf(10) ** -70
    assert abs(R.log_norm(R.vector([3, 4])) - R.ctx.log(5)) < R.ctx.mpf(10) ** -70


def test_spec_validation():
    with pytest.raises(UnsupportedFieldError):
        FieldSpec("fqt")
    with pytest.raises(FieldSpecError):
        FieldSpec("padic", prime=4)
    with pytest.raises(FieldSpecError):
        FieldSpec("real", precision=32)
    spec = FieldSpec.from_dict({"kind": "padic", "prime": 5, "precision": 80})
    assert FieldSpec.from_dict(spec.to_dict()) == spec
    assert make_field(spec) is make_field(FieldSpec("padic", prime=5, precision=80))


def test_padic_rejects_floats(Q2, R):
    with pytest.raises(ElementError):
        Q2.convert(0.5)
    assert Q2.convert("3/4") == Fraction(3, 4)
    with pytest.raises(ElementError):
        R.convert([1, 2])


def test_small_primes():
    assert [n for n in range(30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert vp_int(48, 2) == 4


@settings(max_examples=200, deadline=None)
@given(rationals, rationals, st.sampled_from([2, 3, 5, 7]))
def test_ultrametric(x, y, p):
    f = padic_field(p)
    assert f.abs(x + y) <= max(f.abs(x), f.abs(y))
    assert f.abs(x * y) == f.abs(x) * f.abs(y)


@settings(max_examples=100, deadline=None)
@given(st.lists(rationals, min_size=3, max_size=3), st.lists(rationals, min_size=3, max_size=3),
       st.sampled_from([2, 3]))
def test_padic_cauchy_schwarz(u, v, p):
    f = padic_field(p)
    assert f.abs(f.dot(u, v)) <= f.vec_norm(u) * f.vec_norm(v)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3),
       st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3))
def test_real_cauchy_schwarz(u, v):
    f = make_field(FieldSpec("real", precision=128))
    u, v = f.vector(u), f.vector(v)
    assert f.abs(f.dot(u, v)) <= f.vec_norm(u) * f.vec_norm(v) * (1 + f.tolerance())


@settings(max_examples=100, deadline=None)
@given(rationals, st.sampled_from([2, 3, 5]))
def test_digits_roundtrip_within_depth(x, p):
    f = padic_field(p, 64)
    d = PadicDigits.from_rational(x, p, 64)
    back = d.to_rational()
    # digits are relative to the valuation
    assert x == back or f.abs(x - back) <= f.abs(x) / p ** 64
    t = f.truncate(x, 64)
    assert x == t or f.abs(x - t) <= Fraction(1, p ** 64)
