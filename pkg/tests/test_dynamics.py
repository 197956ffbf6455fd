from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustqi.dynamics import (BiproximalForm, GateError, TransversalityError,
                               lipschitz_certificate, lipschitz_trial, make_schottky_family,
                               non2q_middle, perturb1_gate, proximality_profile,
                               verify_contraction)
from robustqi.localfield import padic_field, real_field
from robustqi.matlin import Matrix
from robustqi.projgeom import Flag, Hyperplane, ProjPoint, proj_dist

NU = Fraction(1, 2 ** 7)


def coordinate_flags(f):
    a = Flag(ProjPoint.of(f, [1, 0, 0]), Hyperplane.of(f, [0, 0, 1]))
    b = Flag(ProjPoint.of(f, [0, 0, 1]), Hyperplane.of(f, [1, 0, 0]))
    return a, b


def test_proximality_diagonal(R):
    prof = proximality_profile(Matrix.diag(R, [4, 2, 1]))
    assert prof.proximal == {1, 2}
    assert prof.biproximal == {1, 2}
    att = prof.attracting
    assert proj_dist(att.plus, ProjPoint.of(R, [1, 0, 0])) < R.tolerance()
    assert proj_dist(att.minus, ProjPoint.of(R, [0, 0, 1])) < R.tolerance()


def test_proximality_equal_moduli(Q2):
    f = real_field(512)
    psi_t = Matrix.diag(f, [10 ** 5, 10 ** 5, f.convert("1e-10")])
    prof = proximality_profile(psi_t)
    assert 1 not in prof.proximal and 2 in prof.proximal
    assert prof.attracting is None
    prof2 = proximality_profile(Matrix.diag(Q2, [NU, 1 + NU, 1 / (NU + NU * NU)]))
    assert prof2.proximal == {2}


def test_lipschitz_certificate_example(R, Q2):
    for f in (R, Q2):
        # |1/8|_2 = 8, so the 2-adic analogue uses the reciprocal scalars
        k1, kn = (f.convert(8), f.convert("1/8")) if f.archimedean else (Fraction(1, 8), Fraction(8))
        form = BiproximalForm(Matrix.identity(f, 3), k1, Matrix.identity(f, 1), kn)
        L, floor = lipschitz_certificate(form, Fraction(1, 4), 1)
        assert float(L) == pytest.approx(128, rel=1e-30)
        assert float(floor) == pytest.approx(1, rel=1e-30)
        if not f.archimedean:
            assert (L, floor) == (128, 1)
        L0, floor0 = lipschitz_certificate(form, Fraction(1, 4), 0)
        assert float(L0) == pytest.approx(4 * 2 ** 4 * 16)
        assert float(floor0) == pytest.approx(1 / 8)
    with pytest.raises(GateError):
        lipschitz_certificate(form, 0, 1)


def test_form_validation(Q2):
    with pytest.raises(GateError):
        BiproximalForm(Matrix.identity(Q2, 3), Fraction(1), Matrix.identity(Q2, 1), Fraction(1))
    with pytest.raises(ValueError):
        BiproximalForm(Matrix.identity(Q2, 3), Fraction(1, 8), Matrix.identity(Q2, 2), Fraction(8))


def test_perturb1_gate_cases(R):
    form = BiproximalForm(Matrix.identity(R, 3), R.convert(2), Matrix.identity(R, 1), R.convert("0.5"))
    g = perturb1_gate(form, 1, R.convert("0.1"), R.convert("0.001"))
    assert not g and g.failing == "condition1"
    lhs, rhs = g.details["condition1"]
    assert rhs / lhs > 10 ** 10
    g2 = perturb1_gate(form, 1, R.convert("0.1"), R.convert("0.1"))
    assert g2.failing == "range"


def test_perturb1_gate_example61():
    from robustqi.constructions import build_example61
    ex = build_example61()
    assert ex.checks["contraction gate (alpha=1, eps=|nu|^-19, delta=|nu|^-21)"]


def test_schottky_family_and_contraction(R, Q2):
    for f in (Q2, R):
        alpha = f.ctx.log(2) if f.archimedean else Fraction(7, 10)
        eps = f.convert("1/4")
        gens = make_schottky_family(list(coordinate_flags(f)), alpha, eps)
        g = gens[0]
        assert g.gate
        assert g.radius == g.delta / (40 * max(f.abs(x) for r in g.form.power(-1).rows for x in r)) \
            or f.archimedean
        cert = verify_contraction(g.form, alpha, g.eps, g.delta, samples=15, seed=4)
        assert cert.passed and cert.checks == 15 * 12
        # g' = g exactly (identity perturbation) at p = 1
        cert1 = verify_contraction(g.form, alpha, g.eps, g.delta, powers=(1,), samples=5,
                                   seed=5, additive_radius=None)
        assert cert1.passed
        js = cert.to_json(f)
        assert js["failures"] == 0 and js["verified_samples"] == 15


def test_schottky_needs_transverse_flags(Q2):
    a, _ = coordinate_flags(Q2)
    with pytest.raises(TransversalityError):
        make_schottky_family([a, a], Fraction(1), Fraction(1, 4))
    with pytest.raises(ValueError):
        make_schottky_family([a], Fraction(1), Fraction(1, 4))


def test_non2q_pattern_padic():
    f = padic_field(2)
    kappa = Fraction(1, 2 ** 40)
    first, A, last = non2q_middle(f, 5, kappa)
    D = Matrix.block_diag(f, [Matrix.diag(f, [first]), A, Matrix.diag(f, [last])])
    assert f.abs(D.det()) == 1
    prof = proximality_profile(D)
    vals = prof.moduli.valuations
    assert vals[1] == vals[2] == -40
    assert 2 not in prof.proximal
    assert 1 in prof.biproximal


def test_non2q_pattern_real():
    f = real_field(256)
    first, A, last = non2q_middle(f, 6, f.convert(1000))
    D = Matrix.block_diag(f, [Matrix.diag(f, [first]), A, Matrix.diag(f, [last])])
    prof = proximality_profile(D)
    assert prof.proximal == {1, 5}
    with pytest.raises(ValueError):
        non2q_middle(f, 3, f.convert(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["real", 2, 3]))
def test_lipschitz_trial_random(seed, backend):
    from oracles import random_form
    f = real_field(256) if backend == "real" else padic_field(backend)
    rng = np.random.default_rng(seed)
    form, theta = random_form(f, rng)
    t = lipschitz_trial(form, theta, (-3, -1, 1, 2, 5), 4, rng)
    assert t.violations == 0 and t.floor_violations == 0
    assert t.pairs == 20
