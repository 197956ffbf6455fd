from fractions import Fraction

import numpy as np
import pytest

from robustqi.constructions import (BMxVDescriptor, PROFILES, Thm1Data, Thm2Data, Thm3Data,
                                    DefectiveMatrixError, build_cor54, build_example61,
                                    build_thm1, build_thm2, build_thm3, bmxv_gates,
                                    canonical_eigenframe, commutant_dimension,
                                    cor54_slope_floor, cor54_transversality_exact, dihedral_rep,
                                    example61_form, in_BMxV, svg_inequality_scan, thm1_block,
                                    verify_claim1, verify_thm3_inclusions)
from robustqi.dynamics import proximality_profile
from robustqi.localfield import complex_field, padic_field, real_field
from robustqi.matlin import Matrix, cond_C, eigen_moduli, sv_gap
from robustqi.pingpong import REFUTED, SUPPORTED, anosov_verdict, certify_pingpong
from robustqi.projgeom import Flag, Hyperplane, ProjPoint
from robustqi.spectral import PreconditionError

NU = Fraction(1, 2 ** 7)


@pytest.fixture(scope="module")
def ex61():
    return build_example61()


def test_ex61_checks(ex61):
    assert all(v["ok"] for v in ex61.checks.values()), ex61.checks
    assert cond_C(ex61.b) <= 2 * 128 ** 2
    assert ex61.radius_a1 == Fraction(1, 128 ** 31)
    assert ex61.radius_a2 == Fraction(1, 128 ** 190)
    assert eigen_moduli(ex61.a1).valuations == (-7, -7, 14)


def test_ex61_equal_singular_values(ex61):
    for p in range(1, 9):
        assert sv_gap(ex61.a1 ** p, 1) == 1
        assert sv_gap(ex61.a1 ** -p, 2) == 1


def test_ex61_form_and_pingpong(ex61):
    form = example61_form(ex61)
    assert 1 in proximality_profile(form.matrix()).biproximal
    cert = certify_pingpong(ex61.pingpong_instance(), 10, syllable_cap=3, seed=2)
    assert cert.passed and cert.checks == 10 * 2 * 6


def test_ex61_rejects_small_nu():
    with pytest.raises(PreconditionError):
        build_example61(nu=Fraction(1, 64))


def test_thm1_block_shapes():
    f = padic_field(2)
    assert thm1_block(f, 3, ()).n == 0
    assert thm1_block(f, 5, ()) == Matrix.identity(f, 2)
    B = thm1_block(f, 7, (Fraction(1, 2 ** 4),))
    assert B.n == 4 and f.abs(B.det()) == 1
    with pytest.raises(PreconditionError):
        thm1_block(f, 6, ())


@pytest.mark.parametrize("n", [3, 4])
def test_thm1_claim1_and_verdict(n):
    b = build_thm1(Thm1Data(p=2, nu=NU, n=n))
    assert b.theta is not None
    cert = verify_claim1(b, samples=6, seed=1)
    assert cert.passed, cert.witness
    v = anosov_verdict(b.rep, 2, js=(1, 2), cap=2)
    assert v[1].status == REFUTED and v[2].status == REFUTED


def test_thm1_repeated_entries_have_no_additive_radius():
    b = build_thm1(Thm1Data(p=2, nu=NU, n=5))
    assert b.theta is None
    with pytest.raises(PreconditionError):
        b.additive_sample(np.random.default_rng(0))
    assert verify_claim1(b, samples=2, powers=(-1, 1, 2), seed=0).passed


def test_thm1_preconditions():
    with pytest.raises(PreconditionError):
        build_thm1(Thm1Data(p=2, nu=Fraction(1, 4)))
    with pytest.raises(PreconditionError):
        build_thm1(Thm1Data(p=2, nu=NU, m=1))


def test_commutant_of_dihedral_rep():
    f = complex_field(128)
    G, mats = dihedral_rep(f, 4)
    assert G.order == 8
    assert commutant_dimension(mats) == 1
    trivial = [Matrix.identity(f, 2)] * 8
    assert commutant_dimension(trivial) == 4


def test_thm2_rejects_reducible_rep():
    G, _ = dihedral_rep(complex_field(256), 4)
    trivial = [[[1, 0], [0, 1]]] * 8
    with pytest.raises(PreconditionError):
        build_thm2(Thm2Data(group=G, psi0=trivial, m=0, precision=256))


def test_thm2_small_lambda_rejected():
    with pytest.raises(PreconditionError):
        build_thm2(Thm2Data(lam=100, m=0, precision=256))


def test_bmxv_membership():
    f = real_field(512)
    ctx = f.ctx
    # attracting point e1 and repelling hyperplane e1^perp
    flag = Flag(ProjPoint.of(f, [1, 0, 0]), Hyperplane.of(f, [1, 0, 0]))
    desc = BMxVDescriptor(2, ctx.mpf("0.1"), flag)
    big = ctx.mpf(10) ** 40
    assert in_BMxV(Matrix.diag(f, [big, 1, 1 / big]), desc)
    small = Matrix.diag(f, [ctx.mpf(10) ** 20, 1, ctx.mpf(10) ** -20])
    gates = bmxv_gates(small, desc)
    assert not gates["|k1| >= (10M/eps)^12 |ki|"]["ok"]
    assert gates["[h e1] in B_{eps/10}(x)"]["ok"]
    assert not in_BMxV(small, desc)
    with pytest.raises(ValueError):
        BMxVDescriptor(1, ctx.mpf("0.1"), flag)


def test_eigenframe_rejects_jordan_block():
    f = real_field(256)
    with pytest.raises(DefectiveMatrixError):
        canonical_eigenframe(Matrix.from_values(f, [[2, 1], [0, 2]]))


@pytest.fixture(scope="module")
def thm3_desk():
    return build_thm3(Thm3Data.from_profile("desk"))


def test_thm3_profiles(thm3_desk):
    assert set(PROFILES) == {"desk", "svg", "paper"}
    assert not thm3_desk.admissible
    assert not thm3_desk.gates["0 < eps <= 10^-6"]["ok"]
    assert thm3_desk.gates["lambda >= 10^2"]["ok"]
    with pytest.raises(ValueError):
        Thm3Data.from_profile("laptop")


def test_thm3_inclusions_small(thm3_desk):
    cert = verify_thm3_inclusions(thm3_desk, samples=5, seed=3)
    assert cert.passed and cert.anchor == "thm3:inclusions"


def test_thm3_svg_scan_short(thm3_desk):
    scan = svg_inequality_scan(thm3_desk, L=3, cap=2)
    assert scan.violations == 0 and scan.words > 0


def test_thm3_verdict_flip():
    tie = build_thm3(Thm3Data.from_profile("desk"))
    v = anosov_verdict(tie.rep, 3, js=(1,), cap=2)
    assert v[1].status == REFUTED
    split = build_thm3(Thm3Data.from_profile("desk", lam1="100.5"))
    v2 = anosov_verdict(split.rep, 4, js=(1,), cap=2)
    assert v2[1].status == SUPPORTED


@pytest.fixture(scope="module")
def cor54():
    return build_cor54()


def test_cor54_gates(cor54):
    assert cor54.r == 233
    assert all(v["ok"] for v in cor54.checks.values()), cor54.checks


def test_cor54_exact_transversality():
    rng = np.random.default_rng(0)
    for _ in range(20):
        l2 = Fraction(int(rng.integers(2, 9)))
        l1 = l2 * Fraction(int(rng.integers(10, 40)), 10)
        assert all(cor54_transversality_exact(l1, l2, (-3, -2, -1, 1, 2, 3)))
    with pytest.raises(ValueError):
        cor54_transversality_exact(Fraction(4), Fraction(2), (0,))


def test_cor54_slope_floor(cor54):
    f0 = cor54_slope_floor(cor54, 0)
    # l1/l3 = 4 * 2 * (4 * 2 * 2) for the ratio-4 member
    assert f0 == pytest.approx(0.5 * np.log(128))


@pytest.fixture(scope="module")
def ex62():
    from robustqi.constructions import build_example62
    return build_example62()


def test_ex62_checks(ex62):
    failing = {k for k, v in ex62.checks.items() if not v["ok"]}
    # the two norm bounds on h do not hold in the operator norm
    assert failing == {"||h^{+-1}|| <= 4", "C(h) <= 2^5"}
    assert cond_C(ex62.h) <= 2 ** 6


def test_ex62_psi_t_not_proximal(ex62):
    mods = eigen_moduli(ex62.build.psi_t)
    assert mods.equal(1)
    ctx = ex62.field.ctx
    assert abs(mods.logs[0] - ctx.log(10 ** 5)) < ex62.field.tolerance(2)


def test_ex62_claim4_small(ex62):
    from robustqi.constructions import verify_claim4
    cert = verify_claim4(ex62.build, samples=2, seed=1)
    assert cert.passed and cert.checks == 2 * (8 * 7 - 1)


def test_ex62_z_in_bmxv(ex62):
    ctx = ex62.field.ctx
    desc = BMxVDescriptor(2 * 10 ** 8, ctx.mpf("0.1"), ex62.example_flag)
    assert in_BMxV(ex62.z_matrix(), desc)
