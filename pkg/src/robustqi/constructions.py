"""Builders for the explicit representations and their neighbourhoods, plus
sampled verification of the inclusion/growth statements they rely on.

Every builder is pure given its data (and seed, where flags are randomized).
Verification returns a :class:`SampledCertificate`; nothing here raises on
a failed check, the certificate records the first witness instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .dynamics import (BiproximalForm, TransversalityError, make_schottky_family,
                       perturb1_gate, random_unit_matrix, sample_additive, sample_near_identity,
                       _mp, _strict_scale)
from .localfield import Field, complex_field, padic_field, real_field
from .matlin import Matrix, SingularMatrixError, cond_C, exterior_power, mat_norm
from .pingpong import (Cyclic, FiniteExt, FiniteGroup, FreeRank, Factored, PingPongFamily,
                       PingPongInstance, Representation, SemigroupGen, SyllableAlphabet,
                       dihedral_group, enumerate_words, log_singular_values, run_chunked)
from .projgeom import (Ball, Flag, HyperComplement, Hyperplane, ProjPoint, contains,
                       hyperplane_excess, normalize, proj_dist, sample,
                       random_element, set_margin, _padic_unit_scale)
from .spectral import PreconditionError, newton_polygon, charpoly, theta_bound


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------

@dataclass
class SampledCertificate:
    name: str
    anchor: str
    profile: str = ""
    samples: int = 0
    checks: int = 0
    failures: int = 0
    min_margin: float = math.inf
    min_log_growth_slack: float = math.inf
    witness: dict | None = None
    extra: dict = dc_field(default_factory=dict)
    seed: int | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.checks > 0

    def record(self, ok: bool, margin: Any, slack: Any, witness: Callable[[], dict]) -> None:
        self.checks += 1
        self.min_margin = min(self.min_margin, float(margin))
        self.min_log_growth_slack = min(self.min_log_growth_slack, float(slack))
        if not ok:
            self.failures += 1
            if self.witness is None:
                self.witness = witness()

    def merge(self, other: "SampledCertificate") -> None:
        self.samples += other.samples
        self.checks += other.checks
        self.failures += other.failures
        self.min_margin = min(self.min_margin, other.min_margin)
        self.min_log_growth_slack = min(self.min_log_growth_slack, other.min_log_growth_slack)
        if self.witness is None:
            self.witness = other.witness
        for k, v in other.extra.items():
            if isinstance(v, (int, float)) and k in self.extra:
                self.extra[k] = min(self.extra[k], v) if k.startswith("min") else self.extra[k] + v
            else:
                self.extra.setdefault(k, v)

    def to_json(self) -> dict:
        return {
            "name": self.name, "anchor": self.anchor, "profile": self.profile,
            "kind": "sampled", "samples": self.samples, "checks": self.checks,
            "failures": self.failures, "passed": self.passed,
            "min_margin": repr(self.min_margin),
            "min_log_growth_slack": repr(self.min_log_growth_slack),
            "witness": self.witness, "extra": {k: (repr(v) if isinstance(v, float) else v)
                                               for k, v in self.extra.items()},
            "seed": self.seed,
        }


def _chunked_certificate(name: str, anchor: str, profile: str, samples: int, seed: int,
                         body: Callable[[np.random.Generator, SampledCertificate], None],
                         threads: int = 1) -> SampledCertificate:
    def job(count: int, rng: np.random.Generator) -> SampledCertificate:
        c = SampledCertificate(name, anchor, profile)
        for _ in range(count):
            body(rng, c)
            c.samples += 1
        return c

    cert = SampledCertificate(name, anchor, profile, seed=seed)
    for part in run_chunked(samples, seed, job, threads):
        cert.merge(part)
    return cert


def _pt(field: Field, v: Sequence[Any]) -> ProjPoint:
    return ProjPoint(field, normalize(field, tuple(field(x) for x in v)))


def _hp(field: Field, a: Sequence[Any]) -> Hyperplane:
    return Hyperplane.of(field, tuple(field(x) for x in a))


def _log_norm(field: Field, v: Sequence[Any]) -> Any:
    return field.log_norm(v)


def _check(value: Any, bound: Any, ok: bool) -> dict:
    return {"value": value, "bound": bound, "ok": bool(ok)}


def hyperplane_of_frame(h: Matrix, i: int) -> Hyperplane:
    """h(e_i^perp), whose conormal is the conjugate of row i of h^{-1}."""
    f = h.field
    return Hyperplane.of(f, tuple(f.conj(x) for x in h.inv().rows[i]))


def nearby_flags(flag: Flag, count: int, scale: Any, rng: np.random.Generator) -> list[Flag]:
    """``count`` incident flags within about ``scale`` of an incident ``flag``.

    Points and conormals are moved by ``scale`` times random vectors, then
    each point is pushed back onto its own hyperplane along the coordinate
    where the conormal is largest.
    """
    f = flag.point.field
    x0, c0 = flag.point.vec, flag.hyperplane.conormal
    n = len(x0)
    out = []
    for _ in range(count):
        if f.archimedean:
            u = tuple(f.ctx.mpf(float(t)) for t in rng.standard_normal(n))
            d = tuple(f.ctx.mpf(float(t)) for t in rng.standard_normal(n))
        else:
            u = tuple(Fraction(int(t)) for t in rng.integers(0, f.prime ** 3, n))
            d = tuple(Fraction(int(t)) for t in rng.integers(0, f.prime ** 3, n))
        x = [a + scale * b for a, b in zip(x0, u)]
        c = tuple(a + scale * b for a, b in zip(c0, d))
        k = max(range(n), key=lambda i: f.abs(c[i]))
        corr = f.dot(x, c) / f.conj(c[k])
        x[k] = x[k] - corr
        out.append(Flag(ProjPoint(f, normalize(f, x)), Hyperplane.of(f, c)))
    return out


def _min_pair_margin(flags: Sequence[Flag]) -> Any:
    return min(a.margin_to(b) for i, a in enumerate(flags) for b in flags[i + 1:])


def schottky_near_flag(flag: Flag, count: int, alpha: Any, scale: Any, seed: int,
                       non2q: bool = False) -> list:
    """``count`` Schottky generators whose attracting/repelling flags sit within
    ``scale`` of ``flag``."""
    f = flag.point.field
    rng = np.random.default_rng(seed)
    for _ in range(50):
        flags = nearby_flags(flag, 2 * count, scale, rng)
        margin = _min_pair_margin(flags)
        if margin > 0:
            break
    else:
        raise TransversalityError("could not place transverse flags")
    eps = margin / (f.prime if not f.archimedean else 2)
    return make_schottky_family(flags, alpha, eps, non2q=non2q)


def _perturb_complex(field: Field, n: int, radius: Any, rng: np.random.Generator) -> Matrix:
    """Random matrix E with ||E|| < radius (operator norm)."""
    R = random_unit_matrix(field, n, rng)
    t = field.ctx.mpf(float(rng.uniform(0.05, 0.95))) * radius
    return R.scale(t)


def _near_scalar(field: Field, center: Any, radius: Any, rng: np.random.Generator) -> Any:
    ctx = field.ctx
    r = ctx.mpf(float(rng.uniform(0.0, 0.95))) * radius
    if field.kind == "complex":
        phi = ctx.mpf(float(rng.uniform(0, 2 * math.pi)))
        return center + r * ctx.expjpi(phi / ctx.pi)
    return center + r * (1 if rng.random() < 0.5 else -1)


# ---------------------------------------------------------------------------
# thm1 (p-adic): non-proximal diagonal factor + Schottky family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Thm1Data:
    p: int
    nu: Fraction
    nus: tuple = ()
    n: int = 3
    m: int = 2
    eps: Fraction | None = None
    depth: int = 64
    seed: int = 0


def thm1_block(field: Field, n: int, nus: Sequence[Fraction]) -> Matrix:
    """A_n: empty (n=3), I_{n-3} (n=4,5), or the nu_i pattern (n >= 6)."""
    if n == 3:
        return Matrix(field, [])
    if n in (4, 5):
        return Matrix.identity(field, n - 3)
    s = (n - 4) // 2
    if len(nus) != s:
        raise PreconditionError(f"n = {n} needs {s} parameters nu_i")
    ents: list = []
    prod = Fraction(1)
    for x in nus:
        ents += [x, 1 + x]
        prod *= x + x * x
    ents.append(1 / prod)
    if n % 2:
        ents.append(Fraction(1))
    return Matrix.diag(field, ents)


@dataclass
class Thm1Build:
    data: Thm1Data
    field: Field
    C: Matrix
    A_n: Matrix
    eps: Fraction
    theta: Fraction | None   # additive radius theta(n, eps, C); None with repeated entries
    flag: Flag
    generators: list
    alphabet: SyllableAlphabet
    rep: Representation

    def omega_sample(self, rng: np.random.Generator) -> Matrix:
        """C_eps = h diag(l1, l2, l3, A') h^-1 with ||h^{+-1} - I|| < eps and
        every diagonal entry within eps of C's."""
        f = self.field
        n = self.C.n
        h = sample_near_identity(f, n, self.eps, rng)
        ents = [a + _strict_scale(f, self.eps, rng) * random_element(f, rng)
                for a in self.C.diagonal()]
        return h @ Matrix.diag(f, ents) @ h.inv()

    def additive_sample(self, rng: np.random.Generator) -> Matrix:
        """C' with ||C' - C|| < theta(n, eps, C)."""
        if self.theta is None:
            raise PreconditionError("theta(n, eps, C) needs pairwise distinct diagonal entries")
        return sample_additive(self.C, self.theta, rng)

    def schottky_sample(self, rng: np.random.Generator) -> list[Matrix]:
        return [sample_additive(g.matrix, g.radius, rng) for g in self.generators]

    def sample_rep(self, rng: np.random.Generator) -> Representation:
        return Representation(self.alphabet, [self.omega_sample(rng)] + self.schottky_sample(rng))

    def pingpong_instance(self, theta: Any = math.log(2), c: Any = 0.25) -> PingPongInstance:
        ball = Ball(self.flag.point, self.eps)
        comp = HyperComplement(self.flag.hyperplane, self.eps)
        one = SyllableAlphabet((Cyclic("a1"),))
        rest = SyllableAlphabet((FreeRank(self.data.m - 1, "b"),))
        fam1 = PingPongFamily(one, lambda rng: Representation(one, [self.omega_sample(rng)]),
                              ball, comp, theta, -c, 1, "a1")
        fam2 = PingPongFamily(rest, lambda rng: Representation(rest, self.schottky_sample(rng)),
                              comp, ball, theta, c, 2, "free part")
        return PingPongInstance(fam1, fam2, "thm1:pingpong")


def build_thm1(data: Thm1Data) -> Thm1Build:
    if data.n < 3 or data.m < 2:
        raise PreconditionError("need n >= 3 and m >= 2")
    f = padic_field(data.p, data.depth)
    nu = Fraction(data.nu)
    nus = tuple(Fraction(x) for x in data.nus)
    A_n = thm1_block(f, data.n, nus)
    absn = f.abs(nu)
    if nus:
        mods = [f.abs(x) for x in nus]
        if not all(a > b for a, b in zip(mods, mods[1:])) or not mods[-1] > 2:
            raise PreconditionError("need |nu_1| > ... > |nu_s| > 2")
    a_norm = max(mat_norm(A_n), mat_norm(A_n.inv())) if A_n.n else 0
    if not absn >= 10 * data.n * (1 + a_norm):
        raise PreconditionError("|nu| must be at least 10 n (1 + ||A_n^{+-1}||)")
    C = Matrix.block_diag(f, [Matrix.diag(f, [nu, 1 + nu, 1 / (nu + nu * nu)]), A_n])
    diag = C.diagonal()
    gaps = [f.abs(a - b) for i, a in enumerate(diag) for b in diag[i + 1:] if a != b]
    distinct = len(gaps) == len(diag) * (len(diag) - 1) // 2
    eps_max = min(Fraction(min(gaps)) / 2, absn ** -3)
    eps = eps_max if data.eps is None else Fraction(data.eps)
    if not 0 < eps <= eps_max:
        raise PreconditionError("eps exceeds min{gap/2, |nu|^-3}")
    theta = theta_bound(C, eps, strict=False) if distinct else None
    y = [1, nu, -(1 + nu)] + [0] * (data.n - 3)
    c = [1, 1, 1] + [0] * (data.n - 3)
    flag = Flag(_pt(f, y), _hp(f, c))
    scale = _padic_unit_scale(f, eps / f.prime ** 2)  # p^k, of p-adic size <= eps/p^2
    gens = schottky_near_flag(flag, data.m - 1, math.log(2), scale, data.seed,
                              non2q=data.n >= 4)
    alphabet = SyllableAlphabet((Cyclic("a1"), FreeRank(data.m - 1, "b")))
    rep = Representation(alphabet, [C] + [Factored.from_form(g.form) for g in gens])
    return Thm1Build(data, f, C, A_n, eps, theta, flag, gens, alphabet, rep)


def verify_claim1(build: Thm1Build, samples: int = 100, powers: Sequence[int] = (-4, -3, -2, -1, 1, 2, 3, 4),
                  seed: int = 0, threads: int = 1) -> SampledCertificate:
    """For sampled C' in Omega_eps(C) and u in B_eps(y_n): [C'^p u] avoids the
    1/6-neighbourhood of P(V_n) and ||C'^p u|| >= 2^|p| ||u||; also the two
    leading eigenvalue moduli of C' equal |nu|."""
    if 0 in powers:
        raise ValueError("p = 0 is excluded")
    f = build.field
    comp = HyperComplement(build.flag.hyperplane, Fraction(1, 6))
    ball = Ball(build.flag.point, build.eps)
    target_val = -f.val(build.data.nu)

    def body(rng: np.random.Generator, cert: SampledCertificate) -> None:
        Cp = build.omega_sample(rng) if build.theta is None or cert.samples % 2 else \
            build.additive_sample(rng)
        vals = newton_polygon(charpoly(Cp))
        moduli_ok = vals[0] == vals[1] == -target_val
        cert.record(moduli_ok, 0, 0, lambda: {"reason": "leading eigenvalue moduli", "valuations": [str(v) for v in vals]})
        u = sample(ball, 1, rng)[0].vec
        lu = _log_norm(f, u)
        for p in powers:
            v = (Cp ** p).apply(u)
            y = ProjPoint(f, normalize(f, v))
            margin = set_margin(comp, y)
            slack = _log_norm(f, v) - lu - abs(p) * math.log(2)
            ok = contains(comp, y) and slack >= 0
            cert.record(ok, margin, slack, lambda: {"power": p, "point": [f.to_json(x) for x in u]})

    return _chunked_certificate("claim1", "thm1:claim1", "", samples, seed, body, threads)


# ---------------------------------------------------------------------------
# ex61: the explicit p-adic pair
# ---------------------------------------------------------------------------

@dataclass
class Example61:
    field: Field
    nu: Fraction
    a1: Matrix
    a2: Matrix
    b: Matrix
    gamma: Matrix
    radius_a1: Fraction
    radius_a2: Fraction
    eps: Fraction
    flag: Flag
    checks: dict
    alphabet: SyllableAlphabet
    rep: Representation
    theta: float = math.log(2)
    c: float = 0.25

    def sample_a1(self, rng: np.random.Generator) -> Matrix:
        return sample_additive(self.a1, self.radius_a1, rng)

    def sample_a2(self, rng: np.random.Generator) -> Matrix:
        return sample_additive(self.a2, self.radius_a2, rng)

    def sample_rep(self, rng: np.random.Generator) -> Representation:
        return Representation(self.alphabet, [self.sample_a1(rng), self.sample_a2(rng)])

    def pingpong_instance(self) -> PingPongInstance:
        ball = Ball(self.flag.point, self.eps)
        comp = HyperComplement(self.flag.hyperplane, self.eps)
        one = SyllableAlphabet((Cyclic("a1"),))
        two = SyllableAlphabet((Cyclic("a2"),))
        fam1 = PingPongFamily(one, lambda rng: Representation(one, [self.sample_a1(rng)]),
                              ball, comp, self.theta, -self.c, 1, "a1")
        fam2 = PingPongFamily(two, lambda rng: Representation(two, [self.sample_a2(rng)]),
                              comp, ball, self.theta, self.c, 1, "a2")
        return PingPongInstance(fam1, fam2, "ex61:pingpong")


def build_example61(p: int = 2, nu: Fraction = Fraction(1, 2 ** 7), depth: int = 64) -> Example61:
    f = padic_field(p, depth)
    nu = Fraction(nu)
    N = f.abs(nu)
    if not N > 100:
        raise PreconditionError("need |nu| > 10^2")
    a1 = Matrix.diag(f, [nu, 1 + nu, 1 / (nu + nu * nu)])
    b = Matrix.from_values(f, [[1, 0, 1], [nu, 1, 1], [-1 - nu, -1, -1]])
    unip = Matrix.from_values(f, [[1, 0, nu ** 7], [0, 1, 0], [0, 0, 1]])
    gamma = b @ unip @ b.inv()
    form = BiproximalForm(gamma, nu ** 150, Matrix.identity(f, 1), nu ** -150)
    a2 = form.matrix()
    eps = N ** -3
    flag = Flag(_pt(f, b.col(0)), hyperplane_of_frame(b, 2))
    checks: dict = {}
    checks["|nu| > 100"] = _check(N, 100, N > 100)
    checks["||b^{+-1}|| <= |nu|"] = _check(max(mat_norm(b), mat_norm(b.inv())), N,
                                          max(mat_norm(b), mat_norm(b.inv())) <= N)
    checks["C(b) <= 2|nu|^2"] = _check(cond_C(b), 2 * N ** 2, cond_C(b) <= 2 * N ** 2)
    checks["C(gamma) <= |nu|^19"] = _check(cond_C(gamma), N ** 19, cond_C(gamma) <= N ** 19)
    na2 = max(mat_norm(a2), mat_norm(a2.inv()))
    checks["||rho(a2)^{+-1}|| <= |nu|^168"] = _check(na2, N ** 168, na2 <= N ** 168)
    d_plus = proj_dist(form.plus, flag.point)
    d_minus = proj_dist(form.minus, flag.point)
    checks["d(rho(a2)^{+-}, [b e1]) < eps/5"] = _check(max(d_plus, d_minus), eps / 5,
                                                      max(d_plus, d_minus) < eps / 5)
    ex = max(hyperplane_excess(form.repelling_plus, flag.hyperplane),
             hyperplane_excess(form.repelling_minus, flag.hyperplane))
    checks["dist(P(V^{+-}), P(b(e3^perp))) < eps/5"] = _check(ex, eps / 5, ex < eps / 5)
    tr = form.transversality()
    checks["transversality >= |nu|^-19"] = _check(tr, N ** -19, tr >= N ** -19)
    gate = perturb1_gate(form, 1, N ** -19, N ** -21)
    checks["contraction gate (alpha=1, eps=|nu|^-19, delta=|nu|^-21)"] = _check(
        gate.failing, None, gate.ok)
    theta = theta_bound(a1, eps)
    checks["theta(3, |nu|^-3, C) >= |nu|^-31"] = _check(theta, N ** -31, theta >= N ** -31)
    alphabet = SyllableAlphabet((FreeRank(2),))
    rep = Representation(alphabet, [a1, a2])
    return Example61(f, nu, a1, a2, b, gamma, N ** -31, N ** -190, eps, flag, checks, alphabet, rep)


def example61_form(ex: Example61) -> BiproximalForm:
    f = ex.field
    return BiproximalForm(ex.gamma, ex.nu ** 150, Matrix.identity(f, 1), ex.nu ** -150)


# ---------------------------------------------------------------------------
# thm2 (complex): (Z x F) * F_m
# ---------------------------------------------------------------------------

def commutant_dimension(mats: Sequence[Matrix], tol: float = 1e-9) -> int:
    """dim {X : X M = M X for all M} over C, by numerical rank."""
    d = mats[0].n
    blocks = []
    eye = np.eye(d)
    for M in mats:
        A = np.array([[complex(x) for x in r] for r in M.rows])
        # vec(XA - AX) = (A^T kron I - I kron A) vec(X)  (column-major vec)
        blocks.append(np.kron(A.T, eye) - np.kron(eye, A))
    K = np.vstack(blocks)
    s = np.linalg.svd(K, compute_uv=False)
    return int(sum(1 for v in s if v <= tol * max(1.0, s[0]))) + max(0, d * d - len(s))


def dihedral_rep(field: Field, k: int = 4) -> tuple[FiniteGroup, list[Matrix]]:
    """D_{2k} with r -> rotation by 2 pi / k, s -> diag(1, -1).  For k = 4 the
    rotation is [[0, 1], [-1, 0]]."""
    G = dihedral_group(k)
    if k == 4:
        R = Matrix.from_values(field, [[0, 1], [-1, 0]])
    else:
        ctx = field.ctx
        c, s = ctx.cos(2 * ctx.pi / k), ctx.sin(2 * ctx.pi / k)
        R = Matrix(field, [[c, s], [-s, c]])
    S = Matrix.from_values(field, [[1, 0], [0, -1]])
    mats = []
    for idx in range(G.order):
        i, e = idx % k, idx // k
        mats.append((R ** i) @ (S ** e))
    return G, mats


@dataclass(frozen=True)
class Thm2Data:
    d: int = 2
    n: int = 3
    lam: Any = 10 ** 5
    eta: Any = Fraction(1, 10)
    m: int = 1
    group: FiniteGroup | None = None
    psi0: tuple | None = None
    v1: tuple | None = None
    v2: tuple | None = None
    xi: str = "0.1234567891"
    precision: int = 512
    seed: int = 0


def theta_block(field: Field, n: int, d: int, xi: Any) -> Matrix:
    """Theta_n: empty (n = d+1), 1 (n = d+2), rotations R_{xi^m}, or
    2R_{xi^m} followed by 4^-s."""
    if n == d + 1:
        return Matrix(field, [])
    if n == d + 2:
        return Matrix.diag(field, [1])
    ctx = field.ctx
    rest = n - d - 1
    s = rest // 2
    blocks = []
    for m in range(1, s + 1):
        c, sn = ctx.cos(xi ** m), ctx.sin(xi ** m)
        R = Matrix(field, [[c, -sn], [sn, c]])
        blocks.append(R if rest % 2 == 0 else R.scale(2))
    if rest % 2:
        blocks.append(Matrix.diag(field, [ctx.mpf(4) ** (-s)]))
    return Matrix.block_diag(field, blocks)


@dataclass
class Thm2Build:
    data: Thm2Data
    field: Field
    group: FiniteGroup
    psi_f: list            # psi_n(f), f in group order
    psi_t: Matrix
    theta: Any
    theta_prime: Any
    flag: Flag             # (y, W)
    generators: list       # Schottky generators of the free part
    alphabet: SyllableAlphabet
    rep: Representation
    free_letters: list = dc_field(default_factory=list)
    free_radii: list = dc_field(default_factory=list)
    checks: dict = dc_field(default_factory=dict)
    lam: Any = None

    def sample_finite_part(self, rng: np.random.Generator) -> tuple[list[Matrix], Matrix]:
        return sample_psi_theta(self.field, self.psi_f, self.psi_t, self.data.d,
                                self.theta_prime, rng)

    def sample_free_part(self, rng: np.random.Generator) -> list[Matrix]:
        out = []
        for L, r in zip(self.free_letters, self.free_radii):
            M = L.power(1) if isinstance(L, Factored) else L
            out.append(M + _perturb_complex(self.field, M.n, r, rng))
        return out

    def pingpong_instance(self, theta: float = math.log(2), c: float = 12.0) -> PingPongInstance:
        ball = Ball(self.flag.point, self.theta)
        comp = HyperComplement(self.flag.hyperplane, self.theta)
        one = SyllableAlphabet((self.alphabet.factors[0],))
        rest = SyllableAlphabet(self.alphabet.factors[1:])

        def s1(rng: np.random.Generator) -> Representation:
            mats, t = self.sample_finite_part(rng)
            return Representation(one, [(mats, t)])

        def s2(rng: np.random.Generator) -> Representation:
            return Representation(rest, self.sample_free_part(rng))

        fam1 = PingPongFamily(one, s1, ball, comp, theta, -c, 1, "Z x F")
        fam2 = PingPongFamily(rest, s2, comp, ball, theta, c, 1, "free part")
        return PingPongInstance(fam1, fam2, "thm2:pingpong")


def sample_psi_theta(field: Field, psi_f: Sequence[Matrix], psi_t: Matrix, d: int,
                     radius: Any, rng: np.random.Generator,
                     attempts: int = 200) -> tuple[list[Matrix], Matrix]:
    """A point of Psi_radius: psi'(f) = w psi(f) w^-1 and psi'(t) = w X w^-1 with
    X = diag(l I_d, Y) commuting with psi(F), ||w - I|| < radius and
    ||psi'(t) - psi(t)|| < radius (re-checked)."""
    n = psi_t.n
    nt = mat_norm(psi_t)
    ident = Matrix.identity(field, n)
    for _ in range(attempts):
        w = ident + _perturb_complex(field, n, radius / (8 * nt), rng)
        lam1 = _near_scalar(field, psi_t.rows[0][0], radius / 8, rng)
        low = Matrix(field, [[psi_t.rows[i][j] for j in range(d, n)] for i in range(d, n)])
        Y = low + _perturb_complex(field, n - d, radius / 8, rng)
        X = Matrix.block_diag(field, [Matrix.diag(field, [lam1] * d), Y])
        w_inv = w.inv()
        t_new = w @ X @ w_inv
        if mat_norm(w - ident) < radius and mat_norm(t_new - psi_t) < radius:
            return [w @ M @ w_inv for M in psi_f], t_new
    raise RuntimeError("could not sample the neighbourhood")


def build_thm2(data: Thm2Data) -> Thm2Build:
    d, n = data.d, data.n
    if d < 2 or d % 2:
        raise PreconditionError("d must be even and >= 2")
    if n < d + 1:
        raise PreconditionError("need n >= d + 1")
    f = complex_field(data.precision)
    ctx = f.ctx
    if data.group is None:
        G, psi0 = dihedral_rep(f, 4)
        if d != 2:
            raise PreconditionError("the default dihedral representation is 2-dimensional")
    else:
        G = data.group
        psi0 = [Matrix.from_values(f, M) for M in data.psi0]
    for a in range(G.order):
        for b in range(G.order):
            if mat_norm(psi0[a] @ psi0[b] - psi0[G.mul(a, b)]) > f.tolerance(2):
                raise PreconditionError("psi_0 is not a homomorphism")
    if commutant_dimension(psi0) != 1:
        raise PreconditionError("psi_0 is reducible over C (commutant is larger than scalars)")
    if data.v1 is None:
        v1 = tuple(ctx.mpf(x) / ctx.sqrt(5) for x in (1, 2))
        v2 = tuple(ctx.mpf(x) / ctx.sqrt(10) for x in (3, -1))
    else:
        v1 = tuple(f(x) for x in data.v1)
        v2 = tuple(f(x) for x in data.v2)
    eta = _mp(f, Fraction(data.eta))
    dot = lambda u, v: sum((a * b for a, b in zip(u, v)), ctx.zero)
    m1 = min(abs(dot(M.apply(v1), v2)) for M in psi0)
    m2 = min(abs(dot([a - b for a, b in zip(M.apply(v1), v1)], v2))
             for i, M in enumerate(psi0) if i != G.identity)
    checks = {"min |psi0(f) v1 . v2| >= eta": _check(m1, eta, m1 >= eta),
              "min |(psi0(f) v1 - v1) . v2| >= eta": _check(m2, eta, m2 >= eta)}
    if not (m1 >= eta and m2 >= eta):
        raise PreconditionError("v1, v2 do not satisfy the eta inequalities")
    lam = _mp(f, Fraction(data.lam)) if not isinstance(data.lam, str) else ctx.mpf(data.lam)
    if not lam >= ctx.mpf(8) ** n / eta ** 2:
        raise PreconditionError("need lambda >= 8^n / eta^2")
    xi = ctx.mpf(data.xi)
    Th = theta_block(f, n, d, xi)
    psi_t = Matrix.block_diag(f, [Matrix.diag(f, [lam] * d), Matrix.diag(f, [lam ** (-d)]), Th])
    psi_f = [Matrix.block_diag(f, [M, Matrix.identity(f, n - d)]) for M in psi0]
    theta = eta / 100
    nt = mat_norm(psi_t)
    if n == d + 1:
        theta_prime = theta / (10 ** 4 * nt)
    else:
        low = Matrix.block_diag(f, [Matrix.diag(f, [lam ** (-d)]), Th])
        ev = ctx.eig(low.to_mp(), left=False, right=False) if low.n > 1 else [low.rows[0][0]]
        gap = min(abs(a - b) for i, a in enumerate(ev) for b in ev[i + 1:]) if len(ev) > 1 else 1
        theta0 = theta * min(gap, 1) / 10 ** 3
        theta_prime = theta0 / (10 ** 4 * nt)
    y = list(v1) + [ctx.one] + [ctx.zero] * (n - d - 1)
    v1v2 = dot(v1, v2)
    wn = list(v2) + [-v1v2] + [ctx.zero] * (n - d - 1)
    flag = Flag(_pt(f, y), _hp(f, wn))
    if n >= d + 2:
        checks["leading eigenvalues of odd wedge powers non-real"] = _check(
            None, None, odd_wedges_nonreal(psi_t, d))
    # free part: Schottky near (y, W) at rate log 2 + 6 log(1/theta)
    alpha = ctx.log(2) + 6 * ctx.log(1 / theta)
    gens = schottky_near_flag(flag, data.m, alpha, theta / 20, data.seed, non2q=False) if data.m else []
    group_factor = FiniteExt(G, True, "t")
    alphabet = SyllableAlphabet((group_factor, FreeRank(data.m, "a"))) if data.m else \
        SyllableAlphabet((group_factor,))
    letters = [Factored.from_form(g.form) for g in gens]
    rep = Representation(alphabet, [(psi_f, psi_t)] + letters)
    return Thm2Build(data, f, G, psi_f, psi_t, theta, theta_prime, flag, gens, alphabet, rep,
                     letters, [g.radius for g in gens], checks, lam)


def odd_wedges_nonreal(psi_t: Matrix, d: int, margin: Any = None) -> bool:
    """For odd d+q in [d+1, n-2]: every eigenvalue of maximal modulus of the
    (d+q)-th exterior power is non-real, with a margin."""
    f = psi_t.field
    ctx = f.ctx
    n = psi_t.n
    margin = f.tolerance(4) if margin is None else margin
    for k in range(d + 1, n - 1):
        if k % 2 == 0:
            continue
        E = exterior_power(psi_t, k)
        ev = ctx.eig(E.to_mp(), left=False, right=False)
        top = max(abs(x) for x in ev)
        lead = [x for x in ev if abs(abs(x) - top) <= margin * top]
        if any(abs(ctx.im(x)) <= margin * top for x in lead):
            return False
    return True


def verify_claim4(build: Thm2Build, samples: int = 200, powers: Sequence[int] = tuple(range(-3, 4)),
                  seed: int = 0, flag: Flag | None = None, threads: int = 1,
                  profile: str = "") -> SampledCertificate:
    """For sampled psi' in Psi_theta', all f in F and p with f t^p != 1, and
    u in B_theta(y): [psi'(f t^p) u] avoids N_theta(P(W)) and
    ||psi'(f t^p) u|| >= (theta/10) lambda^|p| ||u||."""
    f = build.field
    ctx = f.ctx
    flag = flag or build.flag
    ball = Ball(flag.point, build.theta)
    comp = HyperComplement(flag.hyperplane, build.theta)
    G = build.group
    log_floor = ctx.log(build.theta / 10)
    log_lam = ctx.log(build.lam)

    def body(rng: np.random.Generator, cert: SampledCertificate) -> None:
        mats, t = build.sample_finite_part(rng)
        u = sample(ball, 1, rng)[0].vec
        lu = _log_norm(f, u)
        tp = {p: t ** p for p in powers}
        for p in powers:
            Tu = tp[p].apply(u)
            for e in range(G.order):
                if e == G.identity and p == 0:
                    continue
                v = mats[e].apply(Tu)
                y = ProjPoint(f, normalize(f, v))
                margin = set_margin(comp, y)
                slack = _log_norm(f, v) - lu - log_floor - abs(p) * log_lam
                ok = contains(comp, y) and slack >= 0
                cert.record(ok, margin, slack, lambda: {"f": G.names[e], "p": p})

    return _chunked_certificate("claim4", "thm2:claim4", profile, samples, seed, body, threads)


@dataclass
class Example62:
    build: Thm2Build
    h: Matrix
    beta: Matrix
    z: Factored
    z_radius: Any
    example_flag: Flag
    checks: dict

    @property
    def field(self) -> Field:
        return self.build.field

    def z_matrix(self) -> Matrix:
        return self.z.power(1)

    def sample_z(self, rng: np.random.Generator) -> Matrix:
        M = self.z_matrix()
        return M + _perturb_complex(self.field, 3, self.z_radius, rng)

    def pingpong_instance(self, theta: float = math.log(2), c: float = 12.0) -> PingPongInstance:
        b = self.build
        ball = Ball(self.example_flag.point, b.theta)
        comp = HyperComplement(self.example_flag.hyperplane, b.theta)
        one = SyllableAlphabet((b.alphabet.factors[0],))
        two = SyllableAlphabet((Cyclic("z"),))

        def s1(rng: np.random.Generator) -> Representation:
            mats, t = b.sample_finite_part(rng)
            return Representation(one, [(mats, t)])

        fam1 = PingPongFamily(one, s1, ball, comp, theta, -c, 1, "Z x D8")
        fam2 = PingPongFamily(two, lambda rng: Representation(two, [self.sample_z(rng)]),
                              comp, ball, theta, c, 1, "z")
        return PingPongInstance(fam1, fam2, "ex62:pingpong")


def build_example62(precision: int = 2048) -> Example62:
    if precision < 2048:
        raise PreconditionError("ex62 needs at least 2048 bits")
    data = Thm2Data(d=2, n=3, lam=10 ** 5, eta=Fraction(1, 10), m=0, precision=precision)
    b = build_thm2(data)
    f = b.field
    ctx = f.ctx
    h = Matrix.from_values(f, [[1, 0, 1], [2, 1, 1], [1, -1, 3]])
    unip = Matrix.from_values(f, [[1, 0, 10 ** 7], [0, 1, 0], [0, 0, 1]])
    beta = h @ unip @ h.inv()
    big = ctx.mpf(10) ** 130
    D = Matrix.diag(f, [big, 1, 1 / big])
    z = Factored(beta, D)
    form = BiproximalForm(beta, big, Matrix.identity(f, 1), 1 / big)
    example_flag = Flag(_pt(f, h.col(0)), hyperplane_of_frame(h, 2))
    alphabet = SyllableAlphabet((b.alphabet.factors[0], Cyclic("z")))
    b.alphabet = alphabet
    b.rep = Representation(alphabet, [(b.psi_f, b.psi_t), z])
    b.free_letters = [z]
    z_radius = ctx.mpf(10) ** -167
    b.free_radii = [z_radius]
    theta = b.theta
    checks = dict(b.checks)
    nh = max(mat_norm(h), mat_norm(h.inv()))
    checks["||h^{+-1}|| <= 4"] = _check(nh, 4, nh <= 4)
    checks["C(h) <= 2^5"] = _check(cond_C(h), 32, cond_C(h) <= 32)
    nb = max(mat_norm(beta), mat_norm(beta.inv()))
    checks["||beta^{+-1}|| <= 2^4 10^7"] = _check(nb, 16 * 10 ** 7, nb <= 16 * 10 ** 7)
    checks["C(beta) <= 2^9 10^14"] = _check(cond_C(beta), 2 ** 9 * 10 ** 14, cond_C(beta) <= 2 ** 9 * 10 ** 14)
    nz = max(mat_norm(z.power(1)), mat_norm(z.power(-1)))
    checks["||psi(z)^{+-1}|| <= 10^147"] = _check(nz, ctx.mpf(10) ** 147, nz <= ctx.mpf(10) ** 147)
    dp = max(proj_dist(form.plus, example_flag.point), proj_dist(form.minus, example_flag.point))
    checks["d(psi(z)^{+-}, [h e1]) < theta/2"] = _check(dp, theta / 2, dp < theta / 2)
    ex = max(hyperplane_excess(form.repelling_plus, example_flag.hyperplane),
             hyperplane_excess(form.repelling_minus, example_flag.hyperplane))
    checks["dist(P(V^{+-}), P(h(e3^perp))) < theta/2"] = _check(ex, theta / 2, ex < theta / 2)
    tr = form.transversality()
    cb = cond_C(beta)
    checks["transversality >= C(beta)^-1"] = _check(tr, 1 / cb, tr >= 1 / cb)
    e1 = 1 / (ctx.mpf(2) ** 9 * ctx.mpf(10) ** 14)
    d1 = 1 / (ctx.mpf(2) ** 9 * ctx.mpf(10) ** 16)
    gate = perturb1_gate(form, 1, e1, d1)
    checks["contraction gate (alpha=1, eps=1/(2^9 10^14), delta=1/(2^9 10^16))"] = _check(
        gate.failing, None, gate.ok)
    tp = b.theta_prime
    checks["theta' = 10^-12"] = _check(tp, ctx.mpf(10) ** -12,
                                       abs(tp - ctx.mpf(10) ** -12) <= f.tolerance(2) * tp)
    return Example62(b, h, beta, z, z_radius, example_flag, checks)


def example62_form(ex: Example62) -> BiproximalForm:
    D = ex.z.D
    return BiproximalForm(ex.beta, D.rows[0][0], Matrix.identity(ex.field, 1), D.rows[2][2])


# ---------------------------------------------------------------------------
# the sets B_{M,eps}(x, V)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BMxVDescriptor:
    M: Any
    eps: Any
    flag: Flag

    def __post_init__(self) -> None:
        if not self.M > 1 or not self.eps > 0:
            raise ValueError("need M > 1 and eps > 0")


class DefectiveMatrixError(ArithmeticError):
    pass


def canonical_eigenframe(g: Matrix) -> tuple[Matrix, list]:
    """Eigenvector matrix h (columns ordered by decreasing eigenvalue modulus,
    unit columns, then rescaled to balance ||h|| and ||h^-1||) and the
    eigenvalues."""
    f = g.field
    if not f.archimedean:
        raise TypeError("the eigenframe search is archimedean")
    ctx = f.ctx
    n = g.n
    E, ER = ctx.eig(g.to_mp(), left=False, right=True)
    order = sorted(range(n), key=lambda i: (-ctx.fabs(E[i]), i))
    cols = []
    for i in order:
        v = [ER[r, i] for r in range(n)]
        nv = f.vec_norm(v)
        cols.append(tuple(x / nv for x in v))
    h = Matrix.from_columns(f, cols)
    try:
        h_inv = h.inv()
    except SingularMatrixError as exc:
        raise DefectiveMatrixError("matrix is not diagonalizable") from exc
    if mat_norm(h_inv) * f.tolerance(2) > 1:
        raise DefectiveMatrixError("eigenvectors are numerically dependent")
    scales = [ctx.one] * n

    def cost(sc: list) -> Any:
        hs = Matrix.from_columns(f, [tuple(x * s for x in c) for c, s in zip(cols, sc)])
        his = Matrix(f, [[x / sc[i] for x in r] for i, r in enumerate(h_inv.rows)])
        return max(mat_norm(hs), mat_norm(his))

    c0 = ctx.sqrt(mat_norm(h_inv) / mat_norm(h))
    scales = [c0] * n
    best = cost(scales)
    step = ctx.mpf(2) ** ctx.mpf(0.25)
    for _ in range(40):
        improved = False
        for i in range(n):
            for fac in (step, 1 / step):
                trial = list(scales)
                trial[i] = trial[i] * fac
                val = cost(trial)
                if val < best:
                    best, scales, improved = val, trial, True
        if not improved:
            break
    hs = Matrix.from_columns(f, [tuple(x * s for x in c) for c, s in zip(cols, scales)])
    return hs, [E[i] for i in order]


def bmxv_gates(g: Matrix, desc: BMxVDescriptor) -> dict:
    f = g.field
    h, ev = canonical_eigenframe(g)
    M, eps = _mp(f, desc.M), _mp(f, desc.eps)
    h_inv = h.inv()
    nh = max(mat_norm(h), mat_norm(h_inv))
    he1 = ProjPoint(f, normalize(f, h.col(0)))
    d1 = proj_dist(he1, desc.flag.point)
    W = Hyperplane.of(f, tuple(f.conj(x) for x in h_inv.rows[0]))
    ex = hyperplane_excess(W, desc.flag.hyperplane)
    k1 = abs(ev[0])
    need = (10 * M / eps) ** 12
    ratio_ok = all(k1 >= need * abs(k) for k in ev[1:])
    return {
        "||h^{+-1}|| <= M": _check(nh, M, nh <= M),
        "[h e1] in B_{eps/10}(x)": _check(d1, eps / 10, d1 < eps / 10),
        "P(h(e1^perp)) in N_{eps/10}(P(V))": _check(ex, eps / 10, ex < eps / 10),
        "|k1| >= (10M/eps)^12 |ki|": _check(k1 / max(abs(k) for k in ev[1:]), need, ratio_ok),
    }


def in_BMxV(g: Matrix, desc: BMxVDescriptor) -> bool:
    """Membership of g in B_{M,eps}(x, V), tested on the canonical eigenframe
    only (a conservative test: a False may have another witness frame)."""
    return all(v["ok"] for v in bmxv_gates(g, desc).values())


# ---------------------------------------------------------------------------
# thm3: the semigroup Z * Z+ in GL_3(C)
# ---------------------------------------------------------------------------

PROFILES = {
    "desk": {"eps": "1e-2", "lam": "1e2", "kappa": "1e12", "precision": 256},
    "svg": {"eps": "1e-3", "lam": "1e2", "kappa": "1e56", "precision": 256},
    "paper": {"eps": "1e-6", "lam": "1e2", "kappa": "1e168", "precision": 2048},
}


@dataclass(frozen=True)
class Thm3Data:
    eps: str = "1e-2"
    lam: str = "1e2"
    kappa: str = "1e12"
    precision: int = 256
    profile: str = "desk"
    lam1: str | None = None   # override lambda_1 of A (tie when None)

    @classmethod
    def from_profile(cls, name: str, **kw: Any) -> "Thm3Data":
        if name not in PROFILES:
            raise ValueError(f"unknown profile {name!r}")
        return cls(profile=name, **{**PROFILES[name], **kw})


@dataclass
class Thm3Build:
    data: Thm3Data
    field: Field
    h: Matrix
    A: Matrix
    B: Factored
    eps: Any
    lam: Any
    kappa: Any
    flag1: Flag
    flag2: Flag
    alphabet: SyllableAlphabet
    rep: Representation
    gates: dict

    @property
    def admissible(self) -> bool:
        """Whether the printed hypotheses on (eps, lambda, kappa) hold."""
        return all(v["ok"] for v in self.gates.values())

    def sample_A(self, rng: np.random.Generator, sign: int) -> Matrix:
        """A point of Omega_1^+ (sign=1) or Omega_1^- (sign=-1)."""
        f = self.field
        r = self.eps ** 6
        for _ in range(200):
            gam = Matrix.identity(f, 3) + _perturb_complex(f, 3, r, rng)
            l1 = _near_scalar(f, self.lam, r, rng)
            l2 = _near_scalar(f, -self.lam, r, rng)
            l3 = _near_scalar(f, -1 / self.lam ** 2, r, rng)
            if (abs(l1) >= abs(l2)) if sign > 0 else (abs(l1) <= abs(l2)):
                return gam @ Matrix.diag(f, [l1, l2, l3]) @ gam.inv()
        raise RuntimeError("sampling Omega_1 failed")

    def sample_B(self, rng: np.random.Generator) -> Factored:
        f = self.field
        r = self.eps ** 6
        gam = Matrix.identity(f, 3) + _perturb_complex(f, 3, r, rng)
        k = [_near_scalar(f, self.kappa, r, rng), _near_scalar(f, f.one, r, rng),
             _near_scalar(f, 1 / self.kappa, r, rng)]
        gh = gam @ self.h
        return Factored(gh, Matrix.diag(f, k))

    def pingpong_instance(self, sign: int = 1, c: float = 1.0) -> PingPongInstance:
        """sign=1: A' in Omega_1^+ with (x1, V2) and B'; sign=-1: A' in Omega_1^-
        with (x2, V1) and B'^-1."""
        f = self.field
        x, V = (self.flag1.point, self.flag2.hyperplane) if sign > 0 else \
            (self.flag2.point, self.flag1.hyperplane)
        ball, comp = Ball(x, self.eps), HyperComplement(V, self.eps)
        theta = float(f.ctx.log(self.lam)) / 2
        one = SyllableAlphabet((Cyclic("A"),))
        two = SyllableAlphabet((SemigroupGen("B" if sign > 0 else "B^-1"),))

        def sB(rng: np.random.Generator) -> Representation:
            Bf = self.sample_B(rng)
            if sign < 0:
                Bf = Factored(Bf.h, Bf.D.inv(), Bf.h_inv)
            return Representation(two, [Bf])

        fam1 = PingPongFamily(one, lambda rng: Representation(one, [self.sample_A(rng, sign)]),
                              ball, comp, theta, -c, 1, "A")
        fam2 = PingPongFamily(two, sB, comp, ball, theta, c, 1, "B")
        return PingPongInstance(fam1, fam2, f"thm3:pingpong{'+' if sign > 0 else '-'}")


def build_thm3(data: Thm3Data) -> Thm3Build:
    f = complex_field(data.precision)
    ctx = f.ctx
    eps, lam, kappa = ctx.mpf(data.eps), ctx.mpf(data.lam), ctx.mpf(data.kappa)
    if not (eps > 0 and lam > 1 and kappa > 1):
        raise PreconditionError("need eps > 0, lambda > 1, kappa > 1")
    gates = {
        "0 < eps <= 10^-6": _check(eps, ctx.mpf("1e-6"), eps <= ctx.mpf("1e-6")),
        "lambda >= 10^2": _check(lam, 100, lam >= 100),
        "kappa >= eps^-28": _check(kappa, eps ** -28, kappa >= eps ** -28),
    }
    h = Matrix.from_values(f, [[1, 0, Fraction(1, 2)], [1, 1, 1], [1, 1, -1]])
    lam1 = lam if data.lam1 is None else ctx.mpf(data.lam1)
    A = Matrix.diag(f, [lam1, -lam, -1 / lam ** 2])
    B = Factored(h, Matrix.diag(f, [kappa, 1, 1 / kappa]))
    h_inv = h.inv()
    flag1 = Flag(_pt(f, h.col(0)), Hyperplane.of(f, h_inv.rows[2]))
    flag2 = Flag(_pt(f, h.col(2)), Hyperplane.of(f, h_inv.rows[0]))
    alphabet = SyllableAlphabet((Cyclic("A"), SemigroupGen("B")))
    rep = Representation(alphabet, [A, B])
    return Thm3Build(data, f, h, A, B, eps, lam, kappa, flag1, flag2, alphabet, rep, gates)


def verify_thm3_inclusions(build: Thm3Build, samples: int = 1000, powers: Sequence[int] = (1, 2, 3, 4),
                           seed: int = 0, threads: int = 1) -> SampledCertificate:
    """The four displayed inclusion + growth statements, each tested on the
    same number of samples: A+^{+-p} on B_eps(x1), A-^{+-p} on B_eps(x2),
    B'^s off N_eps(V2), B'^-s off N_eps(V1)."""
    f = build.field
    ctx = f.ctx
    eps = build.eps
    x1, V1 = build.flag1.point, build.flag1.hyperplane
    x2, V2 = build.flag2.point, build.flag2.hyperplane
    half_log_lam = ctx.log(build.lam) / 2
    half_log_kappa = ctx.log(build.kappa) / 2
    cases = [
        ("A+", Ball(x1, eps), HyperComplement(V2, eps), half_log_lam),
        ("A-", Ball(x2, eps), HyperComplement(V1, eps), half_log_lam),
        ("B+", HyperComplement(V2, eps), Ball(x1, eps), half_log_kappa),
        ("B-", HyperComplement(V1, eps), Ball(x2, eps), half_log_kappa),
    ]

    def body(rng: np.random.Generator, cert: SampledCertificate) -> None:
        Ap = build.sample_A(rng, 1)
        Am = build.sample_A(rng, -1)
        Bf = build.sample_B(rng)
        for name, src, dst, rate in cases:
            u = sample(src, 1, rng)[0].vec
            lu = _log_norm(f, u)
            if name[0] == "A":
                M = Ap if name == "A+" else Am
                mats = {s * p: M ** (s * p) for p in powers for s in (1, -1)}
            else:
                sgn = 1 if name == "B+" else -1
                mats = {p: Bf.power(sgn * p) for p in powers}
            for p, Mp in mats.items():
                v = Mp.apply(u)
                y = ProjPoint(f, normalize(f, v))
                margin = set_margin(dst, y)
                slack = _log_norm(f, v) - lu - rate * abs(p)
                ok = contains(dst, y) and slack >= 0
                cert.record(ok, margin, slack, lambda: {"case": name, "power": p})

    return _chunked_certificate("thm3-inclusions", "thm3:inclusions",
                                build.data.profile, samples, seed, body, threads)


@dataclass
class SvgScan:
    words: int
    violations: int
    admissible: bool
    min_log_slack: float
    worst_word: str
    membership: dict
    gate_details: dict


def svg_inequality_scan(build: Thm3Build, L: int = 6, cap: int = 2,
                        eps: Any = None, membership_powers: Sequence[int] = (1, 2)) -> SvgScan:
    """Check sigma_1/sigma_2(w) >= eps^5 prod( (l1/l2(B^s))^(1/3) l1/l2(A^p) )
    on every reduced word in A^{+-1}, B up to syllable length L.

    Admissibility records whether x1 has all |coordinates| >= 100 eps and B^s
    passes the B_{3,eps}(x1, V2) gates (via :func:`in_BMxV`); the inequality
    is evaluated regardless.
    """
    f = build.field
    ctx = f.ctx
    eps = build.eps if eps is None else ctx.mpf(eps)
    x = build.flag1.point.vec
    xn = f.vec_norm(x)
    coord_ok = min(abs(c) for c in x) / xn >= 100 * eps
    desc = BMxVDescriptor(3, eps, Flag(build.flag1.point, build.flag2.hyperplane))
    membership = {}
    for s in membership_powers:
        membership[s] = in_BMxV(build.B.power(s), desc)
    gates = bmxv_gates(build.B.power(1), desc)
    admissible = coord_ok and all(membership.values())
    rep = build.rep
    alphabet = rep.alphabet

    def log_ratio12(w: tuple) -> Any:
        from .pingpong import eigen_log_moduli
        lg = eigen_log_moduli(rep, w)
        return lg[0] - lg[1]

    cache: dict = {}
    words = enumerate_words(alphabet, L, "syllable", cap)
    violations = 0
    worst = (math.inf, "")
    log_eps5 = 5 * float(ctx.log(eps))
    for w in words:
        rhs = log_eps5
        for s in w:
            if s not in cache:
                r = float(log_ratio12((s,)))
                cache[s] = r / 3 if alphabet.factors[s.factor].__class__ is SemigroupGen else r
            rhs += cache[s]
        logs = log_singular_values(rep, w)
        lhs = logs[0] - logs[1]
        slack = lhs - rhs
        if slack < -1e-9:
            violations += 1
        if slack < worst[0]:
            worst = (slack, alphabet.format(w))
    return SvgScan(len(words), violations, admissible, worst[0], worst[1],
                   {str(k): v for k, v in membership.items()},
                   {"coordinates >= 100 eps": bool(coord_ok), **{k: v["ok"] for k, v in gates.items()}})


# ---------------------------------------------------------------------------
# cor54: degeneration to a non-proximal limit
# ---------------------------------------------------------------------------

@dataclass
class Cor54Build:
    field: Field
    flag: Flag
    beta: Matrix
    T: Any
    r: int
    M: Any
    ratios: tuple
    lam: Any
    members: list            # Representation per ratio
    diag_letters: list
    beta_letter: Factored
    checks: dict


def _cor54_beta(field: Field, T: Any) -> Matrix:
    """I + T x l with x = (1,1,1) and l = (1,-1/2,-1/2) (so l.x = 0)."""
    x = [1, 1, 1]
    l = [1, Fraction(-1, 2), Fraction(-1, 2)]
    return Matrix(field, [[(1 if i == j else 0) + field(T) * field(x[i]) * field(l[j])
                           for j in range(3)] for i in range(3)])


def build_cor54(ratios: Sequence[Any] = (4, 2, "1.5", "1.1", 1), lam: Any = 2, r: int | None = None,
                precision: int = 256, gate_precision: int = 3072, eps: str = "1e-8",
                T: Any = 10 ** 10) -> Cor54Build:
    """Members diag(l1, l2, 1/(l1 l2)) with l1/l2 = ratio, l2 = lam, paired with
    beta diag(10^r, 1, 10^-r) beta^-1; r is the least integer making every
    checked power pass the B_{M,eps}(x, V) gates (high precision)."""
    if not lam >= 2:
        raise PreconditionError("need |lambda| >= 2")
    hi = real_field(gate_precision)
    ctx_hi = hi.ctx
    flag_hi = Flag(_pt(hi, [1, 1, 1]), _hp(hi, [2, -1, -1]))
    beta_hi = _cor54_beta(hi, T)
    M = max(mat_norm(beta_hi), mat_norm(beta_hi.inv()))
    M_ceil = ctx_hi.ceil(M * 1000) / 1000
    desc = BMxVDescriptor(M_ceil, ctx_hi.mpf(eps), flag_hi)
    checks: dict = {}
    geo = {
        "[beta e1] in B_{eps/10}(x)": proj_dist(_pt(hi, beta_hi.col(0)), flag_hi.point) < desc.eps / 10,
        "[beta e3] in B_{eps/10}(x)": proj_dist(_pt(hi, beta_hi.col(2)), flag_hi.point) < desc.eps / 10,
    }
    checks.update({k: _check(None, None, v) for k, v in geo.items()})
    need = (10 * M_ceil / desc.eps) ** 12
    if r is None:
        r = int(ctx_hi.ceil(ctx_hi.log10(need))) + 1
    big = ctx_hi.mpf(10) ** r
    for p in (1, -1, 2, -2):
        g = beta_hi @ Matrix.diag(hi, [big ** p, 1, big ** -p]) @ beta_hi.inv()
        checks[f"power {p} in B_(M,eps)(x,V)"] = _check(None, None, in_BMxV(g, desc))
    f = real_field(precision)
    ctx = f.ctx
    beta = _cor54_beta(f, T)
    beta_letter = Factored(beta, Matrix.diag(f, [ctx.mpf(10) ** r, 1, ctx.mpf(10) ** -r]))
    alphabet = SyllableAlphabet((FreeRank(2),))
    lam_m = _mp(f, Fraction(lam)) if not isinstance(lam, str) else ctx.mpf(lam)
    members, diags = [], []
    for q in ratios:
        q = ctx.mpf(q) if isinstance(q, str) else _mp(f, Fraction(q))
        l1 = q * lam_m
        D = Matrix.diag(f, [l1, lam_m, 1 / (l1 * lam_m)])
        diags.append(D)
        members.append(Representation(alphabet, [D, beta_letter]))
    flag = Flag(_pt(f, [1, 1, 1]), _hp(f, [2, -1, -1]))
    return Cor54Build(f, flag, beta, T, r, M_ceil, tuple(ratios), lam_m, members, diags,
                      beta_letter, checks)


def cor54_transversality_exact(l1: Fraction, l2: Fraction, powers: Sequence[int]) -> list[bool]:
    """dist(g^p x, P(V)) >= 1/(2 sqrt 18) for g = diag(l1, l2, 1/(l1 l2)),
    x = (1,1,1), V = (2,-1,-1)^perp, via the exact sufficient test
    72 (g^p x . a)^2 >= |a|^2 |g^p x|^2 (the distance dominates the cosine
    to the conormal)."""
    a = (2, -1, -1)
    out = []
    for p in powers:
        if p == 0:
            raise ValueError("p = 0 is excluded (x lies on V)")
        v = (Fraction(l1) ** p, Fraction(l2) ** p, (1 / (Fraction(l1) * Fraction(l2))) ** p)
        dot = sum(x * y for x, y in zip(v, a))
        out.append(72 * dot * dot >= 6 * sum(x * x for x in v))
    return out


def cor54_slope_floor(build: Cor54Build, member: int) -> float:
    """0.5 * min over the two generators of log(l1/l3): a lower bound for the
    sigma_1/sigma_3 slope per unit of word length."""
    D = build.diag_letters[member]
    ctx = build.field.ctx
    d = [abs(x) for x in D.diagonal()]
    a = float(ctx.log(max(d) / min(d)))
    b = float(2 * build.r * ctx.log(10))
    return 0.5 * min(a, b)
