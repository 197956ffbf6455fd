"""Contraction dynamics of biproximal matrices on projective space.

For ``g = h diag(k1, A, kn) h^{-1}`` we use the following names:

* ``g+ = [h e1]`` and ``g- = [h en]`` (attracting points of g and g^{-1});
* ``H+ = span(h e2, ..., h en)``: positive powers push everything off H+
  towards g+;  ``H- = span(h e1, ..., h e_{n-1})`` plays that role for g^{-1};
* ``domain(+1, t)`` is the complement of the t-neighbourhood of H+, where
  positive powers contract; ``domain(-1, t)`` likewise for negative powers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

from .localfield import Field
from .matlin import EigenModuli, Matrix, cond_C, eigen_moduli, mat_norm
from .projgeom import (Ball, Flag, HyperComplement, Hyperplane, Intersection, ProjPoint,
                       contains, dist_to_hyperplane, normalize, proj_dist, random_vector,
                       sample, set_margin, _padic_unit_scale)


class GateError(ValueError):
    """A hypothesis of a contraction estimate does not hold."""


class TransversalityError(ValueError):
    """Flags are not transverse enough for the requested margin."""


def _mp(field: Field, x: Any) -> Any:
    """Real number as an mpf of the field's context (exact Fractions converted)."""
    ctx = field.ctx
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / x.denominator
    return ctx.mpf(x)


# ---------------------------------------------------------------------------
# proximality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttractingData:
    plus: ProjPoint
    repelling_plus: Hyperplane   # H+, avoided by the basin of g+
    minus: ProjPoint
    repelling_minus: Hyperplane  # H-, avoided by the basin of g-


@dataclass(frozen=True)
class ProximalityProfile:
    moduli: EigenModuli
    proximal: frozenset
    biproximal: frozenset
    attracting: AttractingData | None


def _kernel_vector(field: Field, M: Matrix, depth: int | None = None) -> tuple:
    """A nonzero vector in the (numerical) kernel of M.

    Archimedean: the right singular vector of the smallest singular value.
    p-adic: fix the coordinate whose deletion leaves the best conditioned
    system and solve exactly.
    """
    n = M.n
    if field.archimedean:
        ctx = field.ctx
        if field.kind == "complex":
            _, S, V = ctx.svd_c(M.to_mp())
        else:
            _, S, V = ctx.svd_r(M.to_mp())
        k = min(range(n), key=lambda i: S[i])
        return tuple(field.conj(V[k, j]) for j in range(n))
    best = None
    for j in range(n):
        idx = [i for i in range(n) if i != j]
        for drop in range(n):
            rows = [i for i in range(n) if i != drop]
            sub = Matrix(field, ([M.rows[i][k] for k in idx] for i in rows))
            d = sub.det()
            if d != 0:
                v = field.val(d)
                if best is None or v < best[0]:
                    best = (v, j, rows, sub)
    if best is None:
        raise ValueError("kernel is more than one dimensional")
    _, j, rows, sub = best
    idx = [i for i in range(n) if i != j]
    sol = sub.solve(tuple(-M.rows[i][j] for i in rows))
    v = [field.one] * n
    for k, x in zip(idx, sol):
        v[k] = field.truncate(x, depth) if depth else x
    return tuple(v)


def _padic_extreme_root(field: Field, A: Matrix, top: bool, depth: int) -> Fraction:
    from .spectral import charpoly, hensel_refine

    chi = charpoly(A)
    c = chi.coeffs
    nz = [i for i, x in enumerate(c) if x != 0]
    # a simple root of extreme valuation sits on an end segment of length 1
    if top:
        i, j = nz[-2], nz[-1]
    else:
        i, j = nz[0], nz[1]
    x0 = -c[i] / c[j] if j - i == 1 else c[i]
    return hensel_refine(chi, x0, depth)


def proximality_profile(g: Matrix, tol: Any = None) -> ProximalityProfile:
    """Which gaps l_j > l_{j+1} hold; attracting data when 1-biproximal."""
    f = g.field
    mods = eigen_moduli(g)
    n = g.n
    if f.archimedean:
        tol = f.tolerance(4) if tol is None else tol
        prox = {j for j in range(1, n) if mods.logs[j - 1] - mods.logs[j] > f.ctx.log1p(tol)}
    else:
        prox = {j for j in range(1, n) if mods.valuations[j - 1] < mods.valuations[j]}
    biprox = frozenset(j for j in prox if (n - j) in prox)
    attracting = None
    if 1 in biprox:
        attracting = _attracting_data(g)
    return ProximalityProfile(mods, frozenset(prox), biprox, attracting)


def _attracting_data(g: Matrix) -> AttractingData:
    f = g.field
    n = g.n
    ident = Matrix.identity(f, n)
    if f.archimedean:
        ctx = f.ctx
        E, ER = ctx.eig(g.to_mp(), left=False, right=True)
        order = sorted(range(n), key=lambda i: -ctx.fabs(E[i]))
        top, bot = E[order[0]], E[order[-1]]
    else:
        depth = f.spec.precision
        top = _padic_extreme_root(f, g, True, depth)
        bot = _padic_extreme_root(f, g, False, depth)

    def right(lam: Any) -> tuple:
        return _kernel_vector(f, g - ident.scale(lam))

    def left_conormal(lam: Any) -> tuple:
        # y g = lam y  <=>  g^T y = lam y ; hyperplane {u : y u = 0} has conormal conj(y)
        y = _kernel_vector(f, g.T - ident.scale(lam))
        return tuple(f.conj(x) for x in y)

    plus = ProjPoint(f, normalize(f, right(top)))
    minus = ProjPoint(f, normalize(f, right(bot)))
    return AttractingData(plus, Hyperplane.of(f, left_conormal(top)),
                          minus, Hyperplane.of(f, left_conormal(bot)))


# ---------------------------------------------------------------------------
# biproximal normal form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BiproximalForm:
    """g = h diag(kappa1, A, kappan) h^{-1}."""

    h: Matrix
    kappa1: Any
    A: Matrix
    kappan: Any
    check: bool = True
    _cache: dict = dc_field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.A.n + 2 != self.h.n:
            raise ValueError("middle block has the wrong size")
        if self.check:
            self.validate()

    @property
    def field(self) -> Field:
        return self.h.field

    @property
    def n(self) -> int:
        return self.h.n

    def validate(self) -> None:
        f = self.field
        k1, kn = f.abs(self.kappa1), f.abs(self.kappan)
        if kn == 0:
            raise GateError("kappa_n must be nonzero")
        if self.A.n:
            A_inv = self.A.inv()
            l1 = eigen_moduli(self.A).values()[0]
            l1_inv = eigen_moduli(A_inv).values()[0]
            ok1 = k1 > max(mat_norm(self.A), l1)
            ok2 = 1 / kn > max(mat_norm(A_inv), l1_inv)
        else:
            ok1 = ok2 = k1 > kn
        if not (ok1 and ok2):
            raise GateError("kappa_1 / kappa_n do not dominate the middle block")

    @property
    def h_inv(self) -> Matrix:
        if "h_inv" not in self._cache:
            self._cache["h_inv"] = self.h.inv()
        return self._cache["h_inv"]

    def diagonal_part(self) -> Matrix:
        f = self.field
        return Matrix.block_diag(f, [Matrix.diag(f, [self.kappa1]), self.A,
                                     Matrix.diag(f, [self.kappan])])

    def matrix(self) -> Matrix:
        if "g" not in self._cache:
            self._cache["g"] = self.h @ self.diagonal_part() @ self.h_inv
        return self._cache["g"]

    def power(self, p: int) -> Matrix:
        """g^p through the factorization (accurate for large |p|)."""
        return self.h @ (self.diagonal_part() ** p) @ self.h_inv

    def C(self) -> Any:
        if "C" not in self._cache:
            self._cache["C"] = cond_C(self.h)
        return self._cache["C"]

    @property
    def plus(self) -> ProjPoint:
        return ProjPoint(self.field, normalize(self.field, self.h.col(0)))

    @property
    def minus(self) -> ProjPoint:
        return ProjPoint(self.field, normalize(self.field, self.h.col(self.n - 1)))

    def _row_conormal(self, i: int) -> Hyperplane:
        f = self.field
        return Hyperplane.of(f, tuple(f.conj(x) for x in self.h_inv.rows[i]))

    @property
    def repelling_plus(self) -> Hyperplane:
        """H+ = h(e1^perp)."""
        return self._row_conormal(0)

    @property
    def repelling_minus(self) -> Hyperplane:
        """H- = h(en^perp)."""
        return self._row_conormal(self.n - 1)

    def flags(self) -> tuple[Flag, Flag]:
        """Incident flags (g+, H-) and (g-, H+)."""
        return Flag(self.plus, self.repelling_minus), Flag(self.minus, self.repelling_plus)

    def domain(self, sign: int, theta: Any) -> HyperComplement:
        return HyperComplement(self.repelling_plus if sign > 0 else self.repelling_minus, theta)

    def both_domains(self, theta: Any) -> Intersection:
        return Intersection((self.domain(1, theta), self.domain(-1, theta)))

    def transversality(self) -> Any:
        """min{dist(g+, H+), dist(g-, H-)} via the dot-product bound."""
        return min(dist_to_hyperplane(self.plus, self.repelling_plus).lower_bound,
                   dist_to_hyperplane(self.minus, self.repelling_minus).lower_bound)

    def middle_norms(self) -> tuple[Any, Any]:
        """(||A||, ||A^{-1}||); for an empty block (|kn|, |k1|^{-1})."""
        f = self.field
        if self.A.n:
            return mat_norm(self.A), mat_norm(self.A.inv())
        return f.abs(self.kappan), 1 / f.abs(self.kappa1)


# ---------------------------------------------------------------------------
# Lipschitz constant and norm floor
# ---------------------------------------------------------------------------

def lipschitz_certificate(form: BiproximalForm, theta: Any, p: int) -> tuple[Any, Any]:
    """(L, norm_floor) for g^{+-p} acting on the theta-domains.

    L = 4 C(h)^4 / theta^2 * max{|k1|^-1 ||A||, |kn| ||A^-1||}^|p|
    floor = 2 theta / C(h)^2 * min{|k1|, |kn|^-1}^|p|
    """
    if not theta > 0:
        raise GateError("theta must be positive")
    f = form.field
    if f.archimedean:
        theta = _mp(f, theta)
    C = form.C()
    a, b = form.middle_norms()
    k1, kn = f.abs(form.kappa1), f.abs(form.kappan)
    q = abs(p)
    contraction = max(a / k1, kn * b)
    L = 4 * C ** 4 / theta ** 2 * contraction ** q
    floor = 2 * theta / C ** 2 * min(k1, 1 / kn) ** q
    return L, floor


@dataclass
class LipschitzTrial:
    pairs: int = 0
    violations: int = 0
    floor_checks: int = 0
    floor_violations: int = 0
    worst_ratio: float = 0.0     # max of d(g x, g y) / (L d(x, y))
    worst_floor: float = math.inf  # min of ||g^p v|| / (floor ||v||)


def lipschitz_trial(form: BiproximalForm, theta: Any, powers: Iterable[int], pairs: int,
                    rng: np.random.Generator, trial: LipschitzTrial | None = None) -> LipschitzTrial:
    """Sample point pairs in the theta-domains and test L and the norm floor.

    Pairs mix independent draws with close pairs (the regime where the
    Lipschitz ratio is largest).  Archimedean comparisons allow a relative
    slack of 2^(-precision/2).
    """
    f = form.field
    trial = trial or LipschitzTrial()
    slack = 1 + f.tolerance(2) if f.archimedean else 1
    ginv_cache: dict[int, Matrix] = {}
    for p in powers:
        if p == 0:
            continue
        sign = 1 if p > 0 else -1
        gp = ginv_cache.setdefault(p, form.power(p))
        L, floor = lipschitz_certificate(form, theta, p)
        dom = form.domain(sign, theta)
        xs = sample(dom, pairs, rng)
        for k, x in enumerate(xs):
            if k % 2:
                y = sample(dom, 1, rng)[0]
            else:
                y = _nearby_in(dom, x, rng)
            d = proj_dist(x, y)
            gx, gy = gp.apply(x.vec), gp.apply(y.vec)
            trial.pairs += 1
            if d != 0:
                dg = proj_dist(ProjPoint(f, normalize(f, gx)), ProjPoint(f, normalize(f, gy)))
                ratio = _mp(f, dg) / (_mp(f, L) * _mp(f, d))
                trial.worst_ratio = max(trial.worst_ratio, float(ratio))
                if dg > L * d * slack:
                    trial.violations += 1
            for v, gv in ((x.vec, gx), (y.vec, gy)):
                trial.floor_checks += 1
                lhs = f.vec_norm(gv)
                rhs = floor * f.vec_norm(v)
                trial.worst_floor = min(trial.worst_floor, float(_mp(f, lhs) / _mp(f, rhs)))
                if lhs * slack < rhs:
                    trial.floor_violations += 1
    return trial


def _nearby_in(dom: HyperComplement, x: ProjPoint, rng: np.random.Generator) -> ProjPoint:
    from .projgeom import sample_near

    f = x.field
    for _ in range(64):
        scale = (f.ctx.mpf(10) ** (-int(rng.integers(1, 12)))) if f.archimedean else \
            Fraction(f.prime) ** (-int(rng.integers(1, 40)))
        y = sample_near(x, scale, rng)
        if contains(dom, y):
            return y
    return x


# ---------------------------------------------------------------------------
# perturbation gate and certificate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateResult:
    ok: bool
    failing: str | None
    details: dict

    def __bool__(self) -> bool:
        return self.ok


def perturb1_gate(form: BiproximalForm, alpha: Any, eps: Any, delta: Any) -> GateResult:
    """The four hypotheses of the perturbed contraction estimate, in order:
    range (0 < delta <= eps/100), transversality, condition (1), condition (2).
    """
    f = form.field
    ctx = f.ctx
    E = ctx.exp(_mp(f, alpha) + 8)
    eps_m, delta_m = _mp(f, eps), _mp(f, delta)
    C = _mp(f, form.C())
    a, b = form.middle_norms()
    k1, kn = _mp(f, f.abs(form.kappa1)), _mp(f, f.abs(form.kappan))
    a, b = _mp(f, a), _mp(f, b)
    trans = _mp(f, form.transversality())
    lhs1 = min(k1 / a, 1 / (kn * b))
    rhs1 = 10 ** 6 * E / (eps_m ** 2 * delta_m) * C ** 4
    lhs2 = min(k1, 1 / kn)
    rhs2 = 10 ** 3 * E / eps_m * C ** 2
    details = {"transversality": trans, "condition1": (lhs1, rhs1),
               "condition2": (lhs2, rhs2), "C(h)": C}
    gates = [
        ("range", 0 < delta and delta <= eps / 100),
        ("transversality", eps_m <= trans),
        ("condition1", lhs1 >= rhs1),
        ("condition2", lhs2 >= rhs2),
    ]
    for name, ok in gates:
        if not ok:
            return GateResult(False, name, details)
    return GateResult(True, None, details)


@dataclass
class ContractionCertificate:
    lipschitz_constant: Any
    norm_growth_base: Any
    radius_delta: Any
    rate_alpha: Any
    neighborhood_radius: Any
    verified_samples: int = 0
    failures: int = 0
    checks: int = 0
    min_ball_slack: Any = None
    min_log_growth_slack: Any = None
    witness: dict | None = None
    powers: tuple = ()
    seed: int | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.verified_samples > 0

    def to_json(self, field: Field) -> dict:
        conv = lambda x: None if x is None else field.to_json(x) if not isinstance(x, float) else repr(x)
        return {
            "lipschitz_constant": conv(self.lipschitz_constant),
            "norm_growth_base": conv(self.norm_growth_base),
            "radius_delta": conv(self.radius_delta),
            "rate_alpha": conv(self.rate_alpha),
            "neighborhood_radius": conv(self.neighborhood_radius),
            "verified_samples": self.verified_samples,
            "checks": self.checks,
            "failures": self.failures,
            "min_ball_slack": conv(self.min_ball_slack),
            "min_log_growth_slack": conv(self.min_log_growth_slack),
            "witness": self.witness,
            "powers": list(self.powers),
            "seed": self.seed,
        }


def random_unit_matrix(field: Field, n: int, rng: np.random.Generator) -> Matrix:
    """Random matrix of norm exactly 1 (operator norm, or max entry for p-adic)."""
    R = Matrix(field, (random_vector(field, n, rng) for _ in range(n)))
    nrm = mat_norm(R)
    if nrm == 0:
        return Matrix.identity(field, n)
    if field.archimedean:
        return R.scale(1 / nrm)
    # nrm = p^k exactly; the rational scalar p^k has p-adic size p^-k
    return R.scale(nrm)


def _strict_scale(field: Field, radius: Any, rng: np.random.Generator) -> Any:
    """A random size t with 0 < t < radius."""
    if field.archimedean:
        t = field.ctx.mpf(float(rng.uniform(0.05, 1.0))) * radius
        if int(rng.integers(0, 4)) == 0:
            t = t * field.ctx.mpf(10) ** (-int(rng.integers(1, 8)))
        return t
    t = _padic_unit_scale(field, radius)  # |t|_p <= radius
    if not field.abs(t) < radius:
        t *= field.prime
    return t * field.prime ** int(rng.integers(0, 4))


def sample_near_identity(field: Field, n: int, radius: Any, rng: np.random.Generator) -> Matrix:
    """w with ||w - I|| < radius and ||w^{-1} - I|| < radius (re-checked)."""
    ident = Matrix.identity(field, n)
    for _ in range(1000):
        t = _strict_scale(field, radius, rng)
        if field.archimedean:
            t = t / 2
        w = ident + random_unit_matrix(field, n, rng).scale(t)
        if mat_norm(w - ident) < radius and mat_norm(w.inv() - ident) < radius:
            return w
    raise RuntimeError("could not sample a matrix near the identity")


def sample_additive(g: Matrix, radius: Any, rng: np.random.Generator) -> Matrix:
    """g' with ||g' - g|| < radius (strict)."""
    f = g.field
    for _ in range(1000):
        E = random_unit_matrix(f, g.n, rng).scale(_strict_scale(f, radius, rng))
        if mat_norm(E) < radius:
            return g + E
    raise RuntimeError("could not sample a perturbation")


def verify_contraction(form: BiproximalForm, alpha: Any, eps: Any, delta: Any,
                       powers: Sequence[int] = tuple(range(-6, 7)), samples: int = 100,
                       seed: int = 0, additive_radius: Any = None,
                       g_center: Matrix | None = None) -> ContractionCertificate:
    """Sampled check of the perturbed contraction estimate.

    g' is drawn from g U_delta, or from the additive ball of ``additive_radius``
    around g when given (each draw is then also confirmed to lie in g U_delta).
    Points come from M_eps(g); for every p != 0 in ``powers`` we require
    [(g')^p x] in B_delta(g+) or B_delta(g-), and ||(g')^p x|| >= e^(alpha|p|) ||x||.
    """
    gate = perturb1_gate(form, alpha, eps, delta)
    if not gate:
        raise GateError(f"gate '{gate.failing}' fails")
    f = form.field
    ctx = f.ctx
    g = g_center if g_center is not None else form.matrix()
    g_inv = g.inv()
    n = g.n
    rng = np.random.default_rng(seed)
    U_radius = delta / 10
    L, _ = lipschitz_certificate(form, eps, 1)
    cert = ContractionCertificate(L, ctx.exp(_mp(f, alpha)), delta, alpha, U_radius,
                                  powers=tuple(powers), seed=seed)
    balls = (Ball(form.plus, delta), Ball(form.minus, delta))
    ident = Matrix.identity(f, n)
    region = form.both_domains(eps)
    alpha_m = _mp(f, alpha)
    pos = sorted(p for p in powers if p > 0)
    neg = sorted((-p for p in powers if p < 0))
    for _ in range(samples):
        if additive_radius is None:
            w = sample_near_identity(f, n, U_radius, rng)
            gp = g @ w
        else:
            gp = sample_additive(g, additive_radius, rng)
            w = g_inv @ gp
            if not (mat_norm(w - ident) < U_radius and mat_norm(w.inv() - ident) < U_radius):
                cert.failures += 1
                cert.witness = cert.witness or {"reason": "additive draw outside g U_delta"}
                continue
        x = sample(region, 1, rng)[0]
        xn = f.vec_norm(x.vec)
        gp_inv = gp.inv() if neg else None
        for direction, ks, M in ((1, pos, gp), (-1, neg, gp_inv)):
            v = x.vec
            k_prev = 0
            for k in ks:
                for _ in range(k - k_prev):
                    v = M.apply(v)
                k_prev = k
                cert.checks += 1
                y = ProjPoint(f, normalize(f, v))
                slack = max(_mp(f, set_margin(B, y)) for B in balls)
                growth = ctx.log(_mp(f, f.vec_norm(v))) - ctx.log(_mp(f, xn)) - alpha_m * k
                cert.min_ball_slack = slack if cert.min_ball_slack is None else min(cert.min_ball_slack, slack)
                cert.min_log_growth_slack = growth if cert.min_log_growth_slack is None else \
                    min(cert.min_log_growth_slack, growth)
                if slack < 0 or growth < 0:
                    cert.failures += 1
                    if cert.witness is None:
                        cert.witness = {"power": direction * k, "point": [f.to_json(c) for c in x.vec],
                                        "ball_slack": f.to_json(slack), "log_growth_slack": f.to_json(growth)}
        cert.verified_samples += 1
    return cert


# ---------------------------------------------------------------------------
# Schottky generators
# ---------------------------------------------------------------------------

def null_space(field: Field, rows: Sequence[Sequence[Any]]) -> list[tuple]:
    """Basis of {u : sum_j r_j u_j = 0 for every row r} (exact / pivoted)."""
    n = len(rows[0])
    a = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(n):
        if r >= len(a):
            break
        if field.archimedean:
            piv = max(range(r, len(a)), key=lambda i: field.abs(a[i][c]))
            if field.abs(a[piv][c]) <= field.tolerance(1):
                continue
        else:
            cand = [i for i in range(r, len(a)) if a[i][c] != 0]
            if not cand:
                continue
            piv = cand[0]
        a[r], a[piv] = a[piv], a[r]
        pv = a[r][c]
        a[r] = [x / pv for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                m = a[i][c]
                a[i] = [x - m * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        u = [field.zero] * n
        u[fc] = field.one
        for i, pc in enumerate(pivots):
            u[pc] = -a[i][fc]
        basis.append(tuple(u))
    return basis


def frame_from_flags(a: Flag, b: Flag) -> Matrix:
    """h with [h e1] = a.point, [h en] = b.point, span(h e1..e_{n-1}) = a.hyperplane
    and span(h e2..en) = b.hyperplane."""
    f = a.point.field
    if not a.transverse_to(b):
        raise TransversalityError("flags are not transverse")
    rows = [tuple(f.conj(x) for x in a.hyperplane.conormal),
            tuple(f.conj(x) for x in b.hyperplane.conormal)]
    middle = null_space(f, rows)
    cols = [a.point.vec] + middle + [b.point.vec]
    return Matrix.from_columns(f, cols)


def non2q_middle(field: Field, n: int, kappa: Any, xi: Any = None) -> tuple[Any, Matrix, Any]:
    """(first, middle block, last) of the eigenvalue pattern with forced equal moduli.

    p-adic, n = 2d or 2d+1:
      diag(k^d, k^(d-1), 1+k^(d-1), ..., k, 1+k, [1], k^-d prod (k^i + k^2i)^-1)
    real, n = 2d+2 or 2d+3:
      diag(t, R_xi, ..., R_xi^d, t^-1) or diag(t, 2R_xi, ..., 2R_xi^d, 2^-d, t^-1)
    """
    if n < 4:
        raise ValueError("the pattern needs n >= 4")
    if not field.archimedean:
        d = n // 2
        entries = []
        prod = Fraction(1)
        for i in range(d - 1, 0, -1):
            entries += [kappa ** i, 1 + kappa ** i]
        for i in range(1, d):
            prod *= kappa ** i + kappa ** (2 * i)
        if n % 2:
            entries.append(field.one)
        last = kappa ** (-d) / prod
        return kappa ** d, Matrix.diag(field, entries), last
    if field.kind != "real":
        raise ValueError("the archimedean pattern is real")
    ctx = field.ctx
    xi = ctx.mpf("0.1234567891") if xi is None else _mp(field, xi)
    odd = n % 2 == 1
    d = (n - 3) // 2 if odd else (n - 2) // 2
    blocks = []
    for m in range(1, d + 1):
        c, s = ctx.cos(xi ** m), ctx.sin(xi ** m)
        r = Matrix(field, [[c, -s], [s, c]])
        blocks.append(r.scale(2) if odd else r)
    if odd:
        blocks.append(Matrix.diag(field, [ctx.mpf(2) ** (-d)]))
    return kappa, Matrix.block_diag(field, blocks), 1 / kappa


@dataclass(frozen=True)
class SchottkyGenerator:
    form: BiproximalForm
    radius: Any
    eps: Any
    delta: Any
    gate: GateResult

    @property
    def matrix(self) -> Matrix:
        return self.form.matrix()


def make_schottky_family(flags: Sequence[Flag], alpha: Any, eps: Any, non2q: bool = False,
                         max_doublings: int = 4000) -> list[SchottkyGenerator]:
    """Biproximal generators with prescribed flags passing the contraction gate.

    ``flags`` holds 2m incident flags; generator i has attracting flag
    flags[2i] (point g+, hyperplane H-) and repelling flag flags[2i+1]
    (point g-, hyperplane H+).  Different flags must be transverse with
    margin > eps.  kappa grows through powers of 2 (archimedean) or of
    1/p (p-adic) until the gate passes at (alpha, eps', eps'/100) where eps'
    is eps shrunk to the generator's own transversality.
    """
    if len(flags) % 2 or not flags:
        raise ValueError("need an even, nonzero number of flags")
    f = flags[0].point.field
    n = flags[0].point.n
    for i, a in enumerate(flags):
        for b in flags[i + 1:]:
            if not a.margin_to(b) > eps:
                raise TransversalityError("flags are not transverse beyond eps")
    out = []
    for i in range(0, len(flags), 2):
        h = frame_from_flags(flags[i], flags[i + 1])
        use_pattern = non2q and i == 0 and n >= 4 and f.kind in ("padic", "real")
        base = Fraction(1, f.prime) if not f.archimedean else f.ctx.mpf(2)
        kappa = base
        for _ in range(max_doublings):
            if use_pattern:
                k1, A, kn = non2q_middle(f, n, kappa)
            else:
                k1, A, kn = kappa, Matrix.identity(f, n - 2), 1 / kappa
            try:
                form = BiproximalForm(h, k1, A, kn)
            except GateError:
                kappa = kappa * base
                continue
            eps_i = min(eps, form.transversality())
            if not f.archimedean:
                eps_i = _floor_power(f, eps_i)
            delta_i = eps_i / 100
            gate = perturb1_gate(form, alpha, eps_i, delta_i)
            if gate:
                g_inv = form.power(-1)
                radius = delta_i / (40 * mat_norm(g_inv))
                out.append(SchottkyGenerator(form, radius, eps_i, delta_i, gate))
                break
            kappa = kappa * base
        else:
            raise GateError("no kappa made the contraction gate pass")
    return out


def _floor_power(field: Field, x: Any) -> Fraction:
    """Largest real number p^-k <= x (a radius, not a field element)."""
    t = Fraction(1)
    x = Fraction(x)
    while t > x:
        t /= field.prime
    return t
