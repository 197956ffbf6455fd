"""Projective space P(k^n): the metric, hyperplanes, flags and point sets.

Archimedean points are unit vectors; p-adic points are scaled so that the
first entry of largest modulus equals 1, which makes the representative
canonical.  Over Q_p the distance ``min_{|z|=1} ||z u - v||`` equals the
cross formula ``max_{i<j} |u_i v_j - u_j v_i|`` for unit u, v; that is what
:func:`proj_dist` evaluates.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterator, Sequence

import numpy as np

from .localfield import Field
from .matlin import Matrix


class SamplingBudgetError(RuntimeError):
    """Rejection sampling ran out of draws (the set is too thin or empty)."""


def normalize(field: Field, v: Sequence[Any]) -> tuple:
    if all(x == 0 for x in v):
        raise ValueError("the zero vector has no projective class")
    if field.archimedean:
        nrm = field.vec_norm(v)
        return tuple(x / nrm for x in v)
    k = min(range(len(v)), key=lambda i: (field.val(v[i]), i))
    pivot = v[k]
    return tuple(x / pivot for x in v)


@dataclass(frozen=True)
class ProjPoint:
    field: Field
    vec: tuple

    @classmethod
    def of(cls, field: Field, v: Sequence[Any]) -> "ProjPoint":
        return cls(field, normalize(field, [field.convert(x) if isinstance(x, (int, str, Fraction)) else x
                                            for x in v]))

    @property
    def n(self) -> int:
        return len(self.vec)

    def image(self, g: Matrix) -> "ProjPoint":
        return ProjPoint(self.field, normalize(self.field, g.apply(self.vec)))


@dataclass(frozen=True)
class Hyperplane:
    """v^perp = {u : u . v = 0}, stored through its normalized conormal v."""

    field: Field
    conormal: tuple

    @classmethod
    def of(cls, field: Field, v: Sequence[Any]) -> "Hyperplane":
        return cls(field, ProjPoint.of(field, v).vec)

    @classmethod
    def spanned_by(cls, field: Field, vectors: Sequence[Sequence[Any]]) -> "Hyperplane":
        """Hyperplane spanned by n-1 independent vectors (conormal via cofactors)."""
        n = len(vectors[0])
        if len(vectors) != n - 1:
            raise ValueError("need n-1 spanning vectors")
        conormal = []
        for i in range(n):
            cols = [k for k in range(n) if k != i]
            minor = Matrix(field, ([v[k] for k in cols] for v in vectors)).det() if n > 1 else field.one
            conormal.append(field.conj((-1) ** i * minor))
        return cls.of(field, conormal)

    def contains_vector(self, u: Sequence[Any], tol: Any = None) -> bool:
        d = self.field.dot(u, self.conormal)
        if not self.field.archimedean:
            return d == 0
        tol = self.field.tolerance(2) if tol is None else tol
        return self.field.abs(d) <= tol * self.field.vec_norm(u)


@dataclass(frozen=True)
class Flag:
    """A (point, hyperplane) pair; ``incident`` records whether point lies in it."""

    point: ProjPoint
    hyperplane: Hyperplane

    @property
    def incident(self) -> bool:
        return self.hyperplane.contains_vector(self.point.vec)

    def transverse_to(self, other: "Flag") -> bool:
        """Neither point lies in the other's hyperplane."""
        return (dist_to_hyperplane(self.point, other.hyperplane).lower_bound > 0
                and dist_to_hyperplane(other.point, self.hyperplane).lower_bound > 0)

    def margin_to(self, other: "Flag") -> Any:
        return min(dist_to_hyperplane(self.point, other.hyperplane).lower_bound,
                   dist_to_hyperplane(other.point, self.hyperplane).lower_bound)


# ---------------------------------------------------------------------------
# metric
# ---------------------------------------------------------------------------

def _check_dims(x: ProjPoint, y: ProjPoint) -> None:
    if x.n != y.n:
        raise ValueError(f"dimension mismatch: {x.n} vs {y.n}")


def proj_dist(x: ProjPoint, y: ProjPoint) -> Any:
    _check_dims(x, y)
    f = x.field
    u, v = x.vec, y.vec
    if f.archimedean:
        ctx = f.ctx
        s = f.dot(v, u)
        if s == 0:
            zeta = f.one
        else:
            zeta = s / ctx.fabs(s)
        return f.vec_norm([zeta * a - b for a, b in zip(u, v)])
    best = Fraction(0)
    n = len(u)
    for i in range(n):
        for j in range(i + 1, n):
            c = u[i] * v[j] - u[j] * v[i]
            if c != 0:
                a = f.abs(c)
                if a > best:
                    best = a
    return best


@dataclass(frozen=True)
class HyperplaneDistance:
    distance: Any
    lower_bound: Any


def hyperplane_bound(x: ProjPoint, V: Hyperplane) -> Any:
    """|x . v| / (||x|| ||v||) for the normalized representatives."""
    f = x.field
    return f.abs(f.dot(x.vec, V.conormal))


def dist_to_hyperplane(x: ProjPoint, V: Hyperplane) -> HyperplaneDistance:
    """Distance from x to P(V) together with the dot-product lower bound.

    Archimedean: project x orthogonally onto V and measure the distance to
    that point (if x is parallel to the conormal every point of V is at
    distance sqrt 2).  p-adic: the bound is attained, so both numbers agree.
    """
    _check_dims(x, ProjPoint(x.field, V.conormal))
    f = x.field
    c = hyperplane_bound(x, V)
    if not f.archimedean:
        return HyperplaneDistance(c, c)
    s = f.dot(x.vec, V.conormal)
    proj = [a - s * b for a, b in zip(x.vec, V.conormal)]
    if f.vec_norm(proj) <= f.tolerance(2):
        d = f.ctx.sqrt(2)
    else:
        d = proj_dist(x, ProjPoint(f, normalize(f, proj)))
    if c > d * (1 + f.tolerance(2)):
        raise AssertionError("hyperplane lower bound exceeds the distance")
    return HyperplaneDistance(d, c)


def padic_hyperplane_witness(x: ProjPoint, V: Hyperplane) -> ProjPoint:
    """A point of P(V) at distance |x . v| from x (p-adic)."""
    f = x.field
    a = V.conormal
    k = min(range(len(a)), key=lambda i: (f.val(a[i]), i))
    s = f.dot(x.vec, a)
    u = list(x.vec)
    u[k] -= s / a[k]
    return ProjPoint(f, normalize(f, u))


def hyperplane_excess(W: Hyperplane, V: Hyperplane) -> Any:
    """sup over points of P(W) of their distance to P(V).

    Archimedean: with c = sin of the angle between conormals the supremum is
    c sqrt(2/(1+sqrt(1-c^2))).  p-adic: the cross distance of the conormals.
    """
    f = W.field
    if not f.archimedean:
        return proj_dist(ProjPoint(f, W.conormal), ProjPoint(f, V.conormal))
    ctx = f.ctx
    cos = f.abs(f.dot(W.conormal, V.conormal))
    c = ctx.sqrt(max(f.zero, 1 - cos * cos))
    s = ctx.sqrt(max(f.zero, 1 - c * c))
    return c * ctx.sqrt(2 / (1 + s))


# ---------------------------------------------------------------------------
# point sets
# ---------------------------------------------------------------------------

def _as_radius(field: Field, r: Any) -> Any:
    """Radii are real numbers: Fractions for Q_p, mpf in the field context otherwise."""
    if field.archimedean:
        return field.convert(r) if isinstance(r, (int, Fraction, str)) else r
    return r if isinstance(r, Fraction) else Fraction(r)


@dataclass(frozen=True)
class Ball:
    """Closed ball B_r(center)."""

    center: ProjPoint
    radius: Any

    def __post_init__(self) -> None:
        object.__setattr__(self, "radius", _as_radius(self.center.field, self.radius))
        if not self.radius > 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class HyperComplement:
    """Points whose hyperplane lower bound is >= margin (complement of N_margin)."""

    hyperplane: Hyperplane
    margin: Any

    def __post_init__(self) -> None:
        object.__setattr__(self, "margin", _as_radius(self.hyperplane.field, self.margin))
        if not self.margin > 0:
            raise ValueError("margin must be positive")


@dataclass(frozen=True)
class Intersection:
    parts: tuple


ProjSet = Ball | HyperComplement | Intersection


def contains(S: ProjSet, x: ProjPoint) -> bool:
    if isinstance(S, Ball):
        return proj_dist(S.center, x) <= S.radius
    if isinstance(S, HyperComplement):
        return hyperplane_bound(x, S.hyperplane) >= S.margin
    if isinstance(S, Intersection):
        return all(contains(P, x) for P in S.parts)
    raise TypeError(f"not a point set: {S!r}")


def set_margin(S: ProjSet, x: ProjPoint) -> Any:
    """Signed slack of membership: >= 0 iff x is in S."""
    if isinstance(S, Ball):
        return S.radius - proj_dist(S.center, x)
    if isinstance(S, HyperComplement):
        return hyperplane_bound(x, S.hyperplane) - S.margin
    if isinstance(S, Intersection):
        return min(set_margin(P, x) for P in S.parts)
    raise TypeError(f"not a point set: {S!r}")


def _field_of(S: ProjSet) -> tuple[Field, int]:
    if isinstance(S, Ball):
        return S.center.field, S.center.n
    if isinstance(S, HyperComplement):
        return S.hyperplane.field, len(S.hyperplane.conormal)
    return _field_of(S.parts[0])


def _first_ball(S: ProjSet) -> Ball | None:
    if isinstance(S, Ball):
        return S
    if isinstance(S, Intersection):
        for P in S.parts:
            b = _first_ball(P)
            if b is not None:
                return b
    return None


def random_element(field: Field, rng: np.random.Generator, scale: Any = None) -> Any:
    """Gaussian (archimedean) or random digits to the field depth (p-adic)."""
    if field.archimedean:
        ctx = field.ctx
        x = ctx.mpf(float(rng.standard_normal()))
        if field.kind == "complex":
            x = ctx.mpc(x, float(rng.standard_normal()))
        return x if scale is None else x * scale
    p, depth = field.prime, field.spec.precision
    digits = int.from_bytes(rng.bytes((depth * p.bit_length() + 7) // 8), "little") % p ** depth
    return Fraction(digits) if scale is None else Fraction(digits) * scale


def random_vector(field: Field, n: int, rng: np.random.Generator, scale: Any = None) -> tuple:
    return tuple(random_element(field, rng, scale) for _ in range(n))


def _padic_unit_scale(field: Field, radius: Any) -> Fraction:
    """p^k with p^-k <= radius, k minimal (k >= 0)."""
    p = field.prime
    k = 0
    while Fraction(p) ** (-k) > radius:
        k += 1
    return Fraction(p) ** k


def _propose(S: ProjSet, field: Field, n: int, rng: np.random.Generator) -> tuple:
    ball = _first_ball(S)
    if ball is None:
        if field.archimedean:
            return random_vector(field, n, rng)
        # spread valuations a little so that not every entry is a unit
        p = field.prime
        return tuple(random_element(field, rng) * Fraction(p) ** int(rng.integers(-2, 3))
                     for _ in range(n))
    c = ball.center.vec
    if field.archimedean:
        ctx = field.ctx
        g = random_vector(field, n, rng)
        gn = field.vec_norm(g)
        t = ball.radius * ctx.mpf(float(rng.random())) ** (ctx.mpf(1) / max(1, n - 1))
        return tuple(a + t * b / gn for a, b in zip(c, g))
    step = _padic_unit_scale(field, ball.radius)
    extra = Fraction(field.prime) ** int(rng.integers(0, 4))
    return tuple(a + b for a, b in zip(c, random_vector(field, n, rng, step * extra)))


def sample(S: ProjSet, count: int, seed: int | np.random.Generator,
           budget: int = 10 ** 6) -> list[ProjPoint]:
    """``count`` points of S by rejection; deterministic for an integer seed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return list(_iter_sample(S, count, rng, budget))


def _iter_sample(S: ProjSet, count: int, rng: np.random.Generator, budget: int) -> Iterator[ProjPoint]:
    field, n = _field_of(S)
    got = draws = 0
    while got < count:
        if draws >= budget:
            raise SamplingBudgetError(f"{draws} draws produced only {got} of {count} points")
        draws += 1
        v = _propose(S, field, n, rng)
        if all(x == 0 for x in v):
            continue
        x = ProjPoint(field, normalize(field, v))
        if contains(S, x):
            got += 1
            yield x


def sample_near(x: ProjPoint, scale: Any, rng: np.random.Generator) -> ProjPoint:
    """A random point within about ``scale`` of x (no membership guarantee)."""
    f = x.field
    if f.archimedean:
        g = random_vector(f, x.n, rng)
        gn = f.vec_norm(g)
        return ProjPoint(f, normalize(f, [a + scale * b / gn for a, b in zip(x.vec, g)]))
    step = _padic_unit_scale(f, scale)
    return ProjPoint(f, normalize(f, [a + b for a, b in zip(x.vec, random_vector(f, x.n, rng, step))]))
