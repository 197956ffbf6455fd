"""p-adic spectral tools: characteristic polynomials, Newton polygons and the
diagonalization of small perturbations of a diagonal matrix.

All arithmetic is exact over Q; Hensel iterates are truncated to a fixed digit
depth to keep numerators from exploding.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

from .localfield import Field, PadicDigits
from .matlin import Matrix, mat_norm


class PreconditionError(ValueError):
    """Inputs fall outside the region where the estimate is claimed."""


class HenselError(ArithmeticError):
    """Newton iteration failed to converge within the digit budget."""


@dataclass(frozen=True)
class Poly:
    """a_0 + a_1 t + ... + a_n t^n."""

    field: Field
    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: Any) -> Any:
        acc = self.field.zero
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> "Poly":
        return Poly(self.field, tuple(i * c for i, c in enumerate(self.coeffs) if i))

    def __sub__(self, other: "Poly") -> "Poly":
        m = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (self.field.zero,) * (m - len(self.coeffs))
        b = other.coeffs + (self.field.zero,) * (m - len(other.coeffs))
        return Poly(self.field, tuple(x - y for x, y in zip(a, b)))

    def norm(self) -> Any:
        """max |a_i|."""
        f = self.field
        return max((f.abs(c) for c in self.coeffs), default=f.zero)


def charpoly(A: Matrix) -> Poly:
    """chi_A(t) = det(A - t I) by Faddeev-LeVerrier."""
    n, f = A.n, A.field
    coeffs = [f.zero] * (n + 1)
    coeffs[n] = f.one  # monic det(tI - A) first
    M = Matrix(f, [[f.zero] * n for _ in range(n)])
    ident = Matrix.identity(f, n)
    for k in range(1, n + 1):
        M = A @ M + ident.scale(coeffs[n - k + 1])
        AM = A @ M
        trace = sum((AM.rows[i][i] for i in range(n)), f.zero)
        coeffs[n - k] = -trace / k
    sign = -1 if n % 2 else 1
    return Poly(f, tuple(sign * c for c in coeffs))


def newton_polygon(f: Poly) -> tuple[Fraction, ...]:
    """Root valuations read off the lower convex hull of (i, val a_i).

    Returned in nondecreasing order, i.e. root moduli ``p^(-v)`` nonincreasing.
    A segment of horizontal length l and slope s contributes l copies of -s.
    """
    field = f.field
    if field.archimedean:
        raise TypeError("Newton polygons need a p-adic field")
    if not f.coeffs or f.coeffs[0] == 0:
        raise ValueError("constant term must be nonzero")
    pts = [(i, field.val(c)) for i, c in enumerate(f.coeffs) if c != 0]
    hull: list[tuple[int, int]] = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or above the chord hull[-2] -> pt
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    vals: list[Fraction] = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slope = Fraction(y2 - y1, x2 - x1)
        vals.extend([-slope] * (x2 - x1))
    return tuple(sorted(vals))


def root_moduli(f: Poly) -> tuple:
    """Moduli p^(-v) of the roots, nonincreasing (Fractions when exact)."""
    p = f.field.prime
    out = []
    for v in newton_polygon(f):
        if v.denominator == 1:
            out.append(Fraction(p) ** (-int(v)))
        else:
            ctx = f.field.ctx
            out.append(ctx.power(p, -ctx.mpf(v.numerator) / v.denominator))
    return tuple(out)


# ---------------------------------------------------------------------------
# perturbation radius
# ---------------------------------------------------------------------------

def _min_gap(field: Field, entries: Sequence[Any]) -> Any:
    gaps = [field.abs(a - b) for i, a in enumerate(entries) for b in entries[i + 1:]]
    return min(gaps)


def theta_bound(C: Matrix, eps: Any, strict: bool = True) -> Any:
    """min{10^-2 min|a_i - a_j|, eps^n ||C||^(1 - 2n^2 - n)} for diagonal C.

    With ``strict`` the hypotheses 0 < eps < 1 and eps < min gap / 2 are
    enforced; ``strict=False`` only evaluates the closed form.
    """
    if not C.is_diagonal():
        raise PreconditionError("C must be diagonal")
    f, n = C.field, C.n
    a = C.diagonal()
    gap = _min_gap(f, a)
    if gap == 0:
        raise PreconditionError("diagonal entries must be pairwise distinct")
    eps = Fraction(eps) if not f.archimedean and not isinstance(eps, Fraction) else eps
    if strict:
        if not 0 < eps < 1:
            raise PreconditionError(f"eps must lie in (0, 1), got {eps}")
        if not eps < gap / 2:
            raise PreconditionError("eps must be smaller than half the minimal gap")
    norm = max(f.abs(x) for x in a)
    second = eps ** n * norm ** (1 - 2 * n * n - n)
    first = gap / 100 if f.archimedean else Fraction(gap) / 100
    return min(first, second)


def charpoly_dist(C: Matrix, C2: Matrix) -> tuple[Any, Any]:
    """(||chi_C - chi_C2||, ||C - C2|| ||C||^(n-1)); raises if lhs > rhs.

    The bound is claimed for ||C|| >= 1 and ||C - C2|| <= ||C||; outside that
    region a :class:`PreconditionError` is raised instead of evaluating.
    """
    if C.field.archimedean or C2.field is not C.field:
        raise TypeError("charpoly_dist compares two p-adic matrices over one field")
    if C.n != C2.n:
        raise ValueError("dimension mismatch")
    nc = mat_norm(C)
    diff = mat_norm(C - C2)
    if nc < 1 or diff > nc:
        raise PreconditionError("need ||C|| >= 1 and ||C - C2|| <= ||C||")
    lhs = (charpoly(C) - charpoly(C2)).norm()
    rhs = diff * nc ** (C.n - 1)
    if lhs > rhs:
        raise AssertionError(f"char-poly bound violated: {lhs} > {rhs}")
    return lhs, rhs


# ---------------------------------------------------------------------------
# Hensel refinement and diagonalization
# ---------------------------------------------------------------------------

def hensel_refine(f: Poly, x0: Any, depth: int, max_steps: int | None = None) -> Fraction:
    """Newton iteration for a simple root near ``x0``, truncated to ``depth``.

    Stops once the update has valuation >= depth.  The result t satisfies
    |t - root| <= p^(-depth) when the iteration converges.
    """
    field = f.field
    df = f.derivative()
    x = Fraction(x0)
    steps = max_steps if max_steps is not None else 2 * max(depth, 8).bit_length() + 16
    for _ in range(steps):
        fx = f(x)
        if fx == 0:
            return field.truncate(x, depth) if x != 0 else x
        d = df(x)
        if d == 0:
            raise HenselError("derivative vanished during Newton iteration")
        step = fx / d
        x = field.truncate(x - step, depth)
        if field.val(step) >= depth:
            return x
    raise HenselError(f"no convergence to depth {depth} within {steps} steps")


@dataclass(frozen=True)
class DiagonalizationResult:
    conjugator: Matrix
    eigenvalues: tuple
    conjugator_defect: Any
    eigen_defect: Any
    residual: Any
    depth: int

    def digits(self) -> tuple[PadicDigits, ...]:
        f = self.conjugator.field
        return tuple(PadicDigits.from_rational(a, f.prime, self.depth) for a in self.eigenvalues)


def _eigenvector(field: Field, C2: Matrix, lam: Fraction, j: int, depth: int) -> tuple:
    """Vector v with v_j = 1 solving the rows i != j of (C2 - lam I) v = 0."""
    n = C2.n
    idx = [i for i in range(n) if i != j]
    M = Matrix(field, ([C2.rows[i][k] - (lam if i == k else 0) for k in idx] for i in idx))
    rhs = tuple(-C2.rows[i][j] for i in idx)
    sol = M.solve(rhs)
    v = [field.one] * n
    for k, x in zip(idx, sol):
        v[k] = field.truncate(x, depth)
    return tuple(v)


def diagonalize_perturbed(C: Matrix, C2: Matrix, eps: Any, depth: int | None = None,
                          max_guard: int = 4096) -> DiagonalizationResult:
    """Write C2 = w diag(a') w^{-1} with w close to I and a' close to diag(C).

    ``C`` is diagonal with distinct entries and ||C - C2|| < theta_bound(C, eps).
    Eigenvalues come from Hensel refinement of chi_C2 started at each a_j;
    eigenvectors solve the kernel equations exactly; the conjugator follows
    w = h' (D_h + D_h')^{-1}.  The residual ||w D w^{-1} - C2|| is driven below
    p^(-depth) by increasing the working depth.
    """
    f = C.field
    if f.archimedean:
        raise TypeError("diagonalize_perturbed is a p-adic algorithm")
    eps = Fraction(eps)
    theta = theta_bound(C, eps)
    if not mat_norm(C - C2) < theta:
        raise PreconditionError("||C - C2|| must be below theta(n, eps, C)")
    depth = f.spec.precision if depth is None else depth
    n, p = C.n, f.prime
    a = C.diagonal()
    chi = charpoly(C2)
    low = min(0, min(f.val(x) for r in C2.rows for x in r if x != 0))
    guard = 8 + 2 * n * (-low)
    target = Fraction(p) ** (-depth)
    while True:
        work = depth + guard
        lams = tuple(hensel_refine(chi, a[j], work) for j in range(n))
        cols = [_eigenvector(f, C2, lams[j], j, work) for j in range(n)]
        # unit-norm columns: divide by the first entry of largest modulus
        unit_cols = []
        for v in cols:
            k = min(range(n), key=lambda i: (f.val(v[i]), i))
            unit_cols.append(tuple(x / v[k] for x in v))
        h = Matrix.from_columns(f, unit_cols)
        Dh = [h.rows[i][i] for i in range(n)]
        m = 0
        while Fraction(p) ** (-m) > theta:
            m += 1
        Dh2 = [Fraction(p) ** m if Dh[i] == 0 else f.zero for i in range(n)]
        h2 = h + Matrix.diag(f, Dh2)
        w = h2 @ Matrix.diag(f, [x + y for x, y in zip(Dh, Dh2)]).inv()
        w_inv = w.inv()
        D = Matrix.diag(f, lams)
        residual = mat_norm(w @ D @ w_inv - C2)
        if residual <= target:
            break
        guard *= 2
        if guard > max_guard:
            raise HenselError("residual did not reach the requested depth")
    ident = Matrix.identity(f, n)
    conj_defect = max(mat_norm(w - ident), mat_norm(w_inv - ident))
    eig_defect = max(f.abs(x - y) for x, y in zip(lams, a))
    if not conj_defect < eps or not eig_defect < eps:
        raise AssertionError(
            f"defects {conj_defect}, {eig_defect} not below eps={eps}")
    return DiagonalizationResult(w, lams, conj_defect, eig_defect, residual, depth)

