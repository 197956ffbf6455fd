"""Dense square matrices over a :class:`~robustqi.localfield.Field`.

Norm conventions: the archimedean matrix norm is the operator 2-norm, the
p-adic one is the maximum entry absolute value.  Singular values over Q_p are
the elementary divisors ``p^(-d_i)`` of the Smith normal form.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .localfield import Field

Vec = tuple


class SingularMatrixError(ValueError):
    """Operation needs an invertible matrix."""


class Matrix:
    """Immutable n x n matrix; ``rows`` is a tuple of row tuples."""

    __slots__ = ("field", "rows", "n")

    def __init__(self, field: Field, rows: Iterable[Iterable[Any]]):
        rows = tuple(tuple(r) for r in rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("matrix must be square")
        self.field = field
        self.rows = rows
        self.n = n

    # -- constructors ------------------------------------------------------
    @classmethod
    def from_values(cls, field: Field, data: Sequence[Sequence[Any]]) -> "Matrix":
        return cls(field, ((field.convert(x) for x in row) for row in data))

    @classmethod
    def identity(cls, field: Field, n: int) -> "Matrix":
        return cls(field, ((field.one if i == j else field.zero for j in range(n))
                           for i in range(n)))

    @classmethod
    def diag(cls, field: Field, entries: Sequence[Any]) -> "Matrix":
        entries = [field.convert(x) if not _is_element(field, x) else x for x in entries]
        n = len(entries)
        return cls(field, ((entries[i] if i == j else field.zero for j in range(n))
                           for i in range(n)))

    @classmethod
    def from_columns(cls, field: Field, cols: Sequence[Sequence[Any]]) -> "Matrix":
        n = len(cols)
        return cls(field, ((cols[j][i] for j in range(n)) for i in range(n)))

    @classmethod
    def block_diag(cls, field: Field, blocks: Sequence["Matrix"]) -> "Matrix":
        n = sum(b.n for b in blocks)
        rows = [[field.zero] * n for _ in range(n)]
        off = 0
        for b in blocks:
            for i in range(b.n):
                for j in range(b.n):
                    rows[off + i][off + j] = b.rows[i][j]
            off += b.n
        return cls(field, rows)

    # -- access --------------------------------------------------------------
    def __getitem__(self, ij: tuple[int, int]) -> Any:
        i, j = ij
        return self.rows[i][j]

    def col(self, j: int) -> Vec:
        return tuple(r[j] for r in self.rows)

    def diagonal(self) -> Vec:
        return tuple(self.rows[i][i] for i in range(self.n))

    def is_diagonal(self) -> bool:
        return all(self.rows[i][j] == 0 for i in range(self.n) for j in range(self.n) if i != j)

    def __repr__(self) -> str:
        return f"Matrix({self.field.spec}, {[list(r) for r in self.rows]})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Matrix) and self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    # -- arithmetic ----------------------------------------------------------
    def _sum(self, terms: Iterable[Any]) -> Any:
        if self.field.archimedean:
            return self.field.ctx.fsum(terms)
        return sum(terms, Fraction(0))

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        cols = [other.col(j) for j in range(self.n)]
        if self.field.archimedean:
            fdot = self.field.ctx.fdot
            return Matrix(self.field, ((fdot(r, c) for c in cols) for r in self.rows))
        return Matrix(self.field, ((sum(a * b for a, b in zip(r, c)) for c in cols)
                                   for r in self.rows))

    def apply(self, v: Sequence[Any]) -> Vec:
        if len(v) != self.n:
            raise ValueError("dimension mismatch")
        if self.field.archimedean:
            fdot = self.field.ctx.fdot
            return tuple(fdot(r, v) for r in self.rows)
        return tuple(sum(a * b for a, b in zip(r, v)) for r in self.rows)

    def __add__(self, other: "Matrix") -> "Matrix":
        return Matrix(self.field, ((a + b for a, b in zip(r, s))
                                   for r, s in zip(self.rows, other.rows)))

    def __sub__(self, other: "Matrix") -> "Matrix":
        return Matrix(self.field, ((a - b for a, b in zip(r, s))
                                   for r, s in zip(self.rows, other.rows)))

    def __neg__(self) -> "Matrix":
        return Matrix(self.field, ((-a for a in r) for r in self.rows))

    def scale(self, c: Any) -> "Matrix":
        return Matrix(self.field, ((c * a for a in r) for r in self.rows))

    @property
    def T(self) -> "Matrix":
        return Matrix(self.field, zip(*self.rows)) if self.n else self

    @property
    def H(self) -> "Matrix":
        """Conjugate transpose (plain transpose away from C)."""
        conj = self.field.conj
        return Matrix(self.field, ((conj(a) for a in r) for r in zip(*self.rows))) if self.n else self

    def _pivot(self, a: list[list[Any]], k: int) -> int | None:
        """Row index of the pivot for column k (partial pivoting by size)."""
        best, best_i = None, None
        if self.field.archimedean:
            fabs = self.field.ctx.fabs
            for i in range(k, len(a)):
                m = fabs(a[i][k])
                if m != 0 and (best is None or m > best):
                    best, best_i = m, i
            return best_i
        for i in range(k, len(a)):
            if a[i][k] != 0:
                return i
        return None

    def det(self) -> Any:
        n = self.n
        if n == 0:
            return self.field.one
        a = [list(r) for r in self.rows]
        det = self.field.one
        for k in range(n):
            piv = self._pivot(a, k)
            if piv is None:
                return self.field.zero
            if piv != k:
                a[k], a[piv] = a[piv], a[k]
                det = -det
            pk = a[k][k]
            det = det * pk
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    f = a[i][k] / pk
                    row_k = a[k]
                    a[i] = [x - f * y for x, y in zip(a[i], row_k)]
        return det

    def inv(self) -> "Matrix":
        n = self.n
        one, zero = self.field.one, self.field.zero
        a = [list(r) + [one if i == j else zero for j in range(n)] for i, r in enumerate(self.rows)]
        for k in range(n):
            piv = self._pivot(a, k)
            if piv is None:
                raise SingularMatrixError("matrix is singular")
            a[k], a[piv] = a[piv], a[k]
            pk = a[k][k]
            a[k] = [x / pk for x in a[k]]
            for i in range(n):
                if i != k and a[i][k] != 0:
                    f = a[i][k]
                    a[i] = [x - f * y for x, y in zip(a[i], a[k])]
        return Matrix(self.field, (row[n:] for row in a))

    def solve(self, b: Sequence[Any]) -> Vec:
        return self.inv().apply(b)

    def __pow__(self, p: int) -> "Matrix":
        if p < 0:
            return self.inv() ** (-p)
        result = Matrix.identity(self.field, self.n)
        base = self
        while p:
            if p & 1:
                result = result @ base
            p >>= 1
            if p:
                base = base @ base
        return result

    def conjugate_by(self, h: "Matrix", h_inv: "Matrix | None" = None) -> "Matrix":
        """h @ self @ h^{-1}."""
        return h @ self @ (h_inv if h_inv is not None else h.inv())

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "Matrix":
        return Matrix(self.field, ((self.rows[i][j] for j in cols) for i in rows))

    def to_mp(self):
        return self.field.ctx.matrix([list(r) for r in self.rows])

    def to_json(self) -> list[list[Any]]:
        return [[self.field.to_json(x) for x in r] for r in self.rows]


def _is_element(field: Field, x: Any) -> bool:
    if field.archimedean:
        return type(x).__name__ in ("mpf", "mpc")
    return isinstance(x, Fraction)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def mat_norm(A: Matrix) -> Any:
    """Operator 2-norm (archimedean) or max |a_ij| (p-adic).  Empty matrix -> 0."""
    f = A.field
    if A.n == 0:
        return f.zero if f.archimedean else Fraction(0)
    if f.archimedean:
        return _svd_values(A)[0]
    best = min(f.val(x) for r in A.rows for x in r)
    return Fraction(0) if best == math.inf else Fraction(f.prime) ** (-best)


def cond_C(h: Matrix) -> Any:
    """C(h) = 2 ||h|| ||h^{-1}||."""
    return 2 * mat_norm(h) * mat_norm(h.inv())


def max_entry_valuation(A: Matrix) -> int | float:
    f = A.field
    return min((f.val(x) for r in A.rows for x in r), default=math.inf)


# ---------------------------------------------------------------------------
# singular values and eigenvalue moduli
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SingularProfile:
    """sigma_1 >= ... >= sigma_n stored as logs.

    For p-adic matrices ``valuations`` holds the exact elementary divisor
    valuations d_1 <= ... <= d_n (sigma_i = p^(-d_i)).
    """

    field: Field
    logs: tuple
    valuations: tuple | None = None

    @property
    def n(self) -> int:
        return len(self.logs)

    def values(self) -> tuple:
        f = self.field
        if self.valuations is not None:
            return tuple(Fraction(f.prime) ** (-d) for d in self.valuations)
        return tuple(f.ctx.exp(x) for x in self.logs)

    def log_gap(self, j: int) -> Any:
        """log(sigma_j / sigma_{j+1}), 1-based j."""
        _check_index(j, self.n)
        return self.logs[j - 1] - self.logs[j]

    def gap(self, j: int) -> Any:
        _check_index(j, self.n)
        if self.valuations is not None:
            return Fraction(self.field.prime) ** (self.valuations[j] - self.valuations[j - 1])
        return self.field.ctx.exp(self.log_gap(j))


@dataclass(frozen=True)
class EigenModuli:
    """ell_1 >= ... >= ell_n stored as logs (exact valuations over Q_p)."""

    field: Field
    logs: tuple
    valuations: tuple | None = None

    @property
    def n(self) -> int:
        return len(self.logs)

    def values(self) -> tuple:
        f = self.field
        if self.valuations is not None:
            out = []
            for v in self.valuations:
                if Fraction(v).denominator == 1:
                    out.append(Fraction(f.prime) ** (-int(v)))
                else:
                    out.append(f.ctx.power(f.prime, -f.ctx.mpf(v.numerator) / v.denominator))
            return tuple(out)
        return tuple(f.ctx.exp(x) for x in self.logs)

    def equal(self, j: int, tol: Any = None) -> bool:
        """Whether ell_j == ell_{j+1} (exact over Q_p, relative tol otherwise)."""
        _check_index(j, self.n)
        if self.valuations is not None:
            return self.valuations[j - 1] == self.valuations[j]
        if tol is None:
            tol = self.field.tolerance(4)
        return self.logs[j - 1] - self.logs[j] <= tol


def _check_index(j: int, n: int) -> None:
    if not 1 <= j <= n - 1:
        raise IndexError(f"gap index {j} outside 1..{n - 1}")


def _svd_values(A: Matrix) -> list:
    ctx = A.field.ctx
    M = A.to_mp()
    if A.field.kind == "complex":
        s = ctx.svd_c(M, compute_uv=False)
    else:
        s = ctx.svd_r(M, compute_uv=False)
    return sorted((s[i] for i in range(A.n)), reverse=True)


def smith_valuations(A: Matrix) -> tuple[int, ...]:
    """Elementary divisor valuations of a p-adic matrix, nondecreasing.

    Valuation-pivot elimination: the pivot is an entry of least valuation in
    the remaining block (lowest row, then lowest column, on ties).  All
    multipliers then lie in Z_p, so the divisors are the pivot valuations.
    """
    f = A.field
    if f.archimedean:
        raise TypeError("Smith form is a p-adic computation")
    n = A.n
    a = [list(r) for r in A.rows]
    out = []
    for k in range(n):
        best, bi, bj = math.inf, -1, -1
        for i in range(k, n):
            row = a[i]
            for j in range(k, n):
                x = row[j]
                if x != 0:
                    v = f.val(x)
                    if v < best:
                        best, bi, bj = v, i, j
        if best == math.inf:
            raise SingularMatrixError("matrix is singular")
        a[k], a[bi] = a[bi], a[k]
        if bj != k:
            for row in a:
                row[k], row[bj] = row[bj], row[k]
        pk = a[k][k]
        rk = a[k]
        for i in range(k + 1, n):
            if a[i][k] != 0:
                m = a[i][k] / pk
                a[i] = [x - m * y if c > k else (0 if c == k else x)
                        for c, (x, y) in enumerate(zip(a[i], rk))]
        out.append(best)
    return tuple(out)


def singular_values(A: Matrix) -> SingularProfile:
    f = A.field
    if f.archimedean:
        s = _svd_values(A)
        if s[-1] == 0:
            raise SingularMatrixError("matrix is singular")
        return SingularProfile(f, tuple(f.ctx.log(x) for x in s))
    d = smith_valuations(A)
    return SingularProfile(f, tuple(-v * f.log_p for v in d), d)


def eigen_moduli(A: Matrix) -> EigenModuli:
    f = A.field
    if f.archimedean:
        ctx = f.ctx
        if A.n == 1:  # mpmath's eig ignores left/right for 1x1 input
            ev = [A.rows[0][0]]
        else:
            ev = ctx.eig(A.to_mp(), left=False, right=False)
        mods = [ctx.fabs(e) for e in ev]
        if any(m == 0 for m in mods):
            raise SingularMatrixError("matrix is singular")
        order = sorted(range(len(mods)), key=lambda i: (-mods[i], i))
        return EigenModuli(f, tuple(ctx.log(mods[i]) for i in order))
    from .spectral import charpoly, newton_polygon

    vals = newton_polygon(charpoly(A))
    return EigenModuli(f, tuple(-v * f.log_p for v in vals), tuple(vals))


def exterior_power(A: Matrix, m: int) -> Matrix:
    """m-th exterior power in the lexicographic basis e_I, I a sorted m-subset."""
    n = A.n
    if not 1 <= m <= n:
        raise ValueError(f"exterior degree {m} outside 1..{n}")
    if m == 1:
        return A
    subsets = list(itertools.combinations(range(n), m))
    return Matrix(A.field, ((A.submatrix(I, J).det() for J in subsets) for I in subsets))


def sv_gap(A: Matrix, j: int) -> Any:
    """sigma_j / sigma_{j+1} (exact Fraction over Q_p)."""
    return singular_values(A).gap(j)


def log_sv_gap(A: Matrix, j: int) -> Any:
    return singular_values(A).log_gap(j)
