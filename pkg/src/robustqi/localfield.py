"""Field backends for R, C and Q_p.

Real and complex elements are ``mpf``/``mpc`` values living in an mpmath
context whose precision is fixed by the :class:`FieldSpec`.  p-adic elements
are exact :class:`fractions.Fraction` values; the absolute value is
``|x| = p**(-v_p(x))`` computed from the reduced rational.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Sequence

import mpmath

KINDS = ("real", "complex", "padic")
DEFAULT_PRECISION = {"real": 256, "complex": 256, "padic": 64}
MIN_PRECISION = 64


class FieldSpecError(ValueError):
    """Invalid field description."""


class UnsupportedFieldError(FieldSpecError):
    """The requested field has no backend (e.g. Laurent series over F_q)."""


class ElementError(ValueError):
    """A value could not be read as an element of the field."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


_UNSUPPORTED = {"laurent", "fq", "function_field", "fqt", "local_function_field"}


@dataclass(frozen=True)
class FieldSpec:
    """Which local field, and how precisely to compute in it.

    ``precision`` is the mantissa width in bits for ``real``/``complex`` and the
    digit depth used for truncations and sampling for ``padic``.
    """

    kind: str
    precision: int | None = None
    prime: int | None = None

    def __post_init__(self) -> None:
        kind = str(self.kind).lower()
        if kind in _UNSUPPORTED:
            raise UnsupportedFieldError(
                f"field kind {self.kind!r} is not supported; use real, complex or padic")
        if kind not in KINDS:
            raise FieldSpecError(f"unknown field kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        prec = DEFAULT_PRECISION[kind] if self.precision is None else self.precision
        if not isinstance(prec, int) or isinstance(prec, bool):
            raise FieldSpecError("precision must be an integer")
        if prec < MIN_PRECISION:
            raise FieldSpecError(f"precision must be >= {MIN_PRECISION}, got {prec}")
        object.__setattr__(self, "precision", prec)
        if kind == "padic":
            if not isinstance(self.prime, int) or not is_prime(self.prime):
                raise FieldSpecError(f"padic field needs a prime, got {self.prime!r}")
        elif self.prime is not None:
            raise FieldSpecError("prime is only meaningful for padic fields")

    @property
    def archimedean(self) -> bool:
        return self.kind != "padic"

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FieldSpec":
        if not isinstance(data, dict) or "kind" not in data:
            raise FieldSpecError("field block must be an object with a 'kind'")
        extra = set(data) - {"kind", "precision", "prime"}
        if extra:
            raise FieldSpecError(f"unknown field keys: {sorted(extra)}")
        return cls(kind=data["kind"], precision=data.get("precision"),
                   prime=data.get("prime"))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "precision": self.precision}
        if self.prime is not None:
            out["prime"] = self.prime
        return out

    def __str__(self) -> str:
        if self.kind == "padic":
            return f"Q_{self.prime}[depth {self.precision}]"
        return f"{'R' if self.kind == 'real' else 'C'}[{self.precision} bits]"


def vp_int(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of 0")
    n = abs(n)
    if p == 2:
        return (n & -n).bit_length() - 1
    v = 0
    # peel off p^(2^k) blocks first so large valuations stay cheap
    powers = [p]
    while n % powers[-1] == 0 and powers[-1] * powers[-1] <= n:
        powers.append(powers[-1] * powers[-1])
    for k in range(len(powers) - 1, -1, -1):
        while n % powers[k] == 0:
            n //= powers[k]
            v += 1 << k
    return v


@lru_cache(maxsize=None)
def mp_context(bits: int) -> mpmath.ctx_mp.MPContext:
    ctx = mpmath.MPContext()
    ctx.prec = bits
    return ctx


class Field:
    """Element-level helpers for one :class:`FieldSpec`.

    Obtain instances through :func:`make_field` so that equal specs share one
    object (and one mpmath context).
    """

    def __init__(self, spec: FieldSpec):
        self.spec = spec
        self.kind = spec.kind
        self.archimedean = spec.archimedean
        self.prime = spec.prime
        # p-adic fields still get a context for logs and irrational moduli
        self.ctx = mp_context(spec.precision if spec.archimedean else 256)
        if spec.archimedean:
            self.zero = self.ctx.mpf(0)
            self.one = self.ctx.mpf(1)
            self.log_p = None
        else:
            self.zero = Fraction(0)
            self.one = Fraction(1)
            self.log_p = self.ctx.log(spec.prime)

    def __repr__(self) -> str:
        return f"Field({self.spec})"

    # -- conversion -------------------------------------------------------
    def __call__(self, x: Any) -> Any:
        return self.convert(x)

    def convert(self, x: Any) -> Any:
        """Read ``x`` into the field.

        Accepts ints, Fractions, strings such as ``"3/4"`` or ``"1.5e-3"`` and,
        for complex fields, ``[re, im]`` pairs.  Floats are accepted only by the
        archimedean backends (p-adic values must be exact).
        """
        if isinstance(x, (list, tuple)):
            if self.kind != "complex" or len(x) != 2:
                raise ElementError(f"pair {x!r} only valid for complex fields")
            re_, im_ = (self._real(v) for v in x)
            return self.ctx.mpc(re_, im_)
        if self.kind == "padic":
            return self._rational(x)
        if isinstance(x, (mpmath.mpc, complex)) or (
                hasattr(x, "imag") and not isinstance(x, (int, Fraction)) and x.imag):
            if self.kind != "complex":
                raise ElementError(f"complex value {x!r} in a real field")
            return self.ctx.mpc(x)
        return self._real(x)

    def _rational(self, x: Any) -> Fraction:
        if isinstance(x, bool):
            raise ElementError("booleans are not field elements")
        if isinstance(x, (int, Fraction)):
            return Fraction(x)
        if isinstance(x, str):
            try:
                return Fraction(x.strip())
            except (ValueError, ZeroDivisionError) as exc:
                raise ElementError(f"cannot parse {x!r} as a rational") from exc
        raise ElementError(f"p-adic elements must be exact rationals, got {type(x).__name__}")

    def _real(self, x: Any) -> Any:
        ctx = self.ctx
        if isinstance(x, bool):
            raise ElementError("booleans are not field elements")
        if isinstance(x, Fraction):
            return ctx.mpf(x.numerator) / x.denominator
        if isinstance(x, str):
            s = x.strip()
            if "/" in s:
                try:
                    q = Fraction(s)
                except (ValueError, ZeroDivisionError) as exc:
                    raise ElementError(f"cannot parse {x!r}") from exc
                return ctx.mpf(q.numerator) / q.denominator
            try:
                return ctx.mpf(s)
            except (ValueError, TypeError) as exc:
                raise ElementError(f"cannot parse {x!r}") from exc
        try:
            return ctx.mpf(x)
        except (TypeError, ValueError) as exc:
            raise ElementError(f"cannot read {x!r}") from exc

    def vector(self, values: Iterable[Any]) -> tuple:
        return tuple(self.convert(v) for v in values)

    def basis(self, n: int, i: int) -> tuple:
        return tuple(self.one if k == i else self.zero for k in range(n))

    # -- absolute values -------------------------------------------------
    def is_zero(self, x: Any) -> bool:
        return x == 0

    def val(self, x: Any) -> int | float:
        """Exact p-adic valuation (``inf`` for zero)."""
        if self.archimedean:
            raise TypeError("valuation is only defined for p-adic fields")
        if x == 0:
            return math.inf
        q = x if isinstance(x, Fraction) else Fraction(x)
        return vp_int(q.numerator, self.prime) - vp_int(q.denominator, self.prime)

    def abs(self, x: Any) -> Any:
        """|x|: exact Fraction for Q_p, mpf otherwise."""
        if self.archimedean:
            return self.ctx.fabs(x)
        if x == 0:
            return Fraction(0)
        return Fraction(self.prime) ** (-self.val(x))

    def log_abs(self, x: Any) -> Any:
        """log|x| as an mpf (``-inf`` for zero)."""
        if x == 0:
            return self.ctx.ninf
        if self.archimedean:
            return self.ctx.log(self.ctx.fabs(x))
        return -self.val(x) * self.log_p

    def conj(self, x: Any) -> Any:
        if self.kind == "complex":
            return self.ctx.conj(x)
        return x

    # -- vectors ---------------------------------------------------------
    def vec_norm(self, v: Sequence[Any]) -> Any:
        """Euclidean norm (archimedean) or max-norm (p-adic)."""
        if self.archimedean:
            ctx = self.ctx
            if self.kind == "complex":
                return ctx.sqrt(ctx.fsum(ctx.fabs(x) ** 2 for x in v))
            return ctx.sqrt(ctx.fsum(x * x for x in v))
        best = min((self.val(x) for x in v), default=math.inf)
        return Fraction(0) if best == math.inf else Fraction(self.prime) ** (-best)

    def log_norm(self, v: Sequence[Any]) -> Any:
        """log of :meth:`vec_norm` as an mpf (a real number, not a field element)."""
        if self.archimedean:
            return self.ctx.log(self.vec_norm(v))
        best = min((self.val(x) for x in v), default=math.inf)
        return self.ctx.ninf if best == math.inf else -best * self.log_p

    def dot(self, u: Sequence[Any], v: Sequence[Any]) -> Any:
        """u . v = sum u_i conj(v_i)."""
        if len(u) != len(v):
            raise ValueError(f"dimension mismatch: {len(u)} vs {len(v)}")
        if self.kind == "complex":
            ctx = self.ctx
            return ctx.fsum(a * ctx.conj(b) for a, b in zip(u, v))
        if self.archimedean:
            return self.ctx.fsum(a * b for a, b in zip(u, v))
        return sum((a * b for a, b in zip(u, v)), Fraction(0))

    # -- helpers shared by higher modules ----------------------------------
    def tolerance(self, fraction_of_precision: int = 2) -> Any:
        """2^(-precision/k): the archimedean comparison floor."""
        return self.ctx.ldexp(1, -(self.spec.precision // fraction_of_precision))

    def truncate(self, x: Fraction, depth: int) -> Fraction:
        """A rational t with |x - t| <= p^(-depth) whose denominator is a power of p."""
        if self.archimedean:
            raise TypeError("truncation is a p-adic operation")
        if x == 0:
            return Fraction(0)
        p = self.prime
        v = self.val(x)
        if v >= depth:
            return Fraction(0)
        unit = x / Fraction(p) ** v
        modulus = p ** (depth - v)
        num = unit.numerator * pow(unit.denominator, -1, modulus) % modulus
        return Fraction(num) * Fraction(p) ** v

    def to_json(self, x: Any) -> Any:
        """Lossless-ish JSON form: ``"p/q"`` strings or decimal strings."""
        if isinstance(x, Fraction):
            return str(x)
        if isinstance(x, int):
            return str(x)
        ctx = self.ctx
        digits = max(20, int(self.spec.precision * 0.30103) // 4) if self.archimedean else 30
        if isinstance(x, mpmath.mpc) or (hasattr(x, "imag") and x.imag):
            return [ctx.nstr(x.real, digits), ctx.nstr(x.imag, digits)]
        return ctx.nstr(x, digits)


@lru_cache(maxsize=None)
def make_field(spec: FieldSpec) -> Field:
    return Field(spec)


def real_field(bits: int = 256) -> Field:
    return make_field(FieldSpec("real", bits))


def complex_field(bits: int = 256) -> Field:
    return make_field(FieldSpec("complex", bits))


def padic_field(p: int, depth: int = 64) -> Field:
    return make_field(FieldSpec("padic", depth, p))


@dataclass(frozen=True)
class PadicDigits:
    """Truncated p-adic expansion ``p^valuation * sum digits[i] p^i``.

    Used to present Hensel outputs; ``digits[0] != 0`` unless the value is the
    zero marker (empty digits).
    """

    prime: int
    valuation: int
    digits: tuple[int, ...]

    @classmethod
    def from_rational(cls, x: Fraction, prime: int, depth: int) -> "PadicDigits":
        if x == 0:
            return cls(prime, 0, ())
        field = padic_field(prime, max(depth, MIN_PRECISION))
        v = field.val(x)
        unit = x / Fraction(prime) ** v
        modulus = prime ** depth
        n = unit.numerator * pow(unit.denominator, -1, modulus) % modulus
        digits = []
        for _ in range(depth):
            n, d = divmod(n, prime)
            digits.append(d)
        return cls(prime, v, tuple(digits))

    def to_rational(self) -> Fraction:
        if not self.digits:
            return Fraction(0)
        n = sum(d * self.prime ** i for i, d in enumerate(self.digits))
        return Fraction(n) * Fraction(self.prime) ** self.valuation
