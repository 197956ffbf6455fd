"""Free products of (semi)groups, their reduced words, singular value gap
scans along word length, and sampled ping-pong certification.

Words are tuples of :class:`Syllable`; the matrix of a word is the product of
its syllable matrices left to right.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Any, Callable, Iterator, Sequence

import numpy as np
from scipy import stats

from .localfield import Field
from .matlin import Matrix, eigen_moduli, exterior_power, smith_valuations
from .projgeom import ProjPoint, ProjSet, contains, normalize, sample, set_margin


class BudgetExceeded(RuntimeError):
    """A combinatorial enumeration outgrew its configured cap."""


class PingPongFailure(AssertionError):
    pass


# ---------------------------------------------------------------------------
# alphabets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cyclic:
    """Infinite cyclic factor Z."""
    name: str = "a"


@dataclass(frozen=True)
class SemigroupGen:
    """Free semigroup factor Z+ (no inverse)."""
    name: str = "s"


@dataclass(frozen=True)
class FreeRank:
    """F_m, expanded into m cyclic factors a1..am."""
    m: int
    prefix: str = "a"


@dataclass(frozen=True)
class FiniteGroup:
    """A finite group by multiplication table; table[i][j] = index of e_i e_j."""

    names: tuple
    table: tuple
    identity: int = 0
    generators: tuple = ()

    def __post_init__(self) -> None:
        n = len(self.names)
        object.__setattr__(self, "table", tuple(tuple(r) for r in self.table))
        if len(self.table) != n or any(len(r) != n for r in self.table):
            raise ValueError("multiplication table must be square of the group order")
        T = self.table
        e = self.identity
        if any(T[e][i] != i or T[i][e] != i for i in range(n)):
            raise ValueError("identity element is not neutral")
        for i in range(n):
            if e not in T[i]:
                raise ValueError(f"element {self.names[i]} has no inverse")
        for a, b, c in itertools.product(range(n), repeat=3):
            if T[T[a][b]][c] != T[a][T[b][c]]:
                raise ValueError("multiplication table is not associative")

    @property
    def order(self) -> int:
        return len(self.names)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inverse(self, a: int) -> int:
        return self.table[a].index(self.identity)

    def word_lengths(self) -> tuple:
        """Word length of each element in the generators (and their inverses)."""
        gens = set(self.generators) | {self.inverse(g) for g in self.generators}
        dist = {self.identity: 0}
        queue = deque([self.identity])
        while queue:
            x = queue.popleft()
            for g in sorted(gens):
                y = self.mul(x, g)
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        if len(dist) != self.order:
            raise ValueError("generators do not generate the group")
        return tuple(dist[i] for i in range(self.order))


def dihedral_group(k: int) -> FiniteGroup:
    """Symmetries of the regular k-gon (order 2k), generated by the rotation
    r and the reflection s; elements r^i s^e are indexed i + k e."""
    def mul(a: int, b: int) -> int:
        i, e = a % k, a // k
        j, f = b % k, b // k
        # r^i s^e r^j s^f = r^(i + (-1)^e j) s^(e+f)
        return (i + (j if e == 0 else -j)) % k + k * ((e + f) % 2)

    names = tuple(("r^%d" % i if i else "1") if e == 0 else ("r^%d s" % i if i else "s")
                  for e in range(2) for i in range(k))
    table = tuple(tuple(mul(a, b) for b in range(2 * k)) for a in range(2 * k))
    return FiniteGroup(names, table, 0, (1, k))


@dataclass(frozen=True)
class FiniteExt:
    """Z x F (central t) or just F; syllables f t^p."""
    group: FiniteGroup
    central: bool = True
    name: str = "t"


Factor = Cyclic | SemigroupGen | FiniteExt


@dataclass(frozen=True, order=True)
class Syllable:
    factor: int
    power: int
    element: int = 0


Word = tuple  # tuple[Syllable, ...]


@dataclass(frozen=True)
class SyllableAlphabet:
    factors: tuple

    def __post_init__(self) -> None:
        out: list = []
        for fac in self.factors:
            if isinstance(fac, FreeRank):
                if fac.m < 1:
                    raise ValueError("free rank must be positive")
                out.extend(Cyclic(f"{fac.prefix}{i + 1}") for i in range(fac.m))
            elif isinstance(fac, (Cyclic, SemigroupGen, FiniteExt)):
                out.append(fac)
            else:
                raise TypeError(f"unknown factor {fac!r}")
        if not out:
            raise ValueError("alphabet needs at least one factor")
        object.__setattr__(self, "factors", tuple(out))
        object.__setattr__(self, "_lengths", tuple(
            fac.group.word_lengths() if isinstance(fac, FiniteExt) else None for fac in out))

    def __len__(self) -> int:
        return len(self.factors)

    # syllables ---------------------------------------------------------
    def syllables(self, i: int, cap: int) -> list[Syllable]:
        """Nontrivial syllables of factor i with |power| <= cap."""
        fac = self.factors[i]
        if isinstance(fac, Cyclic):
            return [Syllable(i, p) for p in range(-cap, cap + 1) if p]
        if isinstance(fac, SemigroupGen):
            return [Syllable(i, p) for p in range(1, cap + 1)]
        G = fac.group
        powers = range(-cap, cap + 1) if fac.central else (0,)
        return [Syllable(i, p, f) for f in range(G.order) for p in powers
                if not (f == G.identity and p == 0)]

    def syllable_length(self, s: Syllable) -> int:
        fac = self.factors[s.factor]
        if isinstance(fac, FiniteExt):
            return abs(s.power) + self._lengths[s.factor][s.element]
        return abs(s.power)

    def word_length(self, w: Word) -> int:
        return sum(self.syllable_length(s) for s in w)

    def is_torsion(self, w: Word) -> bool:
        """Finite order; for a reduced word this means a single torsion syllable
        (words of syllable length >= 2 are cyclically reduced or conjugate to
        shorter ones with the same property)."""
        if len(w) != 1:
            return self._cyclic_core_torsion(w)
        s = w[0]
        return isinstance(self.factors[s.factor], FiniteExt) and s.power == 0

    def _cyclic_core_torsion(self, w: Word) -> bool:
        w = list(w)
        while len(w) >= 2 and w[0].factor == w[-1].factor:
            a, b = w[0], w[-1]
            fac = self.factors[a.factor]
            if isinstance(fac, FiniteExt):
                merged = Syllable(a.factor, a.power + b.power, fac.group.mul(b.element, a.element))
                trivial = merged.power == 0 and merged.element == fac.group.identity
            else:
                merged = Syllable(a.factor, a.power + b.power)
                trivial = merged.power == 0
            w = w[1:-1] if trivial else [merged] + w[1:-1]
        if not w:
            return True
        return len(w) == 1 and self.is_torsion((w[0],))

    def format(self, w: Word) -> str:
        if not w:
            return "1"
        parts = []
        for s in w:
            fac = self.factors[s.factor]
            if isinstance(fac, FiniteExt):
                txt = [] if s.element == fac.group.identity else [f"[{fac.group.names[s.element]}]"]
                if s.power:
                    txt.append(f"{fac.name}^{s.power}")
                parts.append("".join(txt))
            else:
                parts.append(f"{fac.name}^{s.power}")
        return " ".join(parts)

    # counting ----------------------------------------------------------
    def syllable_count(self, i: int, cap: int) -> int:
        fac = self.factors[i]
        if isinstance(fac, Cyclic):
            return 2 * cap
        if isinstance(fac, SemigroupGen):
            return cap
        G = fac.group
        return G.order * (2 * cap + 1) - 1 if fac.central else G.order - 1


def enumerate_words(alphabet: SyllableAlphabet, L: int, measure: str = "syllable",
                    cap: int = 4, budget: int = 10 ** 6) -> list[Word]:
    """Reduced words of length 1..L, shortest first.

    ``measure='syllable'`` counts syllables (powers capped at ``cap``);
    ``measure='word'`` counts generators (no cap beyond L).
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    out: list[Word] = []
    for w in _dfs_words(alphabet, L, measure, cap):
        out.append(w)
        if len(out) > budget:
            raise BudgetExceeded(f"more than {budget} words")
    key = (lambda w: len(w)) if measure == "syllable" else alphabet.word_length
    out.sort(key=key)  # stable: DFS order within each length
    return out


def _children(alphabet: SyllableAlphabet, last: int | None, used: int, L: int,
              measure: str, cap: int) -> list[Syllable]:
    out = []
    for i in range(len(alphabet)):
        if i == last:
            continue
        if measure == "syllable":
            if used + 1 > L:
                return []
            out.extend(alphabet.syllables(i, cap))
        else:
            room = L - used
            out.extend(s for s in alphabet.syllables(i, room) if 0 < alphabet.syllable_length(s) <= room)
    return out


def _measure(alphabet: SyllableAlphabet, s: Syllable, measure: str) -> int:
    return 1 if measure == "syllable" else alphabet.syllable_length(s)


def _dfs_words(alphabet: SyllableAlphabet, L: int, measure: str, cap: int,
               prefix: Word = (), used: int = 0) -> Iterator[Word]:
    last = prefix[-1].factor if prefix else None
    for s in _children(alphabet, last, used, L, measure, cap):
        w = prefix + (s,)
        yield w
        yield from _dfs_words(alphabet, L, measure, cap, w, used + _measure(alphabet, s, measure))


def growth_counts(alphabet: SyllableAlphabet, L: int, measure: str = "syllable",
                  cap: int = 4) -> list[int]:
    """Number of reduced words of each length 1..L via the free-product
    transfer recurrence N_i(l) = sum_k c_i(k) (e(l-k) - N_i(l-k)) with
    e(0)=1, where c_i(k) counts factor-i syllables of length k."""
    m = len(alphabet)
    if measure == "syllable":
        c = [{1: alphabet.syllable_count(i, cap)} for i in range(m)]
    else:
        c = []
        for i in range(m):
            hist: dict[int, int] = {}
            for s in alphabet.syllables(i, L):
                k = alphabet.syllable_length(s)
                if 0 < k <= L:
                    hist[k] = hist.get(k, 0) + 1
            c.append(hist)
    # N[i][l]: words of length l whose first syllable lies in factor i
    N = [[0] * (L + 1) for _ in range(m)]
    total = [1] + [0] * L
    for l in range(1, L + 1):
        for i in range(m):
            N[i][l] = sum(cnt * (total[l - k] - N[i][l - k]) for k, cnt in c[i].items() if k <= l)
        total[l] = sum(N[i][l] for i in range(m))
    return total[1:]


def free_group_sphere(m: int, L: int) -> int:
    """|{w in F_m : |w| = L}| = 2m (2m-1)^(L-1)."""
    return 2 * m * (2 * m - 1) ** (L - 1)


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Factored:
    """g = h D h^{-1}; powers and exterior powers are formed through the factors
    so huge eigenvalue spreads do not cancel."""

    h: Matrix
    D: Matrix
    h_inv: Matrix | None = None

    def __post_init__(self) -> None:
        if self.h_inv is None:
            object.__setattr__(self, "h_inv", self.h.inv())

    @classmethod
    def from_form(cls, form: Any) -> "Factored":
        return cls(form.h, form.diagonal_part(), form.h_inv)

    def power(self, p: int) -> Matrix:
        return self.h @ (self.D ** p) @ self.h_inv

    def exterior(self, k: int, p: int) -> Matrix:
        Dp = self.D ** p
        return exterior_power(self.h, k) @ exterior_power(Dp, k) @ exterior_power(self.h_inv, k)

    def det_log(self, p: int) -> Any:
        f = self.h.field
        return p * f.log_abs(self.D.det())


Letter = Matrix | Factored


class Representation:
    """Images of the factor generators.

    ``images[i]`` is a Matrix or :class:`Factored` for cyclic/semigroup
    factors, and a pair (list of Matrix indexed by group element, letter for t)
    for a FiniteExt factor (t may be None when not central).
    """

    def __init__(self, alphabet: SyllableAlphabet, images: Sequence[Any]):
        if len(images) != len(alphabet):
            raise ValueError("one image per factor")
        self.alphabet = alphabet
        self.images = tuple(images)
        first = images[0]
        sample_m = first if isinstance(first, Matrix) else first.h if isinstance(first, Factored) else first[0][0]
        self.field: Field = sample_m.field
        self.n: int = sample_m.n
        self._mat: dict = {}
        self._ext: dict = {}
        self._det: dict = {}

    def _letter_power(self, letter: Letter, p: int) -> Matrix:
        if isinstance(letter, Factored):
            return letter.power(p)
        return letter ** p

    def syllable_matrix(self, s: Syllable) -> Matrix:
        if s not in self._mat:
            img = self.images[s.factor]
            if isinstance(self.alphabet.factors[s.factor], FiniteExt):
                mats, t = img
                M = mats[s.element]
                if s.power:
                    M = M @ self._letter_power(t, s.power)
            else:
                M = self._letter_power(img, s.power)
            self._mat[s] = M
        return self._mat[s]

    def syllable_exterior(self, s: Syllable, k: int) -> Matrix:
        key = (s, k)
        if key not in self._ext:
            img = self.images[s.factor]
            if isinstance(self.alphabet.factors[s.factor], FiniteExt):
                mats, t = img
                E = exterior_power(mats[s.element], k)
                if s.power:
                    E = E @ (t.exterior(k, s.power) if isinstance(t, Factored)
                             else exterior_power(t ** s.power, k))
            elif isinstance(img, Factored):
                E = img.exterior(k, s.power)
            else:
                E = exterior_power(self.syllable_matrix(s), k)
            self._ext[key] = E
        return self._ext[key]

    def syllable_logdet(self, s: Syllable) -> Any:
        if s not in self._det:
            img = self.images[s.factor]
            f = self.field
            if isinstance(self.alphabet.factors[s.factor], FiniteExt):
                mats, t = img
                val = f.log_abs(mats[s.element].det())
                if s.power:
                    val += t.det_log(s.power) if isinstance(t, Factored) else s.power * f.log_abs(t.det())
            elif isinstance(img, Factored):
                val = img.det_log(s.power)
            else:
                val = s.power * f.log_abs(img.det())
            self._det[s] = val
        return self._det[s]

    def evaluate(self, w: Word) -> Matrix:
        M = Matrix.identity(self.field, self.n)
        for s in w:
            M = M @ self.syllable_matrix(s)
        return M

    def apply(self, w: Word, v: Sequence[Any]) -> tuple:
        for s in reversed(w):
            v = self.syllable_matrix(s).apply(v)
        return v


# ---------------------------------------------------------------------------
# Cartan profiles along words
# ---------------------------------------------------------------------------

class CartanTracker:
    """Incremental log singular values of products.

    Archimedean: each exterior power product is kept as (normalized matrix,
    log scale); log sigma_1(wedge^k W) = scale + log ||normalized||, and
    log sigma_k = P_k - P_{k-1}, with log sigma_n from the determinant.
    p-adic: the exact product and its Smith valuations.
    """

    def __init__(self, rep: Representation):
        self.rep = rep
        self.f = rep.field
        self.n = rep.n

    def start(self) -> Any:
        f, n = self.f, self.n
        if not f.archimedean:
            return Matrix.identity(f, n)
        mats = tuple(Matrix.identity(f, math.comb(n, k)) for k in range(1, n))
        return (mats, tuple(f.ctx.zero for _ in range(1, n)), f.ctx.zero)

    def step(self, state: Any, s: Syllable) -> Any:
        f = self.f
        if not f.archimedean:
            return state @ self.rep.syllable_matrix(s)
        mats, scales, logdet = state
        new_m, new_s = [], []
        for k in range(1, self.n):
            M = mats[k - 1] @ self.rep.syllable_exterior(s, k)
            big = max(abs(x) for r in M.rows for x in r)
            new_m.append(M.scale(1 / big))
            new_s.append(scales[k - 1] + f.ctx.log(big))
        return tuple(new_m), tuple(new_s), logdet + self.rep.syllable_logdet(s)

    def log_singular_values(self, state: Any) -> tuple:
        """Nonincreasing log sigma_i; floats (archimedean) or exact multiples of
        log p given as Fraction valuations negated (p-adic: returns -d_i)."""
        if not self.f.archimedean:
            return tuple(-d for d in smith_valuations(state))
        mats, scales, logdet = state
        P = [0.0]
        for M, sc in zip(mats, scales):
            arr = np.array([[complex(x) if self.f.kind == "complex" else float(x) for x in r]
                            for r in M.rows])
            P.append(float(sc) + math.log(np.linalg.norm(arr, 2)))
        P.append(float(logdet))
        return tuple(P[k] - P[k - 1] for k in range(1, self.n + 1))


def log_singular_values(rep: Representation, w: Word) -> tuple:
    tr = CartanTracker(rep)
    st = tr.start()
    for s in w:
        st = tr.step(st, s)
    return tr.log_singular_values(st)


# ---------------------------------------------------------------------------
# gap scans
# ---------------------------------------------------------------------------

QI = "qi"


@dataclass
class GapStat:
    min: float
    max: float
    count: int
    argmin: str
    exact_min: int | None = None  # p-adic: gap in units of log p

    def merge(self, other: "GapStat") -> None:
        if (other.min, other.argmin) < (self.min, self.argmin):
            self.min, self.argmin, self.exact_min = other.min, other.argmin, other.exact_min
        self.max = max(self.max, other.max)
        self.count += other.count


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    stderr: float
    points: int


@dataclass
class GapSeries:
    keys: tuple
    stats: dict            # (L, key) -> GapStat
    counts: dict           # L -> number of words
    fits: dict = dc_field(default_factory=dict)  # key -> Fit
    measure: str = "syllable"

    def lengths(self) -> list[int]:
        return sorted(self.counts)

    def min_gap(self, L: int, key: Any) -> float:
        return self.stats[(L, key)].min

    def fit(self, key: Any, min_length: int = 3) -> Fit:
        Ls = [L for L in self.lengths() if L >= min_length]
        if len(Ls) < 2:
            Ls = self.lengths()
        ys = [self.stats[(L, key)].min for L in Ls]
        if len(Ls) < 2:
            return Fit(0.0, ys[0] if ys else 0.0, math.inf, len(Ls))
        res = stats.linregress(Ls, ys)
        err = float(res.stderr) if len(Ls) > 2 else 0.0
        return Fit(float(res.slope), float(res.intercept), err, len(Ls))

    def to_csv(self) -> str:
        lines = ["length,j,min_log_gap,max_log_gap,count"]
        for L in self.lengths():
            for key in self.keys:
                st = self.stats[(L, key)]
                lines.append(f"{L},{key},{st.min!r},{st.max!r},{st.count}")
        return "\n".join(lines) + "\n"


def _gaps(logs: tuple, keys: Sequence[Any], exact: bool, log_p: float) -> dict:
    out = {}
    for key in keys:
        if key == QI:
            g = logs[0] - logs[-1]
        else:
            g = logs[key - 1] - logs[key]
        out[key] = (float(g) * log_p, int(g)) if exact else (float(g), None)
    return out


def gap_scan(rep: Representation, L: int, js: Sequence[int] = (1,), measure: str = "syllable",
             cap: int = 4, threads: int = 1, budget: int = 10 ** 6) -> GapSeries:
    """min/max of log sigma_j/sigma_{j+1} (and log sigma_1/sigma_n under key 'qi')
    over reduced words, per length, with prefix products shared along the DFS."""
    alphabet = rep.alphabet
    keys = tuple(js) + (QI,)
    tracker = CartanTracker(rep)
    exact = not rep.field.archimedean
    log_p = float(rep.field.log_p) if exact else 1.0
    roots = _children(alphabet, None, 0, L, measure, cap)

    def subtree(root: Syllable) -> tuple[dict, dict]:
        stats_: dict = {}
        counts: dict = {}
        stack = [((root,), tracker.step(tracker.start(), root), _measure(alphabet, root, measure))]
        seen = 0
        while stack:
            w, st, used = stack.pop()
            seen += 1
            if seen > budget:
                raise BudgetExceeded(f"more than {budget} words")
            gaps = _gaps(tracker.log_singular_values(st), keys, exact, log_p)
            name = alphabet.format(w)
            counts[used] = counts.get(used, 0) + 1
            for key, (g, ex) in gaps.items():
                cur = GapStat(g, g, 1, name, ex)
                if (used, key) in stats_:
                    stats_[(used, key)].merge(cur)
                else:
                    stats_[(used, key)] = cur
            kids = _children(alphabet, w[-1].factor, used, L, measure, cap)
            for s in reversed(kids):
                stack.append((w + (s,), tracker.step(st, s), used + _measure(alphabet, s, measure)))
        return stats_, counts

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(subtree, roots))
    else:
        parts = [subtree(r) for r in roots]
    total_stats: dict = {}
    total_counts: dict = {}
    for st, cn in parts:
        for k, v in st.items():
            if k in total_stats:
                total_stats[k].merge(v)
            else:
                total_stats[k] = GapStat(v.min, v.max, v.count, v.argmin, v.exact_min)
        for k, v in cn.items():
            total_counts[k] = total_counts.get(k, 0) + v
    if sum(total_counts.values()) > budget:
        raise BudgetExceeded(f"more than {budget} words")
    series = GapSeries(keys, total_stats, total_counts, measure=measure)
    series.fits = {key: series.fit(key) for key in keys}
    return series


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

SUPPORTED = "SUPPORTED"
REFUTED = "REFUTED-BY-WITNESS"
INCONCLUSIVE = "INCONCLUSIVE"


def eigen_log_moduli(rep: Representation, w: Word) -> tuple:
    """log l_1 >= ... >= log l_n of rep(w).

    Archimedean values use spectral radii of exterior power products
    (accurate for large spreads); p-adic values are exact multiples of
    log p returned as Fraction valuations negated.
    """
    f = rep.field
    n = rep.n
    if not f.archimedean:
        mods = eigen_moduli(rep.evaluate(w))
        return tuple(-v for v in mods.valuations)
    ctx = f.ctx
    P = [ctx.zero]
    for k in range(1, n):
        M = Matrix.identity(f, math.comb(n, k))
        for s in w:
            M = M @ rep.syllable_exterior(s, k)
        if M.n == 1:
            rho = abs(M.rows[0][0])
        else:
            ev = ctx.eig(M.to_mp(), left=False, right=False)
            rho = max(abs(e) for e in ev)
        P.append(ctx.log(rho))
    P.append(sum((rep.syllable_logdet(s) for s in w), ctx.zero))
    return tuple(P[k] - P[k - 1] for k in range(1, n + 1))


@dataclass(frozen=True)
class VerdictEntry:
    j: int
    status: str
    slope: float | None
    fit_error: float | None
    witness: str | None


def find_equal_moduli_witness(rep: Representation, j: int, words: Sequence[Word],
                              tol: Any = None) -> tuple[Word, tuple] | None:
    f = rep.field
    tol = f.tolerance(4) if tol is None else tol
    for w in words:
        if rep.alphabet.is_torsion(w):
            continue
        logs = eigen_log_moduli(rep, w)
        if f.archimedean:
            if abs(logs[j - 1] - logs[j]) <= tol:
                return w, logs
        elif logs[j - 1] == logs[j]:
            return w, logs
    return None


def anosov_verdict(rep: Representation, L: int, js: Sequence[int] | None = None,
                   tol: float = 0.05, measure: str = "syllable", cap: int = 4,
                   witness_syllables: int = 2, witness_cap: int = 2,
                   series: GapSeries | None = None, threads: int = 1) -> dict[int, VerdictEntry]:
    """Per j: a short infinite-order word with l_j = l_{j+1} refutes j-Anosov;
    otherwise SUPPORTED when the fitted min-gap slope is >= tol."""
    n = rep.n
    js = tuple(range(1, n)) if js is None else tuple(js)
    short = enumerate_words(rep.alphabet, witness_syllables, "syllable", witness_cap)
    out: dict[int, VerdictEntry] = {}
    pending = []
    for j in js:
        hit = find_equal_moduli_witness(rep, j, short)
        if hit is not None:
            out[j] = VerdictEntry(j, REFUTED, None, None, rep.alphabet.format(hit[0]))
        else:
            pending.append(j)
    if pending:
        if series is None or any(j not in series.keys for j in pending):
            series = gap_scan(rep, L, pending, measure, cap, threads)
        for j in pending:
            fit = series.fits[j]
            status = SUPPORTED if fit.slope >= tol else INCONCLUSIVE
            out[j] = VerdictEntry(j, status, fit.slope, fit.stderr, None)
    return out


def witness_power_gaps(g: Matrix, j: int, powers: Sequence[int]) -> list:
    """(1/m) log sigma_j/sigma_{j+1} of g^m; tends to log l_j/l_{j+1}."""
    from .matlin import singular_values

    out = []
    for m in powers:
        prof = singular_values(g ** m)
        out.append(prof.log_gap(j) / m)
    return out


# ---------------------------------------------------------------------------
# ping-pong certification
# ---------------------------------------------------------------------------

@dataclass
class PingPongFamily:
    """One side of the ping-pong: perturbed representations of Gamma_i that
    send ``source`` into ``target`` with log-growth >= theta |g| + offset."""

    alphabet: SyllableAlphabet
    sampler: Callable[[np.random.Generator], Representation]
    source: ProjSet
    target: ProjSet
    theta: Any
    offset: Any
    max_syllables: int = 1
    name: str = "family"


@dataclass
class PingPongInstance:
    family_one: PingPongFamily
    family_two: PingPongFamily
    label: str = ""

    def __post_init__(self) -> None:
        for fam in (self.family_one, self.family_two):
            if not fam.theta > 0:
                raise ValueError("expansion rate theta must be positive")


@dataclass
class PingPongCertificate:
    label: str
    syllable_cap: int
    samples: int = 0
    checks: int = 0
    failures: int = 0
    min_target_margin: float = math.inf
    min_log_growth_slack: float = math.inf
    witness: dict | None = None
    seed: int | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.checks > 0

    def merge(self, other: "PingPongCertificate") -> None:
        self.samples += other.samples
        self.checks += other.checks
        self.failures += other.failures
        self.min_target_margin = min(self.min_target_margin, other.min_target_margin)
        self.min_log_growth_slack = min(self.min_log_growth_slack, other.min_log_growth_slack)
        if self.witness is None:
            self.witness = other.witness

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "kind": f"sampled, powers <= {self.syllable_cap}",
            "samples": self.samples,
            "checks": self.checks,
            "failures": self.failures,
            "passed": self.passed,
            "min_target_margin": repr(self.min_target_margin),
            "min_log_growth_slack": repr(self.min_log_growth_slack),
            "witness": self.witness,
            "seed": self.seed,
        }


def run_chunked(total: int, seed: int, fn: Callable[[int, np.random.Generator], Any],
                threads: int = 1, chunk: int = 50) -> list:
    """Split ``total`` samples into fixed chunks with spawned seeds, so the
    outcome does not depend on the thread count."""
    sizes = [min(chunk, total - i) for i in range(0, total, chunk)]
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(k, np.random.default_rng(s)) for k, s in zip(sizes, seqs)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(lambda a: fn(*a), jobs))
    return [fn(*a) for a in jobs]


def _check_family(fam: PingPongFamily, words: Sequence[Word], count: int,
                  rng: np.random.Generator, cert: PingPongCertificate) -> None:
    for _ in range(count):
        rep = fam.sampler(rng)
        f = rep.field
        x = sample(fam.source, 1, rng)[0]
        xn = f.log_norm(x.vec)
        for w in words:
            v = rep.apply(w, x.vec)
            y = ProjPoint(f, normalize(f, v))
            margin = float(set_margin(fam.target, y))
            need = fam.theta * fam.alphabet.word_length(w) + fam.offset
            slack = float(f.log_norm(v) - xn - need)
            cert.checks += 1
            cert.min_target_margin = min(cert.min_target_margin, margin)
            cert.min_log_growth_slack = min(cert.min_log_growth_slack, slack)
            inside = contains(fam.target, y)
            if not inside or slack < 0:
                cert.failures += 1
                if cert.witness is None:
                    cert.witness = {"family": fam.name, "word": fam.alphabet.format(w),
                                    "point": [f.to_json(c) for c in x.vec],
                                    "target_margin": repr(margin), "log_growth_slack": repr(slack)}


def certify_pingpong(instance: PingPongInstance, samples: int, syllable_cap: int = 4,
                     seed: int = 0, threads: int = 1, chunk: int = 50) -> PingPongCertificate:
    """Sampled check of both ping-pong conditions.

    Every sample draws a perturbed representation of each factor family and a
    source point, then tests every nontrivial element of syllable length up to
    the family's ``max_syllables`` with powers up to ``syllable_cap``.
    """
    fams = (instance.family_one, instance.family_two)
    words = [enumerate_words(f.alphabet, f.max_syllables, "syllable", syllable_cap) for f in fams]

    def job(count: int, rng: np.random.Generator) -> PingPongCertificate:
        c = PingPongCertificate(instance.label, syllable_cap, samples=count)
        for fam, ws in zip(fams, words):
            _check_family(fam, ws, count, rng, c)
        return c

    cert = PingPongCertificate(instance.label, syllable_cap, seed=seed)
    for part in run_chunked(samples, seed, job, threads, chunk):
        cert.merge(part)
    return cert
