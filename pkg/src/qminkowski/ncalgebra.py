"""The coordinate algebra: noncommutative polynomials in x^0..x^{N-1} modulo

    (R - 1)^{ij}_{kl} (x^k x^l - Z^{kl}_s x^s + T^{kl}) = 0,

kept in a canonical normal form computed by filtration-level row reduction
over the free-algebra monomial basis (graded lexicographic, x^0 < x^1 < ...).
"""

from __future__ import annotations

import heapq
import re
import warnings
from itertools import product
from math import comb
from typing import Iterator, Mapping

from .errors import CutoffExceeded, StarUndefined
from .exact import ONE, ZERO, Scalar, as_scalar, parse_scalar, sparse_rref
from .structures import StructureData

__all__ = [
    "Word",
    "NCPoly",
    "NormalFormEngine",
    "StructureWarning",
    "build_engine",
    "relation_generators",
    "word_key",
    "format_poly",
    "parse_poly",
]

Word = tuple  # tuple[int, ...]


class StructureWarning(UserWarning):
    """Quotient dimensions differ from the classical commutative count."""


def word_key(w: Word):
    """Graded lexicographic sort key."""
    return (len(w), w)


def _neg_key(w: Word):
    return (-len(w), tuple(-c for c in w))


def relation_generators(sd: StructureData) -> list[dict]:
    """Raw relation elements q_beta, one per row of a basis of the row space of R - 1.

    Each is a dict ``word -> Scalar`` in the free algebra.
    """
    n = sd.n
    size = n * n
    rows = []
    for i in range(size):
        row = {}
        for k in range(size):
            v = sd.r[i][k] - (ONE if i == k else ZERO)
            if v:
                row[k] = v
        if row:
            rows.append(row)
    basis = sparse_rref(rows)
    gens = []
    for _, beta in basis:
        q: dict = {}
        for kl, b in beta.items():
            k, l = divmod(kl, n)
            _acc(q, (k, l), b)
            for s in range(n):
                z = sd.Z(k, l, s)
                if z:
                    _acc(q, (s,), -b * z)
            t = sd.T(k, l)
            if t:
                _acc(q, (), b * t)
        gens.append({w: c for w, c in q.items() if c})
    return gens


def _acc(d: dict, key, value):
    nv = d.get(key, ZERO) + value
    if nv:
        d[key] = nv
    else:
        d.pop(key, None)


class NCPoly:
    """Element of the coordinate algebra, always held in normal form.

    Supports ``+``, ``-``, ``*`` (with polynomials and exact scalars) and
    equality.  Construct through a :class:`NormalFormEngine`.
    """

    __slots__ = ("engine", "terms")

    def __init__(self, engine: "NormalFormEngine", terms: Mapping):
        self.engine = engine
        self.terms = terms

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def coefficient(self, word: Word) -> Scalar:
        return self.terms.get(tuple(word), ZERO)

    def __iter__(self):
        return iter(sorted(self.terms.items(), key=lambda kv: word_key(kv[0])))

    def __add__(self, other):
        other = self.engine.coerce(other)
        if other is None:
            return NotImplemented
        out = dict(self.terms)
        for w, c in other.terms.items():
            _acc(out, w, c)
        return NCPoly(self.engine, out)

    __radd__ = __add__

    def __neg__(self):
        return NCPoly(self.engine, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        other = self.engine.coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self.engine.coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        if isinstance(other, NCPoly):
            return self.engine.multiply(self, other)
        try:
            s = as_scalar(other)
        except TypeError:
            return NotImplemented
        return self.scale(s)

    def __rmul__(self, other):
        try:
            s = as_scalar(other)
        except TypeError:
            return NotImplemented
        return self.scale(s)

    def scale(self, s) -> "NCPoly":
        s = as_scalar(s)
        if not s:
            return self.engine.zero()
        return NCPoly(self.engine, {w: c * s for w, c in self.terms.items()})

    def __pow__(self, k: int):
        out = self.engine.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, NCPoly):
            return self.terms == other.terms
        other = self.engine.coerce(other)
        if other is None:
            return NotImplemented
        return self.terms == other.terms

    __hash__ = None

    def __str__(self):
        return format_poly(self.terms)

    def __repr__(self):
        return f"NCPoly({self})"


class NormalFormEngine:
    """Per-degree row reduction of the two-sided ideal of the relations.

    For every degree ``d <= cutoff`` the span of ``m_L q_beta m_R`` with total
    degree ``<= d`` is echelonised over the free monomials ordered by
    :func:`word_key`, pivot = largest monomial.  Monomials that are never a
    pivot form the canonical complement, and the normal form of a word is its
    unique representative on that complement.
    """

    def __init__(self, sd: StructureData, *, check_dimensions: bool = True):
        if sd.degree_cutoff < 2:
            raise CutoffExceeded(f"degree cutoff {sd.degree_cutoff} < 2")
        self.sd = sd
        self.n = sd.n
        self.cutoff = sd.degree_cutoff
        self.relations = relation_generators(sd)
        self._pivots: dict = {}
        self._nf: dict = {}
        # I_d = I_{d-1} + sum_i x^i I_{d-1} + q_beta * (words of length d-2).
        # Rows found at earlier levels already have their left multiples in
        # I_{d-1}, so only the rows new at level d-1 get multiplied.
        previous: list = []
        for d in range(2, self.cutoff + 1):
            self._new_rows = []
            for q in self.relations:
                for mr in product(range(self.n), repeat=d - 2):
                    self._insert({w + mr: c for w, c in q.items()})
            for row in previous:
                for i in range(self.n):
                    self._insert({(i,) + w: c for w, c in row.items()})
            previous = self._new_rows
        del self._new_rows
        self.dimensions = tuple(self._count_standard(d) for d in range(self.cutoff + 1))
        self.classical_dimensions = tuple(comb(self.n + d - 1, d) for d in range(self.cutoff + 1))
        self._star_checked = False
        if check_dimensions and self.dimensions != self.classical_dimensions:
            warnings.warn(
                f"quotient dimensions {self.dimensions} differ from the classical "
                f"{self.classical_dimensions}",
                StructureWarning,
                stacklevel=2,
            )

    # construction ---------------------------------------------------------
    def _insert(self, row: dict):
        pivots = self._pivots
        while row:
            lead = max(row, key=word_key)
            prow = pivots.get(lead)
            c = row[lead]
            if prow is None:
                inv = c.inverse()
                new = {w: v * inv for w, v in row.items()}
                pivots[lead] = new
                self._new_rows.append(new)
                return
            nc = -c
            get = row.get
            for w, v in prow.items():
                x = get(w)
                nv = nc * v if x is None else x + nc * v
                if nv:
                    row[w] = nv
                else:
                    del row[w]

    def _count_standard(self, d: int) -> int:
        piv = sum(1 for w in self._pivots if len(w) == d)
        return self.n ** d - piv

    def standard_words(self, d: int) -> list:
        """Complement monomials of degree d in increasing order."""
        return [w for w in product(range(self.n), repeat=d) if w not in self._pivots]

    def monomial_basis(self, max_degree: int) -> list:
        out = []
        for d in range(max_degree + 1):
            out.extend(self.standard_words(d))
        return out

    def rewrite_rule(self, word: Word) -> "NCPoly":
        """Normal form of a single word (e.g. the rewrite ``x1 x0 -> ...``)."""
        return NCPoly(self, self.nf_word(tuple(word)))

    # normal forms -----------------------------------------------------------
    def nf_word(self, w: Word) -> dict:
        """Normal form of a free monomial as ``dict word -> Scalar`` (read only)."""
        hit = self._nf.get(w)
        if hit is not None:
            return hit
        if len(w) > self.cutoff:
            raise CutoffExceeded(f"degree {len(w)} exceeds cutoff {self.cutoff}")
        prow = self._pivots.get(w)
        if prow is None:
            out = {w: ONE}
        else:
            out = {}
            for w2, v in prow.items():
                if w2 == w:
                    continue
                for w3, c3 in self.nf_word(w2).items():
                    _acc(out, w3, -v * c3)
        self._nf[w] = out
        return out

    def normal_form(self, p) -> NCPoly:
        """Normal form of an NCPoly or a raw mapping ``word -> coefficient``."""
        terms = p.terms if isinstance(p, NCPoly) else p
        out: dict = {}
        for w, c in terms.items():
            c = as_scalar(c)
            if not c:
                continue
            for w2, c2 in self.nf_word(tuple(w)).items():
                _acc(out, w2, c * c2)
        return NCPoly(self, out)

    def reduce_by_heap(self, terms: Mapping) -> dict:
        """Normal form by top-down reduction against the raw pivot rows.

        Independent of the memoised word table; used to cross-check it.
        """
        work = {tuple(w): as_scalar(c) for w, c in terms.items() if as_scalar(c)}
        heap = [_neg_key(w) + (w,) for w in work]
        heapq.heapify(heap)
        out = {}
        while heap:
            *_, w = heapq.heappop(heap)
            c = work.pop(w, None)
            if c is None:
                continue
            if len(w) > self.cutoff:
                raise CutoffExceeded(f"degree {len(w)} exceeds cutoff {self.cutoff}")
            prow = self._pivots.get(w)
            if prow is None:
                out[w] = c
                continue
            for w2, v in prow.items():
                if w2 == w:
                    continue
                new = w2 not in work
                _acc(work, w2, -c * v)
                if new and w2 in work:
                    heapq.heappush(heap, _neg_key(w2) + (w2,))
        return out

    # constructors -------------------------------------------------------------
    def zero(self) -> NCPoly:
        return NCPoly(self, {})

    def one(self) -> NCPoly:
        return NCPoly(self, {(): ONE})

    def scalar(self, c) -> NCPoly:
        c = as_scalar(c)
        return NCPoly(self, {(): c} if c else {})

    def gen(self, i: int) -> NCPoly:
        if not 0 <= i < self.n:
            raise IndexError(f"generator index {i} out of range")
        return self.normal_form({(i,): ONE})

    def word(self, w) -> NCPoly:
        return self.normal_form({tuple(w): ONE})

    def coerce(self, x):
        if isinstance(x, NCPoly):
            return x
        try:
            return self.scalar(x)
        except TypeError:
            return None

    def parse(self, text: str) -> NCPoly:
        return self.normal_form(parse_poly(text, self.n))

    # algebra ----------------------------------------------------------------
    def multiply(self, a: NCPoly, b: NCPoly) -> NCPoly:
        if a.degree + b.degree > self.cutoff:
            raise CutoffExceeded(
                f"product degree {a.degree + b.degree} exceeds cutoff {self.cutoff}"
            )
        out: dict = {}
        for u, cu in a.terms.items():
            for v, cv in b.terms.items():
                c = cu * cv
                for w, cw in self.nf_word(u + v).items():
                    _acc(out, w, c * cw)
        return NCPoly(self, out)

    def left_gen_mul(self, i: int, terms: Mapping) -> dict:
        """x^i * p for p given by normal-form terms; returns terms."""
        out: dict = {}
        for w, c in terms.items():
            for w2, c2 in self.nf_word((i,) + w).items():
                _acc(out, w2, c * c2)
        return out

    def star(self, a: NCPoly) -> NCPoly:
        """Antilinear antihomomorphism with x^i* = x^i."""
        self.check_star()
        return self._star_raw(a.terms)

    def _star_raw(self, terms: Mapping) -> NCPoly:
        out: dict = {}
        for w, c in terms.items():
            cc = c.conj()
            for w2, c2 in self.nf_word(tuple(reversed(w))).items():
                _acc(out, w2, cc * c2)
        return NCPoly(self, out)

    def check_star(self):
        """Verify star maps every relation generator into the ideal (run once)."""
        if self._star_checked:
            return
        for q in self.relations:
            img = self._star_raw(q)
            if img:
                raise StarUndefined(
                    f"star of relation {format_poly(q)} reduces to {img}, not 0"
                )
        self._star_checked = True

    def star_defined(self) -> bool:
        try:
            self.check_star()
        except StarUndefined:
            return False
        return True

    def iter_monomials(self, max_degree: int) -> Iterator[NCPoly]:
        for w in self.monomial_basis(max_degree):
            yield NCPoly(self, {w: ONE})


def build_engine(sd: StructureData, **kw) -> NormalFormEngine:
    """Validate ``sd`` and build its normal-form engine."""
    sd.require_valid()
    return NormalFormEngine(sd, **kw)


# ---------------------------------------------------------------------------
# text syntax:  (3/2+1/2i)*x0*x2*x1 + (-1)*x3 + (5)

def format_poly(terms: Mapping) -> str:
    items = sorted(((w, c) for w, c in terms.items() if c), key=lambda kv: word_key(kv[0]))
    if not items:
        return "0"
    parts = []
    for w, c in items:
        if w:
            parts.append(f"({c})*" + "*".join(f"x{k}" for k in w))
        else:
            parts.append(f"({c})")
    return " + ".join(parts)


_TOKEN = re.compile(r"\s*(?:(\()|(\))|(\*)|([+-])|x(\d+)|(\d+(?:/\d+)?))")


def parse_poly(text: str, n: int | None = None) -> dict:
    """Parse the polynomial text syntax into raw ``word -> Scalar`` terms.

    Terms are ``+``/``-`` separated products of factors; a factor is a
    parenthesised complex literal, a bare rational or a generator ``x<k>``.
    """
    from .errors import StructureParseError

    pos = 0
    tokens = []
    s = text.strip()
    while pos < len(s):
        if s[pos].isspace():
            pos += 1
            continue
        if s[pos] == "(":
            end = s.find(")", pos)
            if end < 0:
                raise StructureParseError(f"unbalanced parenthesis in {text!r}")
            tokens.append(("coef", parse_scalar(s[pos + 1:end])))
            pos = end + 1
            continue
        m = _TOKEN.match(s, pos)
        if m is None or m.end() == pos:
            raise StructureParseError(f"cannot parse polynomial near {s[pos:]!r}")
        pos = m.end()
        if m.group(3):
            tokens.append(("*", None))
        elif m.group(4):
            tokens.append(("sign", m.group(4)))
        elif m.group(5) is not None:
            k = int(m.group(5))
            if n is not None and k >= n:
                raise StructureParseError(f"generator x{k} out of range for N={n}")
            tokens.append(("x", k))
        elif m.group(6):
            tokens.append(("coef", parse_scalar(m.group(6))))
        else:
            raise StructureParseError(f"unexpected ')' in {text!r}")

    out: dict = {}
    i = 0
    if not tokens:
        raise StructureParseError("empty polynomial")
    while i < len(tokens):
        sign = ONE
        while i < len(tokens) and tokens[i][0] == "sign":
            if tokens[i][1] == "-":
                sign = -sign
            i += 1
        coef = sign
        word = []
        expect_factor = True
        while i < len(tokens) and tokens[i][0] != "sign":
            kind, val = tokens[i]
            if kind == "*":
                if expect_factor:
                    raise StructureParseError(f"dangling '*' in {text!r}")
                expect_factor = True
            else:
                if not expect_factor:
                    raise StructureParseError(f"missing '*' in {text!r}")
                if kind == "coef":
                    coef = coef * val
                else:
                    word.append(val)
                expect_factor = False
            i += 1
        if expect_factor:
            raise StructureParseError(f"incomplete term in {text!r}")
        _acc(out, tuple(word), coef)
    return out
