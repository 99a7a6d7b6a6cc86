"""Exact Gaussian-rational scalars and the small amount of exact linear algebra
the rest of the package needs (dense Gauss-Jordan, sparse row reduction)."""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable

try:  # gmpy2 rationals are an order of magnitude faster than Fraction
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction

__all__ = [
    "Scalar",
    "ZERO",
    "ONE",
    "I",
    "as_scalar",
    "parse_scalar",
    "identity",
    "mat_mul",
    "mat_inverse",
    "rref",
    "sparse_rref",
]

_F0 = Q(0)


def _to_q(x):
    if type(x) is Q:
        return x
    if isinstance(x, Fraction):  # Fraction(mpq) carries mpz parts that mpq() rejects
        return Q(x.numerator, x.denominator)
    return Q(x)
_F1 = Q(1)


class Scalar:
    """Element of Q(i): an exact complex number with rational parts.

    Instances are immutable; both parts are kept in lowest terms with a
    positive denominator (gmpy2 ``mpq`` when available, else Fraction).

    >>> Scalar(1, 2) * Scalar(1, -2)
    Scalar('5')
    >>> parse_scalar("1/3+2/5i").im == Fraction(2, 5)
    True
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _to_q(re)
        self.im = _to_q(im)

    @classmethod
    def _raw(cls, re, im) -> "Scalar":
        s = object.__new__(cls)
        s.re = re
        s.im = im
        return s

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if type(other) is not Scalar:
            other = _coerce(other)
            if other is None:
                return NotImplemented
        return Scalar._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if type(other) is not Scalar:
            other = _coerce(other)
            if other is None:
                return NotImplemented
        return Scalar._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        if type(other) is not Scalar:
            other = _coerce(other)
            if other is None:
                return NotImplemented
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b:
            if not d:
                return Scalar._raw(a * c, _F0)
            return Scalar._raw(a * c, a * d)
        if not d:
            return Scalar._raw(a * c, b * c)
        return Scalar._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if type(other) is not Scalar:
            other = _coerce(other)
            if other is None:
                return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def __neg__(self):
        return Scalar._raw(-self.re, -self.im)

    def __pos__(self):
        return self

    def conj(self) -> "Scalar":
        return Scalar._raw(self.re, -self.im)

    def inverse(self) -> "Scalar":
        if not self.im:
            if not self.re:
                raise ZeroDivisionError("inverse of zero Scalar")
            return Scalar._raw(1 / self.re, _F0)
        n = self.re * self.re + self.im * self.im
        return Scalar._raw(self.re / n, -self.im / n)

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # comparisons ----------------------------------------------------------
    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if type(other) is not Scalar:
            other = _coerce(other)
            if other is None:
                return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    @property
    def is_real(self) -> bool:
        return not self.im

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __float__(self):
        if self.im:
            raise TypeError("cannot convert non-real Scalar to float")
        return float(self.re)

    # text -----------------------------------------------------------------
    def __str__(self):
        if not self.im:
            return str(self.re)
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"

    def __repr__(self):
        return f"Scalar('{self}')"


def _coerce(x):
    if type(x) is Scalar:
        return x
    if isinstance(x, (int, Fraction, type(_F0))):
        return Scalar._raw(Q(x), _F0)
    if isinstance(x, str):
        return parse_scalar(x)
    return None


def as_scalar(x) -> Scalar:
    """Convert int, Fraction, Scalar or complex literal string to a Scalar."""
    s = _coerce(x)
    if s is None:
        raise TypeError(f"cannot convert {type(x).__name__} to an exact Scalar")
    return s


ZERO = Scalar._raw(_F0, _F0)
ONE = Scalar._raw(_F1, _F0)
I = Scalar._raw(_F0, _F1)

_RAT = r"(\d+)(?:/(\d+))?"
_LITERAL = re.compile(rf"^([+-]?){_RAT}(?:([+-]){_RAT}i)?$")


def _rational(num: str, den: str | None, literal: str):
    p = int(num)
    if den is None:
        return Q(p)
    q = int(den)
    if q == 0:
        raise ValueError(f"zero denominator in {literal!r}")
    f = Q(p, q)
    if f.denominator != q and p != 0:
        raise ValueError(f"{num}/{den} is not in lowest terms in {literal!r}")
    return f


def parse_scalar(text: str) -> Scalar:
    """Parse ``"<rat>"``, ``"<rat>+<rat>i"`` or ``"<rat>-<rat>i"``."""
    from .errors import StructureParseError

    literal = text.strip().replace(" ", "")
    m = _LITERAL.match(literal)
    if m is None:
        raise StructureParseError(f"malformed complex literal {text!r}")
    sign, p, q, isign, ip, iq = m.groups()
    try:
        re_part = _rational(p, q, text)
        im_part = _rational(ip, iq, text) if ip is not None else _F0
    except ValueError as exc:
        raise StructureParseError(str(exc)) from None
    if sign == "-":
        re_part = -re_part
    if isign == "-":
        im_part = -im_part
    return Scalar._raw(re_part, im_part)


# dense matrices: list of rows of Scalars ------------------------------------

def identity(n: int) -> list[list[Scalar]]:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def mat_mul(a, b):
    inner = len(b)
    cols = len(b[0]) if b else 0
    out = []
    for row in a:
        new = [ZERO] * cols
        for k in range(inner):
            x = row[k]
            if not x:
                continue
            bk = b[k]
            for j in range(cols):
                if bk[j]:
                    new[j] = new[j] + x * bk[j]
        out.append(new)
    return out


def mat_inverse(a):
    """Gauss-Jordan inverse; raises ZeroDivisionError when singular."""
    n = len(a)
    work = [list(row) + identity(n)[i] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if work[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        work[col], work[piv] = work[piv], work[col]
        inv = work[col][col].inverse()
        work[col] = [x * inv for x in work[col]]
        for r in range(n):
            if r != col and work[r][col]:
                f = work[r][col]
                work[r] = [x - f * y for x, y in zip(work[r], work[col])]
    return [row[n:] for row in work]


def rref(rows):
    """Reduced row echelon form of a dense matrix.

    Returns ``(nonzero_rows, pivot_columns)``.
    """
    work = [list(r) for r in rows]
    ncols = len(work[0]) if work else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(work)) if work[i][c]), None)
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        inv = work[r][c].inverse()
        work[r] = [x * inv for x in work[r]]
        for i in range(len(work)):
            if i != r and work[i][c]:
                f = work[i][c]
                work[i] = [x - f * y for x, y in zip(work[i], work[r])]
        pivots.append(c)
        r += 1
    return work[:r], pivots


def sparse_rref(rows: Iterable[dict], key=None):
    """Reduced row echelon form of sparse rows (``dict column -> Scalar``).

    Columns are ordered by ``key`` (natural order by default); the pivot of
    a row is its smallest column.  Returns a list of ``(pivot, row)`` sorted
    by pivot, every row normalised to a unit pivot and cleared in all other
    pivot columns.
    """
    key = key or (lambda c: c)
    basis: dict = {}
    for raw in rows:
        row = {c: v for c, v in raw.items() if v}
        while row:
            lead = min(row, key=key)
            prow = basis.get(lead)
            if prow is None:
                inv = row[lead].inverse()
                basis[lead] = {c: v * inv for c, v in row.items()}
                break
            f = row[lead]
            for c, v in prow.items():
                nv = row.get(c, ZERO) - f * v
                if nv:
                    row[c] = nv
                else:
                    row.pop(c, None)
    order = sorted(basis, key=key)
    # back-substitution, largest pivots first
    for idx in range(len(order) - 1, -1, -1):
        p = order[idx]
        row = basis[p]
        for q in order[idx + 1:]:
            f = row.get(q)
            if f:
                for c, v in basis[q].items():
                    nv = row.get(c, ZERO) - f * v
                    if nv:
                        row[c] = nv
                    else:
                        row.pop(c, None)
    return [(p, basis[p]) for p in order]
