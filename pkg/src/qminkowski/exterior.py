"""Exterior algebra: R-antisymmetrizers A_n, n-forms over a basis of im A_n,
wedge product, exterior derivative and the graded star.

A_n = (1/n!) sum_pi (-1)^{len pi} R_{n pi}, where R_{n pi} is the product of
the R_{nk} = 1 (x) .. (x) R (x) .. (x) 1 along a reduced word of pi.  Writing
A_n = P Q with Q the reduced row echelon rows of A_n and P the matching pivot
columns, Q P = 1 and

    dx^J a_J  ==  omega^g c_g,   omega^g = Q_{gK} dx^K,   c = P^T a.
"""

from __future__ import annotations

from math import factorial

from .calculus import Calculus, OneForm
from .errors import SizeExceeded, StructureInvalidError
from .exact import ONE, ZERO, Scalar, sparse_rref
from .ncalgebra import NCPoly, _acc
from .structures import StructureData

__all__ = [
    "Antisymmetrizer",
    "build_antisymmetrizer",
    "permutation_words",
    "Exterior",
    "Form",
    "MAX_ENTRIES",
]

MAX_ENTRIES = 10 ** 6
DEFAULT_MAX_DEGREE = 6


def permutation_words(n: int) -> dict:
    """Every permutation of range(n) (one-line tuple) with a reduced word.

    A word ``(k1, .., ks)`` means ``t_{k1} .. t_{ks}`` with ``t_k`` swapping
    positions k and k+1 (0-based).  Built breadth first by length, trying
    k in increasing order, so the result is deterministic.
    """
    ident = tuple(range(n))
    words = {ident: ()}
    level = [ident]
    while level:
        nxt = []
        for perm in level:
            for k in range(n - 1):
                if perm[k] < perm[k + 1]:
                    new = perm[:k] + (perm[k + 1], perm[k]) + perm[k + 2:]
                    if new not in words:
                        words[new] = words[perm] + (k,)
                        nxt.append(new)
        level = nxt
    return words


def _r_entries(sd: StructureData):
    """(a, b) -> [((c, d), R^{ab}_{cd})] for the nonzero entries."""
    n = sd.n
    out = {}
    for a in range(n):
        for b in range(n):
            out[(a, b)] = [((c, d), sd.R(a, b, c, d))
                           for c in range(n) for d in range(n) if sd.R(a, b, c, d)]
    return out


def _times_rk(mat: dict, k: int, rent) -> dict:
    """mat * R_{nk} for a sparse matrix ``row -> {col -> Scalar}``."""
    out = {}
    for row_idx, row in mat.items():
        new: dict = {}
        for col, v in row.items():
            for (c, d), r in rent[(col[k], col[k + 1])]:
                _acc(new, col[:k] + (c, d) + col[k + 2:], v * r)
        if new:
            out[row_idx] = new
    return out


def _rk_times(k: int, mat: dict, rent) -> dict:
    """R_{nk} * mat."""
    out: dict = {}
    for row_idx, row in mat.items():
        for (c, d), r in rent[(row_idx[k], row_idx[k + 1])]:
            tgt = out.setdefault(row_idx[:k] + (c, d) + row_idx[k + 2:], {})
            for col, v in row.items():
                _acc(tgt, col, r * v)
    return {i: r for i, r in out.items() if r}


def _matmul(a: dict, b: dict) -> dict:
    out = {}
    for i, row in a.items():
        new: dict = {}
        for k, v in row.items():
            brow = b.get(k)
            if brow:
                for j, w in brow.items():
                    _acc(new, j, v * w)
        if new:
            out[i] = new
    return out


def _scaled(mat: dict, s: Scalar) -> dict:
    return {i: {j: v * s for j, v in row.items()} for i, row in mat.items()}


class Antisymmetrizer:
    """A_n together with its rank factorisation A_n = P Q.

    ``matrix`` maps a row index tuple to ``{column tuple: Scalar}``;
    ``rows[g]`` is the functional Q_g (the dual basis element with
    Q_g A_n = Q_g) and ``pivots[g]`` its pivot column; ``columns[J][g]`` is
    P_{J g} (the basis of im A_n).
    """

    def __init__(self, n: int, degree: int, matrix: dict, rows, pivots, columns):
        self.n = n
        self.degree = degree
        self.matrix = matrix
        self.rows = rows
        self.pivots = pivots
        self.columns = columns

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def size(self) -> int:
        return self.n ** self.degree

    def entry(self, row: tuple, col: tuple) -> Scalar:
        return self.matrix.get(row, {}).get(col, ZERO)

    def project(self, words: dict) -> list:
        """Coefficients c = P^T a of the form dx^J a_J (values may be raw term dicts)."""
        out = [dict() for _ in range(self.rank)]
        for J, terms in words.items():
            col = self.columns.get(J)
            if not col:
                continue
            for g, p in col.items():
                for w, c in terms.items():
                    _acc(out[g], w, p * c)
        return out

    def reconstruct(self) -> dict:
        """P Q, which must equal A_n."""
        out = {}
        for J, col in self.columns.items():
            new: dict = {}
            for g, p in col.items():
                for K, q in self.rows[g].items():
                    _acc(new, K, p * q)
            if new:
                out[J] = new
        return out


def build_antisymmetrizer(sd: StructureData, n: int, *, max_degree: int = DEFAULT_MAX_DEGREE,
                          check: bool = True) -> Antisymmetrizer:
    """Exact A_n for the structure's R.

    Raises SizeExceeded when N^n > 10^6 or n > max_degree, and
    StructureInvalidError when the sum over reduced words is not an
    antisymmetrizing projector (R fails the braid relation).
    """
    N = sd.n
    if n < 0:
        raise ValueError("degree must be non-negative")
    if n > max_degree or N ** n > MAX_ENTRIES:
        raise SizeExceeded(f"A_{n} has {N}^{n} rows; limits are n <= {max_degree}, "
                           f"N^n <= {MAX_ENTRIES}")
    rent = _r_entries(sd)
    basis = [()]
    for _ in range(n):
        basis = [b + (i,) for b in basis for i in range(N)]
    ident = {J: {J: ONE} for J in basis}

    total: dict = {}
    cache = {tuple(range(n)): ident}
    for perm, word in permutation_words(n).items():
        if word:
            parent = list(perm)
            k = word[-1]
            parent[k], parent[k + 1] = parent[k + 1], parent[k]
            mat = _times_rk(cache[tuple(parent)], k, rent)
            cache[perm] = mat
        else:
            mat = ident
        sign = ONE if len(word) % 2 == 0 else -ONE
        for J, row in mat.items():
            tgt = total.setdefault(J, {})
            for K, v in row.items():
                _acc(tgt, K, sign * v)
    scale = Scalar(1) / factorial(n)
    matrix = _scaled({J: r for J, r in total.items() if r}, scale)

    if check and n >= 2:
        if _matmul(matrix, matrix) != matrix:
            raise StructureInvalidError(f"A_{n} is not idempotent; R violates the braid relation")
        minus = _scaled(matrix, -ONE)
        for k in range(n - 1):
            if _times_rk(matrix, k, rent) != minus or _rk_times(k, matrix, rent) != minus:
                raise StructureInvalidError(
                    f"R_{{{n},{k + 1}}} A_{n} != -A_{n}; R violates the braid relation"
                )

    echelon = sparse_rref(list(matrix.values()))
    pivots = [p for p, _ in echelon]
    rows = [r for _, r in echelon]
    columns: dict = {}
    for J, row in matrix.items():
        col = {g: row[p] for g, p in enumerate(pivots) if p in row}
        if col:
            columns[J] = col
    return Antisymmetrizer(N, n, matrix, rows, pivots, columns)


class Form:
    """A degree-n form omega^g c_g with right coefficients c_g in the coordinate algebra."""

    __slots__ = ("ext", "degree", "coeffs")

    def __init__(self, ext: "Exterior", degree: int, coeffs):
        self.ext = ext
        self.degree = degree
        self.coeffs = tuple(coeffs)

    def words(self) -> dict:
        """Canonical word expansion {J: a_J} with a = Q^T c."""
        A = self.ext.antisymmetrizer(self.degree)
        out: dict = {}
        for g, c in enumerate(self.coeffs):
            if not c:
                continue
            for J, q in A.rows[g].items():
                tgt = out.setdefault(J, {})
                for w, v in c.terms.items():
                    _acc(tgt, w, q * v)
        eng = self.ext.engine
        return {J: NCPoly(eng, t) for J, t in out.items() if t}

    def _check(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        if other.degree != self.degree:
            raise ValueError(f"cannot add forms of degree {self.degree} and {other.degree}")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Form(self.ext, self.degree, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Form(self.ext, self.degree, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self):
        return Form(self.ext, self.degree, [-a for a in self.coeffs])

    def __mul__(self, b):
        """Right multiplication by a polynomial or scalar."""
        b = self.ext.engine.coerce(b)
        if b is None:
            return NotImplemented
        return Form(self.ext, self.degree, [a * b for a in self.coeffs])

    def __rmul__(self, a):
        """Left multiplication by a polynomial or scalar."""
        a = self.ext.engine.coerce(a)
        if a is None:
            return NotImplemented
        return self.ext.wedge(self.ext.function(a), self)

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return self.degree == other.degree and self.coeffs == other.coeffs

    __hash__ = None

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __str__(self):
        parts = []
        for J, a in sorted(self.words().items()):
            name = "^".join(f"dx{j}" for j in J) or "1"
            parts.append(f"{name}*[{a}]")
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__


class Exterior:
    """Forms of every degree over one calculus; antisymmetrizers built on demand."""

    def __init__(self, calc: Calculus, *, max_degree: int = DEFAULT_MAX_DEGREE):
        self.calc = calc
        self.engine = calc.engine
        self.sd = calc.sd
        self.n = calc.n
        self.max_degree = max_degree
        self._antisym: dict = {}

    def antisymmetrizer(self, degree: int) -> Antisymmetrizer:
        A = self._antisym.get(degree)
        if A is None:
            A = build_antisymmetrizer(self.sd, degree, max_degree=self.max_degree)
            self._antisym[degree] = A
        return A

    def rank(self, degree: int) -> int:
        return self.antisymmetrizer(degree).rank

    # constructors -------------------------------------------------------------
    def from_words(self, degree: int, words: dict) -> Form:
        """Project dx^J a_J (any representative) onto the basis of im A_n."""
        A = self.antisymmetrizer(degree)
        raw = {}
        for J, a in words.items():
            if len(J) != degree:
                raise ValueError(f"word {J} does not have length {degree}")
            a = self.engine.coerce(a)
            raw[tuple(J)] = a.terms
        return Form(self, degree, [NCPoly(self.engine, t) for t in A.project(raw)])

    def _from_raw(self, degree: int, raw: dict) -> Form:
        A = self.antisymmetrizer(degree)
        return Form(self, degree, [NCPoly(self.engine, t) for t in A.project(raw)])

    def function(self, a) -> Form:
        return Form(self, 0, [self.engine.coerce(a)])

    def dx(self, *J) -> Form:
        """dx^{j1} ^ .. ^ dx^{jn}."""
        return self.from_words(len(J), {tuple(J): self.engine.one()})

    def zero(self, degree: int) -> Form:
        return Form(self, degree, [self.engine.zero()] * self.rank(degree))

    def from_oneform(self, omega: OneForm) -> Form:
        return self.from_words(1, {(i,): c for i, c in enumerate(omega.coeffs)})

    def to_oneform(self, form: Form) -> OneForm:
        if form.degree != 1:
            raise ValueError("only degree-1 forms convert to OneForm")
        w = form.words()
        return OneForm(self.calc, [w.get((i,), self.engine.zero()) for i in range(self.n)])

    # module structure -------------------------------------------------------
    def move_right(self, terms: dict, L: tuple) -> dict:
        """a dx^L = sum_M dx^M c_M for a polynomial a given by raw terms."""
        calc = self.calc
        cur = {(): terms}
        for l in L:
            nxt: dict = {}
            for M, t in cur.items():
                for m in range(self.n):
                    r = calc._linear(t, lambda w, m=m, l=l: calc._rho_word(w)[m][l])
                    if r:
                        tgt = nxt.setdefault(M + (m,), {})
                        for w, c in r.items():
                            _acc(tgt, w, c)
            cur = {M: t for M, t in nxt.items() if t}
        return cur

    def _wedge_raw(self, left: dict, right: dict) -> dict:
        out: dict = {}
        for J, a in left.items():
            for L, b in right.items():
                for M, c in self.move_right(a, L).items():
                    prod = self.calc._mul(c, b)
                    if prod:
                        tgt = out.setdefault(J + M, {})
                        for w, v in prod.items():
                            _acc(tgt, w, v)
        return out

    def wedge(self, omega: Form, theta: Form) -> Form:
        left = {J: a.terms for J, a in omega.words().items()}
        right = {L: b.terms for L, b in theta.words().items()}
        return self._from_raw(omega.degree + theta.degree, self._wedge_raw(left, right))

    def d(self, omega: Form) -> Form:
        """d(dx^J a_J) = (-1)^n dx^J ^ da_J."""
        n = omega.degree
        sign = ONE if n % 2 == 0 else -ONE
        raw: dict = {}
        for J, a in omega.words().items():
            for i in range(self.n):
                p = self.calc.partial(i, a)
                if p:
                    tgt = raw.setdefault(J + (i,), {})
                    for w, c in p.terms.items():
                        _acc(tgt, w, sign * c)
        return self._from_raw(n + 1, raw)

    def star_form(self, omega: Form) -> Form:
        """(dx^I a_I)^* = (-1)^{n(n-1)/2} a_I^* dx^{I reversed}."""
        self.calc.check_star()
        n = omega.degree
        sign = ONE if (n * (n - 1) // 2) % 2 == 0 else -ONE
        raw: dict = {}
        for I, a in omega.words().items():
            a_star = self.engine.star(a)
            for M, c in self.move_right(a_star.terms, tuple(reversed(I))).items():
                tgt = raw.setdefault(M, {})
                for w, v in c.items():
                    _acc(tgt, w, sign * v)
        return self._from_raw(n, raw)

    # consistency of the two-form relations ------------------------------------
    def bimodule_consistency(self):
        """Check x^m w^{ik} = R^{sk}_{nb} R^{mi}_{js} w^{jn} x^b + w^{ab} l^{mik}_{ab}

        in the tensor square of one-forms, where w^{ik} = dx^i dx^k +
        R^{ik}_{cd} dx^c dx^d and l = Z(x)1 + (R(x)1)(1(x)Z).  Returns a list
        of failing (m, i, k) triples (empty when consistent).
        """
        sd, N = self.sd, self.n
        failures = []

        def omega(i, k):
            out = {(i, k): {(): ONE}}
            for c in range(N):
                for d in range(N):
                    r = sd.R(i, k, c, d)
                    if r:
                        _acc(out.setdefault((c, d), {}), (), r)
            return out

        def add(tgt, words, coef_terms):
            for J, t in words.items():
                prod = self.calc._mul(t, coef_terms)
                dst = tgt.setdefault(J, {})
                for w, v in prod.items():
                    _acc(dst, w, v)

        def l_tensor(m, i, k, a, b):
            v = sd.Z(m, i, a) if k == b else ZERO
            for s in range(N):
                v = v + sd.R(m, i, a, s) * sd.Z(s, k, b)
            return v

        for m in range(N):
            for i in range(N):
                for k in range(N):
                    lhs = {}
                    for J, t in omega(i, k).items():
                        for M, c in self._wedge_raw({(): {(m,): ONE}}, {J: t}).items():
                            dst = lhs.setdefault(M, {})
                            for w, v in c.items():
                                _acc(dst, w, v)
                    rhs = {}
                    for j in range(N):
                        for nn in range(N):
                            for b in range(N):
                                coef = ZERO
                                for s in range(N):
                                    coef = coef + sd.R(s, k, nn, b) * sd.R(m, i, j, s)
                                if coef:
                                    add(rhs, omega(j, nn), {(b,): coef})
                    for a in range(N):
                        for b in range(N):
                            coef = l_tensor(m, i, k, a, b)
                            if coef:
                                add(rhs, omega(a, b), {(): coef})
                    lhs = {J: t for J, t in lhs.items() if t}
                    rhs = {J: t for J, t in rhs.items() if t}
                    if lhs != rhs:
                        failures.append((m, i, k))
        return failures
