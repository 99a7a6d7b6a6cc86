"""Braided tensor powers of the coordinate algebra.

A state in C^{(x)n} is a finite map from n-tuples of normal-form words to
scalars.  The interchange operator K acts on neighbouring slots; the
permutation representation, the symmetrizer and lifted n-particle
operators are all built from it.

Permutations are one-line tuples ``sigma`` where ``sigma[i]`` is the slot
that the content of slot ``i`` is moved to.  With this convention
``pi(s) pi(t) = pi(compose(s, t))``.
"""

from __future__ import annotations

import json
import math
import random
from fractions import Fraction
from pathlib import Path

from .errors import BraidInvalidError, CutoffExceeded, SizeExceeded, StructureParseError
from .exact import ONE, Scalar, as_scalar, parse_scalar
from .exterior import permutation_words
from .ncalgebra import NCPoly, NormalFormEngine, _acc
from .structures import Check, ValidationReport, flip_matrix

__all__ = [
    "TensorState",
    "BraidOperator",
    "load_braid",
    "compose",
    "inverse",
    "transposition",
    "reduced_words",
    "pi_sigma",
    "symmetrize",
    "is_symmetric",
    "lift_operator",
    "random_state",
    "fock_suite",
]

MAX_SLOTS = 6


# ---------------------------------------------------------------------------
# permutations

def compose(s: tuple, t: tuple) -> tuple:
    """s o t: apply t first."""
    return tuple(s[t[i]] for i in range(len(t)))


def inverse(s: tuple) -> tuple:
    out = [0] * len(s)
    for i, j in enumerate(s):
        out[j] = i
    return tuple(out)


def transposition(n: int, a: int, b: int) -> tuple:
    p = list(range(n))
    p[a], p[b] = p[b], p[a]
    return tuple(p)


def _check_perm(sigma, n: int) -> tuple:
    sigma = tuple(sigma)
    if sorted(sigma) != list(range(n)):
        raise ValueError(f"{sigma} is not a permutation of {n} slots")
    return sigma


def _arrangement(word, n: int) -> tuple:
    """Slot contents after applying the adjacent swaps of word to range(n)."""
    arr = list(range(n))
    for k in word:
        arr[k], arr[k + 1] = arr[k + 1], arr[k]
    return tuple(arr)


def _inversions(arr) -> int:
    return sum(1 for a in range(len(arr)) for b in range(a + 1, len(arr)) if arr[a] > arr[b])


def reduced_words(sigma) -> list:
    """Every reduced word of sigma, in lexicographic order."""
    arr = inverse(tuple(sigma))
    memo = {}

    def rec(a):
        if a in memo:
            return memo[a]
        if all(a[i] < a[i + 1] for i in range(len(a) - 1)):
            return [()]
        out = []
        for k in range(len(a) - 1):
            if a[k] > a[k + 1]:
                prev = a[:k] + (a[k + 1], a[k]) + a[k + 2:]
                out.extend(w + (k,) for w in rec(prev))
        memo[a] = out
        return out

    return sorted(rec(arr))


_WORD_TABLES: dict = {}


def _word_for(sigma: tuple) -> tuple:
    n = len(sigma)
    table = _WORD_TABLES.get(n)
    if table is None:
        table = _WORD_TABLES[n] = permutation_words(n)
    return table[inverse(sigma)]


# ---------------------------------------------------------------------------
# states

class TensorState:
    """Element of C^{(x)n}; every slot is kept in normal form."""

    __slots__ = ("engine", "n", "terms")

    def __init__(self, engine: NormalFormEngine, n: int, terms=None):
        self.engine = engine
        self.n = n
        self.terms = {k: v for k, v in (terms or {}).items() if v}
        for key in self.terms:
            if len(key) != n:
                raise ValueError(f"term {key} does not have {n} slots")
            if sum(map(len, key)) > engine.cutoff:
                raise CutoffExceeded(f"total degree of {key} exceeds cutoff {engine.cutoff}")

    @classmethod
    def from_raw(cls, engine: NormalFormEngine, n: int, raw: dict) -> "TensorState":
        """Normalize every slot of free-algebra tuples."""
        out: dict = {}
        for key, c in raw.items():
            parts = [((), c)]
            for w in key:
                nf = engine.nf_word(w)
                parts = [(p + (w2,), cp * c2) for p, cp in parts for w2, c2 in nf.items()]
            for k2, c2 in parts:
                _acc(out, k2, c2)
        return cls(engine, n, out)

    @classmethod
    def pure(cls, *polys: NCPoly) -> "TensorState":
        engine = polys[0].engine
        parts = [((), ONE)]
        for p in polys:
            parts = [(k + (w,), c * c2) for k, c in parts for w, c2 in p.terms.items()]
        out: dict = {}
        for k, c in parts:
            _acc(out, k, c)
        return cls(engine, len(polys), out)

    @classmethod
    def basis(cls, engine: NormalFormEngine, words) -> "TensorState":
        words = tuple(tuple(w) for w in words)
        return cls.from_raw(engine, len(words), {words: ONE})

    def _same(self, other):
        if not isinstance(other, TensorState):
            return False
        if other.n != self.n or other.engine is not self.engine:
            raise ValueError("states live in different tensor powers")
        return True

    def __add__(self, other):
        if not self._same(other):
            return NotImplemented
        out = dict(self.terms)
        for k, v in other.terms.items():
            _acc(out, k, v)
        return TensorState(self.engine, self.n, out)

    def __neg__(self):
        return TensorState(self.engine, self.n, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        if not self._same(other):
            return NotImplemented
        return self + (-other)

    def scale(self, c) -> "TensorState":
        c = as_scalar(c)
        return TensorState(self.engine, self.n, {k: v * c for k, v in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, TensorState):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(map(len, k)) for k in self.terms), default=-1)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for key in sorted(self.terms, key=lambda k: [(len(w), w) for w in k]):
            slots = " (x) ".join("*".join(f"x{i}" for i in w) if w else "1" for w in key)
            parts.append(f"({self.terms[key]})*[{slots}]")
        return " + ".join(parts)

    __repr__ = __str__


# ---------------------------------------------------------------------------
# interchange operator

class BraidOperator:
    """The interchange operator K on C (x) C.

    ``b=None`` is the classical flip.  Otherwise ``b[i*N+j][k*N+l]`` is
    B^{ij}_{kl} with K(x^i (x) x^j) = B^{ij}_{kl} x^k (x) x^l; on words the
    letters of the right factor are braided one at a time past the left one.
    """

    def __init__(self, engine: NormalFormEngine, b=None):
        self.engine = engine
        n = engine.n
        if b is not None:
            if len(b) != n * n or any(len(row) != n * n for row in b):
                raise StructureParseError(f"braid matrix must be {n * n} x {n * n}")
            b = tuple(tuple(as_scalar(v) for v in row) for row in b)
            if b == flip_matrix(n):
                b = None
        self.b = b
        self._pair: dict = {}
        self._swap: dict = {}
        self._report = None
        if b is not None:
            for i in range(n):
                for j in range(n):
                    row = b[i * n + j]
                    self._swap[(i, j)] = [((k, l), row[k * n + l])
                                          for k in range(n) for l in range(n) if row[k * n + l]]

    @property
    def is_flip(self) -> bool:
        return self.b is None

    def _braid_free(self, u: tuple, v: tuple) -> dict:
        """K(u (x) v) on free words, as {(v', u'): c} before normalization."""
        if self.b is None:
            return {(v, u): ONE}
        p = len(u)
        seqs = {u + v: ONE}
        for a in range(len(v)):
            for pos in range(p + a - 1, a - 1, -1):
                nxt: dict = {}
                for s, c in seqs.items():
                    for (k, l), bc in self._swap[(s[pos], s[pos + 1])]:
                        _acc(nxt, s[:pos] + (k, l) + s[pos + 2:], c * bc)
                seqs = nxt
        q = len(v)
        out: dict = {}
        for s, c in seqs.items():
            _acc(out, (s[:q], s[q:]), c)
        return out

    def pair(self, u: tuple, v: tuple) -> dict:
        """K(u (x) v) with both slots in normal form."""
        key = (u, v)
        hit = self._pair.get(key)
        if hit is None:
            hit = TensorState.from_raw(self.engine, 2, self._braid_free(u, v)).terms
            self._pair[key] = hit
        return hit

    def apply(self, m: int, psi: TensorState) -> TensorState:
        """K^{(m)}: K on slots m and m+1 (0-based)."""
        if not 0 <= m < psi.n - 1:
            raise ValueError(f"no slots {m}, {m + 1} in a {psi.n}-fold state")
        out: dict = {}
        for key, c in psi.terms.items():
            for (a, b), c2 in self.pair(key[m], key[m + 1]).items():
                _acc(out, key[:m] + (a, b) + key[m + 2:], c * c2)
        return TensorState(psi.engine, psi.n, out)

    # invariants --------------------------------------------------------------
    def check(self, max_degree: int = 2) -> ValidationReport:
        """Involution, braid relation and ideal compatibility, exactly."""
        if self._report is not None and self._report[0] >= max_degree:
            return self._report[1]
        e, n = self.engine, self.engine.n
        checks = []

        words = e.monomial_basis(max_degree)
        bad = ""
        for u in words:
            for v in words:
                psi = TensorState(e, 2, {(u, v): ONE})
                back = self.apply(0, self.apply(0, psi))
                if back != psi:
                    bad = f"K^2 ({psi}) = {back}"
                    break
            if bad:
                break
        checks.append(Check("K^2 = id", "fail" if bad else "pass", bad))

        bad = ""
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    psi = TensorState(e, 3, {((i,), (j,), (k,)): ONE})
                    lhs = self.apply(0, self.apply(1, self.apply(0, psi)))
                    rhs = self.apply(1, self.apply(0, self.apply(1, psi)))
                    if lhs != rhs:
                        bad = f"on {psi}: K1K2K1 = {lhs}, K2K1K2 = {rhs}"
                        break
                if bad:
                    break
            if bad:
                break
        checks.append(Check("braid relation K1 K2 K1 = K2 K1 K2", "fail" if bad else "pass", bad))

        bad = ""
        for q in e.relations:
            for m in range(n):
                for left in (True, False):
                    raw: dict = {}
                    for w, c in q.items():
                        u, v = (w, (m,)) if left else ((m,), w)
                        for k2, c2 in self._braid_free(u, v).items():
                            _acc(raw, k2, c * c2)
                    img = TensorState.from_raw(e, 2, raw)
                    if not img.is_zero():
                        side = "relation (x) x" if left else "x (x) relation"
                        bad = f"K({side}{m}) = {img}, not in the ideal"
                        break
                if bad:
                    break
            if bad:
                break
        checks.append(Check("ideal compatibility", "fail" if bad else "pass", bad))

        report = ValidationReport(tuple(checks))
        self._report = (max_degree, report)
        return report

    def require_valid(self):
        report = self.check()
        if not report.ok:
            bad = "; ".join(f"{c.name}: {c.witness}" for c in report.failures())
            raise BraidInvalidError(f"interchange operator is not a valid braiding: {bad}")


def load_braid(path, engine: NormalFormEngine) -> BraidOperator:
    """Read {"n": N, "b": [[...]]} with scalar literals as in structure files."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise StructureParseError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict) or "b" not in data:
        raise StructureParseError(f"{path}: expected an object with key 'b'")
    if data.get("n", engine.n) != engine.n:
        raise StructureParseError(f"{path}: braid is for n={data['n']}, structure has n={engine.n}")
    rows = [[parse_scalar(v) if isinstance(v, str) else as_scalar(v) for v in row]
            for row in data["b"]]
    return BraidOperator(engine, rows)


# ---------------------------------------------------------------------------
# permutation representation

def pi_sigma(braid: BraidOperator, sigma, psi: TensorState, *, word=None) -> TensorState:
    """Apply pi_sigma through K^{(m)} along a reduced word of sigma."""
    braid.require_valid()
    sigma = _check_perm(sigma, psi.n)
    if word is None:
        word = _word_for(sigma)
    else:
        word = tuple(word)
        if _arrangement(word, psi.n) != inverse(sigma) or len(word) != _inversions(inverse(sigma)):
            raise ValueError(f"{word} is not a reduced word of {sigma}")
    for m in word:
        psi = braid.apply(m, psi)
    return psi


def _all_perms(n: int):
    if n > MAX_SLOTS:
        raise SizeExceeded(f"{n}! permutations exceed the budget (n <= {MAX_SLOTS})")
    table = _WORD_TABLES.get(n)
    if table is None:
        table = _WORD_TABLES[n] = permutation_words(n)
    return [inverse(arr) for arr in table]


def symmetrize(braid: BraidOperator, psi: TensorState) -> TensorState:
    """(1/n!) sum over sigma of pi_sigma psi."""
    perms = _all_perms(psi.n)
    total = TensorState(psi.engine, psi.n)
    for sigma in perms:
        total = total + pi_sigma(braid, sigma, psi)
    return total.scale(Scalar(Fraction(1, len(perms))))


def is_symmetric(braid: BraidOperator, psi: TensorState) -> bool:
    return symmetrize(braid, psi) == psi


def _on_first(W, psi: TensorState) -> TensorState:
    e = psi.engine
    out: dict = {}
    for key, c in psi.terms.items():
        img = W(NCPoly(e, {key[0]: ONE}))
        for w, c2 in img.terms.items():
            _acc(out, (w,) + key[1:], c * c2)
    return TensorState(e, psi.n, out)


def lift_operator(braid: BraidOperator, W, n: int, psi: TensorState, *,
                  formula: str = "transpositions", check_symmetric: bool = True) -> TensorState:
    """W^{(n)} psi for a linear single-particle operator W (callable on NCPoly).

    ``formula="transpositions"`` sums pi_(0 m) (W (x) 1) pi_(0 m) over m;
    ``formula="average"`` is (1/(n-1)!) sum_sigma pi_sigma (W (x) 1) pi_sigma^{-1}.
    """
    if psi.n != n:
        raise ValueError(f"state has {psi.n} slots, expected {n}")
    if n > MAX_SLOTS:
        raise SizeExceeded(f"n = {n} exceeds the budget (n <= {MAX_SLOTS})")
    if check_symmetric and not is_symmetric(braid, psi):
        raise ValueError("lift_operator expects a symmetric state")
    total = TensorState(psi.engine, n)
    if formula == "transpositions":
        for m in range(n):
            t = transposition(n, 0, m)
            total = total + pi_sigma(braid, t, _on_first(W, pi_sigma(braid, t, psi)))
        return total
    if formula == "average":
        for sigma in _all_perms(n):
            inner = pi_sigma(braid, inverse(sigma), psi)
            total = total + pi_sigma(braid, sigma, _on_first(W, inner))
        return total.scale(Scalar(Fraction(1, math.factorial(n - 1))))
    raise ValueError(f"unknown formula {formula!r}")


# ---------------------------------------------------------------------------
# invariant suite

def _random_coeff(rng: random.Random) -> Scalar:
    while True:
        c = Scalar(Fraction(rng.randint(-4, 4), rng.randint(1, 3)), rng.randint(-2, 2))
        if c:
            return c


def random_state(engine: NormalFormEngine, rng: random.Random, degrees, terms: int = 2) -> TensorState:
    """Seeded sum of pure tensors; slot k is homogeneous of degree degrees[k]."""
    total = TensorState(engine, len(degrees))
    for _ in range(terms):
        polys = []
        for d in degrees:
            basis = engine.standard_words(d)
            picks = rng.sample(basis, min(2, len(basis)))
            polys.append(engine.normal_form({w: _random_coeff(rng) for w in picks}))
        total = total + TensorState.pure(*polys)
    return total


def fock_suite(braid: BraidOperator, n: int = 3, *, W=None, seed: int = 42,
               samples: int = 3) -> list:
    """Braid axioms plus representation, symmetrizer and lift checks on seeded states.

    W defaults to left multiplication by x^0 when no operator is given.
    """
    if n > MAX_SLOTS:
        raise SizeExceeded(f"n = {n} exceeds the budget (n <= {MAX_SLOTS})")
    e = braid.engine
    rng = random.Random(seed)
    report = braid.check()
    checks = list(report)
    if not report.ok:
        for name in ("reduced-word independence", "pi is a representation",
                     "symmetrizer is a projection", "symmetric image is invariant",
                     "W^(n) formulas agree", "W^(n) preserves the boson subspace"):
            checks.append(Check(name, "skip", "braid invalid"))
        return checks
    if W is None:
        x0 = e.gen(0)

        def W(a):
            return x0 * a

    degrees = [1] * n
    states = [random_state(e, rng, degrees) for _ in range(samples)]
    perms = _all_perms(n)

    def run(name, fn):
        try:
            bad = fn()
        except CutoffExceeded as exc:
            checks.append(Check(name, "skip", str(exc)))
            return
        checks.append(Check(name, "fail" if bad else "pass", bad or ""))

    def words_agree():
        for sigma in perms:
            ws = reduced_words(sigma)
            for psi in states:
                ref = pi_sigma(braid, sigma, psi, word=ws[0])
                for w in ws[1:]:
                    got = pi_sigma(braid, sigma, psi, word=w)
                    if got != ref:
                        return f"sigma {sigma}: words {ws[0]} and {w} disagree"
        return None

    def representation():
        sample = perms if len(perms) <= 24 else rng.sample(perms, 24)
        for s in sample:
            for t in sample:
                psi = states[0]
                lhs = pi_sigma(braid, s, pi_sigma(braid, t, psi))
                rhs = pi_sigma(braid, compose(s, t), psi)
                if lhs != rhs:
                    return f"pi{s} pi{t} != pi{compose(s, t)}"
        return None

    sym_states = []

    def projection():
        for psi in states:
            s1 = symmetrize(braid, psi)
            sym_states.append(s1)
            if symmetrize(braid, s1) != s1:
                return f"S(S psi) != S psi for psi = {psi}"
        return None

    def invariant():
        for s1 in sym_states:
            for sigma in perms:
                if pi_sigma(braid, sigma, s1) != s1:
                    return f"pi{sigma} moves a symmetric state"
        return None

    def formulas():
        for s1 in sym_states:
            a = lift_operator(braid, W, n, s1, formula="transpositions", check_symmetric=False)
            b = lift_operator(braid, W, n, s1, formula="average", check_symmetric=False)
            if a != b:
                return f"transposition sum {a} != average {b}"
        return None

    def preserves():
        for s1 in sym_states:
            a = lift_operator(braid, W, n, s1, check_symmetric=False)
            if symmetrize(braid, a) != a:
                return f"W^(n) of {s1} is not symmetric"
        return None

    run("reduced-word independence", words_agree)
    run("pi is a representation", representation)
    run("symmetrizer is a projection", projection)
    run("symmetric image is invariant", invariant)
    run("W^(n) formulas agree", formulas)
    run("W^(n) preserves the boson subspace", preserves)
    return checks
