"""First-order differential calculus on the coordinate algebra.

Everything is driven by the unital homomorphism

    L(a) = [[rho(a), del(a)], [0, a]],    L(x^k) = [[K^k, e_k], [0, x^k]],

with ``(K^k)_i^j = R^{kj}_{il} x^l + Z^{kj}_i``; ``del(a)_i`` is the partial
derivative and ``rho(a)_i^j`` the twist with ``a dx^j = dx^i rho_i^j(a)``.
"""

from __future__ import annotations

from .errors import CutoffExceeded, StarUndefined, WellDefinednessError
from .exact import ONE
from .ncalgebra import NCPoly, NormalFormEngine, _acc, format_poly

__all__ = ["Calculus", "OneForm"]


class OneForm:
    """omega = dx^i a_i, stored as the N right coefficients a_i."""

    __slots__ = ("calc", "coeffs")

    def __init__(self, calc: "Calculus", coeffs):
        if len(coeffs) != calc.n:
            raise ValueError(f"a one-form needs {calc.n} coefficients")
        self.calc = calc
        self.coeffs = tuple(coeffs)
        top = calc.engine.cutoff - 1
        if any(c.degree > top for c in self.coeffs):
            raise CutoffExceeded(f"one-form coefficients are limited to degree {top}")

    def __add__(self, other):
        if not isinstance(other, OneForm):
            return NotImplemented
        return OneForm(self.calc, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        if not isinstance(other, OneForm):
            return NotImplemented
        return OneForm(self.calc, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self):
        return OneForm(self.calc, [-a for a in self.coeffs])

    def __mul__(self, b):
        """Right multiplication: (dx^i a_i) b = dx^i (a_i b)."""
        return self.calc.right_mul(self, b)

    def __rmul__(self, a):
        """Left multiplication by a polynomial or scalar."""
        return self.calc.left_mul(a, self)

    def __eq__(self, other):
        if not isinstance(other, OneForm):
            return NotImplemented
        return self.coeffs == other.coeffs

    __hash__ = None

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __str__(self):
        parts = [f"dx{i}*[{c}]" for i, c in enumerate(self.coeffs) if c]
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__


class Calculus:
    """Partial derivatives, twists and the exterior derivative on degree 0.

    Construction checks that L vanishes on every relation generator (the
    calculus is well defined) and raises WellDefinednessError otherwise.
    """

    def __init__(self, engine: NormalFormEngine):
        self.engine = engine
        self.sd = engine.sd
        self.n = engine.n
        n, sd = self.n, self.sd
        # K[k][i][j] = R^{kj}_{il} x^l + Z^{kj}_i as raw terms
        self.K = []
        for k in range(n):
            block = []
            for i in range(n):
                row = []
                for j in range(n):
                    t = {}
                    for l in range(n):
                        c = sd.R(k, j, i, l)
                        if c:
                            t[(l,)] = c
                    z = sd.Z(k, j, i)
                    if z:
                        t[()] = z
                    row.append(t)
                block.append(row)
            self.K.append(block)
        self._partial_memo = {(): tuple({} for _ in range(n))}
        self._rho_memo = {(): tuple(tuple({(): ONE} if i == j else {} for j in range(n))
                                    for i in range(n))}
        self._star_checked = False
        self._check_well_defined()

    # raw term helpers ------------------------------------------------------
    def _mul(self, a: dict, b: dict) -> dict:
        nf = self.engine.nf_word
        out: dict = {}
        for u, cu in a.items():
            for v, cv in b.items():
                c = cu * cv
                for w, cw in nf(u + v).items():
                    _acc(out, w, c * cw)
        return out

    def _partial_word(self, w: tuple):
        """(del_0(w), ..., del_{N-1}(w)) for a free monomial w, as raw terms."""
        hit = self._partial_memo.get(w)
        if hit is not None:
            return hit
        k, rest = w[0], w[1:]
        inner = self._partial_word(rest)
        out = []
        for i in range(self.n):
            acc: dict = {}
            if i == k:
                for w2, c2 in self.engine.nf_word(rest).items():
                    _acc(acc, w2, c2)
            for m in range(self.n):
                kt = self.K[k][i][m]
                if kt and inner[m]:
                    for w2, c2 in self._mul(kt, inner[m]).items():
                        _acc(acc, w2, c2)
            out.append(acc)
        out = tuple(out)
        self._partial_memo[w] = out
        return out

    def _rho_word(self, w: tuple):
        """Matrix rho_i^j(w) for a free monomial w, as raw terms."""
        hit = self._rho_memo.get(w)
        if hit is not None:
            return hit
        k, rest = w[0], w[1:]
        inner = self._rho_word(rest)
        n = self.n
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc: dict = {}
                for m in range(n):
                    kt = self.K[k][i][m]
                    if kt and inner[m][j]:
                        for w2, c2 in self._mul(kt, inner[m][j]).items():
                            _acc(acc, w2, c2)
                row.append(acc)
            out.append(tuple(row))
        out = tuple(out)
        self._rho_memo[w] = out
        return out

    def _linear(self, terms: dict, fn) -> dict:
        out: dict = {}
        for w, c in terms.items():
            for w2, c2 in fn(w).items():
                _acc(out, w2, c * c2)
        return out

    def _poly(self, terms) -> NCPoly:
        return NCPoly(self.engine, terms)

    # well-definedness ------------------------------------------------------
    def derivative_homomorphism(self, terms: dict):
        """L applied to raw free-algebra terms: (rho matrix, del vector, reduced element)."""
        n = self.n
        rho = [[self._poly(self._linear(terms, lambda w, i=i, j=j: self._rho_word(w)[i][j]))
                for j in range(n)] for i in range(n)]
        dd = [self._poly(self._linear(terms, lambda w, i=i: self._partial_word(w)[i]))
              for i in range(n)]
        return rho, dd, self.engine.normal_form(terms)

    def _check_well_defined(self):
        for q in self.engine.relations:
            rho, dd, base = self.derivative_homomorphism(q)
            for i in range(self.n):
                if dd[i]:
                    raise WellDefinednessError(
                        f"del_{i} of relation {format_poly(q)} is {dd[i]}, not 0"
                    )
                for j in range(self.n):
                    if rho[i][j]:
                        raise WellDefinednessError(
                            f"rho_{i}^{j} of relation {format_poly(q)} is {rho[i][j]}, not 0"
                        )
            if base:
                raise WellDefinednessError(f"relation {format_poly(q)} is not in the ideal")

    # public operations -------------------------------------------------------
    def partial(self, i: int, a) -> NCPoly:
        """del_i(a), the coefficient of dx^i in da."""
        a = self.engine.coerce(a)
        return self._poly(self._linear(a.terms, lambda w: self._partial_word(w)[i]))

    def rho(self, i: int, j: int, a) -> NCPoly:
        """rho_j^i(a): the coefficient with a dx^i = sum_j dx^j rho_j^i(a)."""
        a = self.engine.coerce(a)
        return self._poly(self._linear(a.terms, lambda w: self._rho_word(w)[j][i]))

    def d0(self, a) -> OneForm:
        return OneForm(self, [self.partial(i, a) for i in range(self.n)])

    def dx(self, i: int) -> OneForm:
        e = self.engine
        return OneForm(self, [e.one() if j == i else e.zero() for j in range(self.n)])

    def oneform(self, coeffs) -> OneForm:
        e = self.engine
        return OneForm(self, [e.coerce(c) for c in coeffs])

    def zero_form(self) -> OneForm:
        return OneForm(self, [self.engine.zero()] * self.n)

    def right_mul(self, omega: OneForm, b) -> OneForm:
        b = self.engine.coerce(b)
        return OneForm(self, [a * b for a in omega.coeffs])

    def move_generator(self, k: int, coeffs):
        """x^k (dx^i a_i) = dx^j (R^{ki}_{jl} x^l + Z^{ki}_j) a_i, one commutation step."""
        n = self.n
        out = [dict() for _ in range(n)]
        for i, a in enumerate(coeffs):
            if not a:
                continue
            for j in range(n):
                kt = self.K[k][j][i]
                if kt:
                    for w, c in self._mul(kt, a).items():
                        _acc(out[j], w, c)
        return out

    def left_mul(self, a, omega: OneForm) -> OneForm:
        """a * omega, commuting a through dx^i one generator at a time."""
        a = self.engine.coerce(a)
        n = self.n
        total = [dict() for _ in range(n)]
        base = [c.terms for c in omega.coeffs]
        for w, c in a.terms.items():
            cur = base
            for k in reversed(w):
                cur = self.move_generator(k, cur)
            for j in range(n):
                for w2, c2 in cur[j].items():
                    _acc(total[j], w2, c * c2)
        return OneForm(self, [self._poly(t) for t in total])

    def left_mul_by_rho(self, a, omega: OneForm) -> OneForm:
        """a * omega through the twist matrix: a dx^i b_i = dx^j rho_j^i(a) b_i."""
        a = self.engine.coerce(a)
        n = self.n
        out = []
        for j in range(n):
            acc = self.engine.zero()
            for i in range(n):
                if omega.coeffs[i]:
                    acc = acc + self.rho(i, j, a) * omega.coeffs[i]
            out.append(acc)
        return OneForm(self, out)

    # star ----------------------------------------------------------------------
    def check_star(self):
        """(x^i dx^j)^* computed through the twist must equal dx^j x^i."""
        if self._star_checked:
            return
        e = self.engine
        e.check_star()
        for i in range(self.n):
            xi = e.gen(i)
            for j in range(self.n):
                for s in range(self.n):
                    acc = e.zero()
                    for k in range(self.n):
                        acc = acc + self.rho(k, s, e.star(self.rho(j, k, xi)))
                    want = xi if s == j else e.zero()
                    if acc != want:
                        raise StarUndefined(
                            f"star is not defined on one-forms: (x{i} dx{j})^* has "
                            f"dx{s} coefficient {acc}, expected {want}"
                        )
        self._star_checked = True

    def star_oneform(self, omega: OneForm) -> OneForm:
        """(dx^i a_i)^* = a_i^* dx^i, brought back to right-coefficient form."""
        self.check_star()
        e = self.engine
        total = self.zero_form()
        for i, a in enumerate(omega.coeffs):
            if a:
                total = total + self.left_mul(e.star(a), self.dx(i))
        return total
