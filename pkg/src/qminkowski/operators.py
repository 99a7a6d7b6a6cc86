"""Metric-contracted operators: raised derivatives, the Laplacian, gamma
matrices and the Dirac operator, plus the exact operator-identity suite."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

from .calculus import Calculus
from .errors import GammaMismatchError, NonSymmetricMetricError, NotRTauError
from .exact import I, ONE, ZERO, Scalar, identity, mat_inverse, mat_mul
from .exterior import Exterior
from .ncalgebra import NCPoly
from .structures import Check, StructureData, ValidationReport

__all__ = [
    "GammaSet",
    "partial_up",
    "box",
    "box_lowered",
    "make_classical_gammas",
    "verify_gammas",
    "dirac",
    "random_poly",
    "identity_suite",
]


@dataclass(frozen=True)
class GammaSet:
    d: int
    mats: tuple  # N matrices, each a tuple of d rows of Scalars

    def __len__(self):
        return len(self.mats)

    def __getitem__(self, a):
        return self.mats[a]

    @classmethod
    def from_lists(cls, mats) -> "GammaSet":
        frozen = tuple(tuple(tuple(Scalar(0) + x for x in row) for row in m) for m in mats)
        return cls(len(frozen[0]) if frozen else 0, frozen)


def partial_up(calc: Calculus, j: int, a) -> NCPoly:
    """del^j a = g^{jb} del_b a."""
    g = calc.sd.g
    out = calc.engine.zero()
    for b in range(calc.n):
        if g[j][b]:
            out = out + calc.partial(b, a) * g[j][b]
    return out


def box(calc: Calculus, a) -> NCPoly:
    """g^{ij} del_j del_i a."""
    g = calc.sd.g
    out = calc.engine.zero()
    for i in range(calc.n):
        di = calc.partial(i, a)
        for j in range(calc.n):
            if g[i][j] and di:
                out = out + calc.partial(j, di) * g[i][j]
    return out


def box_lowered(calc: Calculus, a) -> NCPoly:
    """g_{ij} del^i del^j a, the second contraction form of the Laplacian."""
    gl = calc.sd.g_inv
    out = calc.engine.zero()
    for j in range(calc.n):
        dj = partial_up(calc, j, a)
        for i in range(calc.n):
            if gl[i][j] and dj:
                out = out + partial_up(calc, i, dj) * gl[i][j]
    return out


# ---------------------------------------------------------------------------
# gamma matrices

_PAULI = {
    "I": ((ONE, ZERO), (ZERO, ONE)),
    "X": ((ZERO, ONE), (ONE, ZERO)),
    "Y": ((ZERO, -I), (I, ZERO)),
    "Z": ((ONE, ZERO), (ZERO, -ONE)),
}


def _kron(a, b):
    return tuple(
        tuple(x * y for x in ra for y in rb)
        for ra in a for rb in b
    )


def _pauli_string(labels):
    out = ((ONE,),)
    for s in labels:
        out = _kron(out, _PAULI[s])
    return out


def euclidean_generators(n: int):
    """n mutually anticommuting involutions of size 2^(n//2) built from Pauli strings."""
    m = n // 2
    gens = []
    for j in range(m):
        for p in "XY":
            gens.append(_pauli_string("Z" * j + p + "I" * (m - j - 1)))
    if n % 2:
        gens.append(_pauli_string("Z" * m))
    return gens


def _rational_sqrt(q: Fraction):
    if q < 0:
        return None
    a, b = isqrt(q.numerator), isqrt(q.denominator)
    if a * a == q.numerator and b * b == q.denominator:
        return Fraction(a, b)
    return None


def _congruence_diagonalize(g):
    """E with E g E^T diagonal (exact symmetric elimination)."""
    n = len(g)
    G = [list(r) for r in g]
    E = identity(n)

    def swap(k, j):
        G[k], G[j] = G[j], G[k]
        for row in G:
            row[k], row[j] = row[j], row[k]
        E[k], E[j] = E[j], E[k]

    def add(k, j, f):  # row/col k += f * row/col j
        G[k] = [x + f * y for x, y in zip(G[k], G[j])]
        for row in G:
            row[k] = row[k] + f * row[j]
        E[k] = [x + f * y for x, y in zip(E[k], E[j])]

    for k in range(n):
        if not G[k][k]:
            j = next((j for j in range(k + 1, n) if G[j][j]), None)
            if j is not None:
                swap(k, j)
            else:
                j = next((j for j in range(k + 1, n) if G[k][j]), None)
                if j is None:
                    raise GammaMismatchError("metric is degenerate")
                add(k, j, ONE)
        piv = G[k][k]
        for i in range(k + 1, n):
            if G[i][k]:
                add(i, k, -(G[i][k] / piv))
    return E, [G[k][k] for k in range(n)]


def _signature_factor(M, diag):
    """S and signs with M diag(d) M^T = S diag(signs) S^T, all rational.

    Entries that are plus or minus a rational square are rescaled directly.
    The rest are paired: when -d_k d_l = s^2 d_k^2 the plane (k, l) is
    hyperbolic and
        P = [[(d+1)/2, (d-1)/2], [s(d-1)/2, s(d+1)/2]]
    gives P diag(1, -1) P^T = diag(d, -d s^2) with d = d_k.
    """
    n = len(diag)
    cols = [None] * n  # column k of S as a list over rows
    signs = [1] * n
    left = []
    for k, dk in enumerate(diag):
        r = _rational_sqrt(abs(dk))
        if r is None:
            left.append(k)
            continue
        signs[k] = 1 if dk > 0 else -1
        cols[k] = [M[a][k] * Scalar(r) for a in range(n)]
    while left:
        k = left.pop(0)
        d = diag[k]
        partner = None
        for l in left:
            s = _rational_sqrt(-diag[l] / d)
            if s is not None:
                partner = (l, s)
                break
        if partner is None:
            raise GammaMismatchError(
                f"diagonal entry {d} is not plus or minus a rational square; "
                "no exact gamma matrices over Q(i)"
            )
        l, sq = partner
        left.remove(l)
        P = [[(d + 1) / 2, (d - 1) / 2], [sq * (d - 1) / 2, sq * (d + 1) / 2]]
        # columns of M P for the (k, l) block
        cols[k] = [M[a][k] * Scalar(P[0][0]) + M[a][l] * Scalar(P[1][0]) for a in range(n)]
        cols[l] = [M[a][k] * Scalar(P[0][1]) + M[a][l] * Scalar(P[1][1]) for a in range(n)]
        signs[k], signs[l] = 1, -1
    S = [[cols[c][a] for c in range(n)] for a in range(n)]
    return S, signs


def make_classical_gammas(sd: StructureData) -> GammaSet:
    """Gamma matrices with {g^a, g^b} = 2 g^{ab} for R = tau, verified exactly.

    The metric is brought to the form S Lambda S^T with Lambda = diag(+-1) by
    exact congruence. After diagonalizing, each entry must be plus or minus a
    rational square or pair with another entry into a hyperbolic plane.
    """
    if not sd.is_flip:
        raise NotRTauError("classical gamma construction needs R = tau")
    n = sd.n
    g = sd.g
    for a in range(n):
        for b in range(n):
            if g[a][b] != g[b][a]:
                raise NonSymmetricMetricError(f"g^{{{a}{b}}} != g^{{{b}{a}}}")
            if not g[a][b].is_real:
                raise NonSymmetricMetricError(f"g^{{{a}{b}}} = {g[a][b]} is not real")
    E, diag = _congruence_diagonalize([list(r) for r in g])
    M = mat_inverse(E)  # g = M D M^T
    S, signs = _signature_factor(M, [Fraction(dk.re) for dk in diag])
    base = euclidean_generators(n)
    lam = [b if sg > 0 else tuple(tuple(I * x for x in r) for r in b)
           for b, sg in zip(base, signs)]
    d = len(lam[0])
    mats = []
    for a in range(n):
        acc = [[ZERO] * d for _ in range(d)]
        for c in range(n):
            coef = S[a][c]
            if coef:
                for r in range(d):
                    for s in range(d):
                        if lam[c][r][s]:
                            acc[r][s] = acc[r][s] + coef * lam[c][r][s]
        mats.append(tuple(tuple(r) for r in acc))
    gs = GammaSet(d, tuple(mats))
    report = verify_gammas(sd, gs)
    if not report.ok:
        raise GammaMismatchError(f"constructed gammas fail: {report.failures()[0].witness}")
    return gs


def verify_gammas(sd: StructureData, gammas: GammaSet) -> ValidationReport:
    """Exact check of g^a g^b + R^{ba}_{dc} g^c g^d = 2 g^{ba} 1 for every (a, b)."""
    n = sd.n
    checks = []
    if len(gammas.mats) != n:
        return ValidationReport((Check("gamma count", "fail",
                                       f"expected {n} matrices, got {len(gammas.mats)}"),))
    d = gammas.d
    if any(len(m) != d or any(len(r) != d for r in m) for m in gammas.mats):
        return ValidationReport((Check("gamma shape", "fail", "matrices are not all d x d"),))
    prod = {(a, b): mat_mul(gammas[a], gammas[b]) for a in range(n) for b in range(n)}
    for a in range(n):
        for b in range(n):
            acc = [list(r) for r in prod[(a, b)]]
            for c in range(n):
                for dd in range(n):
                    r = sd.R(b, a, dd, c)
                    if r:
                        pc = prod[(c, dd)]
                        for i in range(d):
                            for j in range(d):
                                if pc[i][j]:
                                    acc[i][j] = acc[i][j] + r * pc[i][j]
            want = 2 * sd.g[b][a]
            bad = None
            for i in range(d):
                for j in range(d):
                    target = want if i == j else ZERO
                    if acc[i][j] != target:
                        bad = (i, j, acc[i][j] - target)
                        break
                if bad:
                    break
            witness = f"(a,b)=({a},{b}) entry ({bad[0]},{bad[1]}): residual {bad[2]}" if bad else ""
            checks.append(Check(f"gamma relation ({a},{b})", "fail" if bad else "pass", witness))
    return ValidationReport(tuple(checks))


def dirac(calc: Calculus, gammas: GammaSet, phi) -> tuple:
    """(Dslash phi)^r = sum_{a,s} (g^a)^r_s del_a(phi^s)."""
    if len(phi) != gammas.d:
        raise GammaMismatchError(f"spinor has {len(phi)} entries, gammas act on {gammas.d}")
    e = calc.engine
    derivs = [[calc.partial(a, e.coerce(p)) for p in phi] for a in range(calc.n)]
    out = []
    for r in range(gammas.d):
        acc = e.zero()
        for a in range(calc.n):
            row = gammas[a][r]
            for s in range(gammas.d):
                if row[s] and derivs[a][s]:
                    acc = acc + derivs[a][s] * row[s]
        out.append(acc)
    return tuple(out)


# ---------------------------------------------------------------------------
# identity suite

def random_poly(engine, rng: random.Random, max_degree: int, terms: int = 3) -> NCPoly:
    """Seeded random combination of complement monomials with small Q(i) coefficients."""
    basis = engine.monomial_basis(max_degree)
    out = {}
    for w in rng.sample(basis, min(terms, len(basis))):
        c = Scalar(Fraction(rng.randint(-5, 5), rng.randint(1, 3)), rng.randint(-2, 2))
        if c:
            out[w] = c
    return engine.normal_form(out)


def _first_failure(pairs):
    for label, lhs, rhs in pairs:
        if lhs != rhs:
            return f"{label}: lhs {lhs} != rhs {rhs}"
    return None


def identity_suite(calc: Calculus, gammas: GammaSet | None = None, *, max_degree: int = 4,
                   seed: int = 42, samples: int = 6) -> list:
    """Run every operator identity exactly; returns a list of Check.

    Operator identities are tested on all complement monomials of degree
    <= max_degree; bilinear identities on seeded random pairs.
    """
    e, sd, n = calc.engine, calc.sd, calc.n
    rng = random.Random(seed)
    monos = list(e.iter_monomials(max_degree))
    ext = Exterior(calc)
    checks = []
    R = sd.R

    def run(name, gen):
        try:
            bad = _first_failure(gen())
        except Exception as exc:  # an identity that cannot even be evaluated fails
            bad = f"{type(exc).__name__}: {exc}"
        checks.append(Check(name, "fail" if bad else "pass", bad or ""))

    def dd_zero():
        for a in monos:
            yield f"d d ({a})", ext.d(ext.d(ext.function(a))).is_zero(), True
        for _ in range(samples):
            w = ext.from_words(1, {(i,): random_poly(e, rng, max_degree - 1, 2) for i in range(n)})
            yield f"d d ({w})", ext.d(ext.d(w)).is_zero(), True

    def leibniz():
        for _ in range(samples):
            a = random_poly(e, rng, 2)
            b = random_poly(e, rng, 2)
            yield f"d({a} * {b})", calc.d0(a * b), calc.left_mul(a, calc.d0(b)) + calc.d0(a) * b
        for k, l in ((0, 1), (1, 0), (1, 1)):
            for _ in range(max(1, samples // 2)):
                w = _random_form(ext, rng, k)
                t = _random_form(ext, rng, l)
                sign = ONE if k % 2 == 0 else -ONE
                lhs = ext.d(ext.wedge(w, t))
                rhs = ext.wedge(ext.d(w), t) + ext.wedge(w, ext.d(t)) * sign
                yield f"graded Leibniz degrees ({k},{l})", lhs, rhs

    def eq31():
        for a in monos:
            for k in range(n):
                for l in range(n):
                    lhs = calc.partial(l, calc.partial(k, a))
                    rhs = e.zero()
                    for i in range(n):
                        for j in range(n):
                            r = R(i, j, k, l)
                            if r:
                                rhs = rhs + calc.partial(j, calc.partial(i, a)) * r
                    yield f"(k,l)=({k},{l}) on {a}", lhs, rhs

    def eq31_raised():
        for a in monos:
            for i in range(n):
                for j in range(n):
                    lhs = partial_up(calc, i, partial_up(calc, j, a))
                    rhs = e.zero()
                    for k in range(n):
                        for l in range(n):
                            r = R(i, j, k, l)
                            if r:
                                rhs = rhs + partial_up(calc, k, partial_up(calc, l, a)) * r
                    yield f"(i,j)=({i},{j}) on {a}", lhs, rhs

    def eq31pp():
        for a in monos:
            if a.degree >= e.cutoff:
                continue
            for i in range(n):
                for k in range(n):
                    lhs = calc.partial(i, e.gen(k) * a)
                    rhs = a if i == k else e.zero()
                    for l in range(n):
                        dl = calc.partial(l, a)
                        if not dl:
                            continue
                        coef = e.scalar(sd.Z(k, l, i))
                        for m in range(n):
                            r = R(k, l, i, m)
                            if r:
                                coef = coef + e.gen(m) * r
                        rhs = rhs + coef * dl
                    yield f"(i,k)=({i},{k}) on {a}", lhs, rhs

    def eq32():
        for a in monos:
            ba = box(calc, a)
            for k in range(n):
                yield f"box del_{k} on {a}", box(calc, calc.partial(k, a)), calc.partial(k, ba)
                yield f"box del^{k} on {a}", box(calc, partial_up(calc, k, a)), partial_up(calc, k, ba)

    def box_forms():
        for a in monos:
            yield f"box on {a}", box(calc, a), box_lowered(calc, a)

    def eq36():
        rz = [[[sum((R(j, k, c, d) * sd.Z(c, d, b) for c in range(n) for d in range(n)), ZERO)
                for b in range(n)] for k in range(n)] for j in range(n)]
        for a in monos:
            if a.degree >= e.cutoff:
                continue
            ups = [partial_up(calc, b, a) for b in range(n)]
            for j in range(n):
                for k in range(n):
                    lhs = partial_up(calc, j, e.gen(k) * a)
                    rhs = a * sd.g[j][k]
                    for b in range(n):
                        if not ups[b]:
                            continue
                        for aa in range(n):
                            r = R(j, k, aa, b)
                            if r:
                                rhs = rhs + e.gen(aa) * ups[b] * r
                        if rz[j][k][b]:
                            rhs = rhs - ups[b] * rz[j][k][b]
                    yield f"(j,k)=({j},{k}) on {a}", lhs, rhs

    def eq37_first():
        for a in monos:
            if a.degree >= e.cutoff:
                continue
            dels = [calc.partial(b, a) for b in range(n)]
            for c in range(n):
                for aa in range(n):
                    for t in range(n):
                        lhs = calc.partial(c, calc.rho(t, aa, a))
                        rhs = e.zero()
                        for b in range(n):
                            if not dels[b]:
                                continue
                            for d in range(n):
                                r = R(b, d, aa, c)
                                if r:
                                    rhs = rhs + calc.rho(t, d, dels[b]) * r
                        yield f"(c,a,t)=({c},{aa},{t}) on {a}", lhs, rhs

    r_nonzero = [(i, j, k, l, R(i, j, k, l)) for i in range(n) for j in range(n)
                 for k in range(n) for l in range(n) if R(i, j, k, l)]

    def eq37_second():
        for a in monos:
            if a.degree >= e.cutoff:
                continue
            # comp[(u1, l1, u2, l2)] = rho_{l1}^{u1}(rho_{l2}^{u2}(a))
            inner = {(u, l): calc.rho(u, l, a) for u in range(n) for l in range(n)}
            comp = {}
            for (u2, l2), x in inner.items():
                for u1 in range(n):
                    for l1 in range(n):
                        comp[(u1, l1, u2, l2)] = calc.rho(u1, l1, x) if x else e.zero()
            lhs = {}
            rhs = {}
            for s_, t, b, d, r in r_nonzero:
                # R^{st}_{bd} rho_c^d rho_a^b
                for c in range(n):
                    for aa in range(n):
                        key = (s_, t, c, aa)
                        lhs[key] = lhs.get(key, e.zero()) + comp[(d, c, b, aa)] * r
            for b, d, aa, c, r in r_nonzero:
                # rho_d^t rho_b^s R^{bd}_{ac}
                for s_ in range(n):
                    for t in range(n):
                        key = (s_, t, c, aa)
                        rhs[key] = rhs.get(key, e.zero()) + comp[(t, d, s_, b)] * r
            for key in sorted(set(lhs) | set(rhs)):
                yield (f"(s,t,c,a)={key} on {a}", lhs.get(key, e.zero()),
                       rhs.get(key, e.zero()))

    run("dd = 0", dd_zero)
    run("graded Leibniz", leibniz)
    run("del_l del_k = R^{ij}_{kl} del_j del_i", eq31)
    run("del^i del^j = R^{ij}_{kl} del^k del^l", eq31_raised)
    run("del_i x^k = delta + (R x + Z) del", eq31pp)
    run("box commutes with del_k and del^k", eq32)
    run("box contraction forms agree", box_forms)
    run("del^j x^k = g^{jk} + R x del^ - (RZ) del^", eq36)
    run("del_c rho_a^t = rho_d^t del_b R^{bd}_{ac}", eq37_first)
    run("R^{st}_{bd} rho_c^d rho_a^b = rho_d^t rho_b^s R^{bd}_{ac}", eq37_second)

    if gammas is not None:
        rep = verify_gammas(sd, gammas)
        bad = rep.failures()
        checks.append(Check("gamma relations", "fail" if bad else "pass",
                            bad[0].witness if bad else ""))

        def dirac_square():
            for _ in range(samples):
                phi = tuple(random_poly(e, rng, max_degree, 2) for _ in range(gammas.d))
                lhs = dirac(calc, gammas, dirac(calc, gammas, phi))
                rhs = tuple(box(calc, p) for p in phi)
                yield f"Dslash^2 on {phi}", lhs, rhs

        run("Dslash^2 = box", dirac_square)
    return checks


def _random_form(ext: Exterior, rng: random.Random, degree: int):
    e = ext.engine
    if degree == 0:
        return ext.function(random_poly(e, rng, 2))
    words = {}
    for _ in range(2):
        J = tuple(rng.randrange(ext.n) for _ in range(degree))
        words[J] = random_poly(e, rng, 1, 2)
    return ext.from_words(degree, words)
