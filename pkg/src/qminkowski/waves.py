"""Plane waves, dispersion relations and propagators.

Two regimes are covered.  For Z = 0 the momenta form a braided algebra F and
the plane-wave identities are checked exactly, order by order, in C (x) F.
For R = tau the matrix U_i^l = Z^{kl}_i p_k turns the Laplacian eigenvalue
into m^2 = g^{as} h(-iU)_s^b p_a p_b with h(x) = rho(-x) rho(x) and
rho(x) = (e^x - 1)/x; these are evaluated numerically.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .calculus import Calculus
from .errors import (
    GammaMismatchError,
    NonRealMassError,
    NotRTauError,
    OnShellPoleError,
    ZNonzeroError,
)
from .exact import ONE, ZERO
from .ncalgebra import NCPoly, NormalFormEngine, _acc
from .structures import Check, StructureData, ValidationReport

__all__ = [
    "MomentumAlgebra",
    "TensorElement",
    "verify_z0_series",
    "verify_u_algebra",
    "matrix_rho",
    "matrix_h",
    "DispersionModel",
    "u_matrix",
    "mass_squared",
    "propagator",
    "dirac_dispersion",
    "DiracDispersion",
    "evaluate_grid",
    "gamma_array",
    "symbolic_u",
]

COND_LIMIT = 1e8
REAL_TOL = 1e-10
POLE_TOL = 1e-12


# ---------------------------------------------------------------------------
# exact part

def _flip_conjugate(sd: StructureData):
    """(tau R tau)^{ij}_{kl} = R^{ji}_{lk}."""
    n = sd.n
    return tuple(
        tuple(sd.R(j, i, l, k) for k in range(n) for l in range(n))
        for i in range(n) for j in range(n)
    )


class MomentumAlgebra:
    """Momenta p^0..p^{N-1} with p^k p^l = R^{lk}_{ji} p^i p^j.

    ``upper(k)`` is p^k, ``lower(a)`` is p_a = g_{ab} p^b and ``s`` is the
    Casimir g^{ij} p_i p_j.
    """

    def __init__(self, sd: StructureData):
        n = sd.n
        msd = sd.replace(
            r=_flip_conjugate(sd),
            z=tuple((ZERO,) * n for _ in range(n * n)),
            t=(ZERO,) * (n * n),
            gammas=None,
            f_tilde=None,
        )
        self.sd = sd
        self.n = n
        self.engine = NormalFormEngine(msd, check_dimensions=False)
        e = self.engine
        gl = sd.g_inv
        self._lower = []
        for a in range(n):
            acc = e.zero()
            for b in range(n):
                if gl[a][b]:
                    acc = acc + e.gen(b) * gl[a][b]
            self._lower.append(acc)
        s = e.zero()
        for i in range(n):
            for j in range(n):
                if sd.g[i][j]:
                    s = s + self._lower[i] * self._lower[j] * sd.g[i][j]
        self.s = s

    def upper(self, k: int) -> NCPoly:
        return self.engine.gen(k)

    def lower(self, a: int) -> NCPoly:
        return self._lower[a]

    def centrality_defects(self):
        """Generators k with s p^k != p^k s."""
        return [k for k in range(self.n) if self.s * self.upper(k) != self.upper(k) * self.s]


class TensorElement:
    """Element of C (x) F as ``{(x word, p word): Scalar}``, both factors in normal form.

    The two tensor factors commute, so products multiply factorwise.
    """

    __slots__ = ("xe", "pe", "terms")

    def __init__(self, xe: NormalFormEngine, pe: NormalFormEngine, terms=None):
        self.xe = xe
        self.pe = pe
        self.terms = terms or {}

    @classmethod
    def pure(cls, xe, pe, a: NCPoly, b: NCPoly) -> "TensorElement":
        out = {}
        for u, cu in a.terms.items():
            for v, cv in b.terms.items():
                _acc(out, (u, v), cu * cv)
        return cls(xe, pe, out)

    def __add__(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            _acc(out, k, c)
        return TensorElement(self.xe, self.pe, out)

    def __sub__(self, other):
        return self + other.scale(-ONE)

    def scale(self, c) -> "TensorElement":
        if not c:
            return TensorElement(self.xe, self.pe, {})
        return TensorElement(self.xe, self.pe, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other: "TensorElement") -> "TensorElement":
        xn, pn = self.xe.nf_word, self.pe.nf_word
        out: dict = {}
        for (u1, v1), c1 in self.terms.items():
            for (u2, v2), c2 in other.terms.items():
                c = c1 * c2
                xs = xn(u1 + u2)
                ps = pn(v1 + v2)
                for u, cu in xs.items():
                    cuc = c * cu
                    for v, cv in ps.items():
                        _acc(out, (u, v), cuc * cv)
        return TensorElement(self.xe, self.pe, out)

    def map_x(self, fn) -> "TensorElement":
        """(fn (x) id) for a linear fn taking and returning NCPoly."""
        by_p: dict = {}
        for (u, v), c in self.terms.items():
            by_p.setdefault(v, {})[u] = c
        out: dict = {}
        for v, xterms in by_p.items():
            img = fn(NCPoly(self.xe, xterms))
            for u, c in img.terms.items():
                _acc(out, (u, v), c)
        return TensorElement(self.xe, self.pe, out)

    def __eq__(self, other):
        if not isinstance(other, TensorElement):
            return NotImplemented
        return self.terms == other.terms

    __hash__ = None

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (u, v), c in sorted(self.terms.items(), key=lambda kv: (len(kv[0][0]), kv[0])):
            xs = "*".join(f"x{k}" for k in u) or "1"
            ps = "*".join(f"p{k}" for k in v) or "1"
            parts.append(f"({c})*{xs}(x){ps}")
        return " + ".join(parts)


def _x_dot_p(calc: Calculus, mom: MomentumAlgebra) -> TensorElement:
    e = calc.engine
    out = TensorElement(e, mom.engine)
    for a in range(calc.n):
        out = out + TensorElement.pure(e, mom.engine, e.gen(a), mom.lower(a))
    return out


def _power_table(base: TensorElement, n: int):
    pw = [TensorElement.pure(base.xe, base.pe, base.xe.one(), base.pe.one())]
    for _ in range(n):
        pw.append(pw[-1] * base)
    return pw


def verify_z0_series(calc: Calculus, n_max: int = 4, mom: MomentumAlgebra | None = None):
    """Exact order-by-order check of the Z = 0 plane-wave identities.

    For 1 <= n <= n_max and every j:
      (del_j (x) id)(x (x) p)^n = n (1 (x) p_j)(x (x) p)^{n-1}
      (box (x) id)(x (x) p)^n = n (n-1) (1 (x) s)(x (x) p)^{n-2}
    plus centrality of s in the momentum algebra.
    """
    from .operators import box

    sd = calc.sd
    if not sd.z_is_zero:
        raise ZNonzeroError("the braided plane-wave series needs Z = 0")
    mom = mom or MomentumAlgebra(sd)
    e, pe = calc.engine, mom.engine
    X = _x_dot_p(calc, mom)
    pw = _power_table(X, n_max)
    checks = []
    defects = mom.centrality_defects()
    checks.append(Check("s central in F", "fail" if defects else "pass",
                        f"s p^{defects[0]} != p^{defects[0]} s" if defects else ""))
    for n in range(1, n_max + 1):
        bad = ""
        for j in range(calc.n):
            lhs = pw[n].map_x(lambda a, j=j: calc.partial(j, a))
            rhs = (TensorElement.pure(e, pe, e.one(), mom.lower(j)) * pw[n - 1]).scale(ONE * n)
            if lhs != rhs:
                bad = f"j={j}: {lhs} != {rhs}"
                break
        checks.append(Check(f"del_j (x.p)^{n} = {n} p_j (x.p)^{n - 1}",
                            "fail" if bad else "pass", bad))
        lhs = pw[n].map_x(lambda a: box(calc, a))
        if n >= 2:
            rhs = (TensorElement.pure(e, pe, e.one(), mom.s) * pw[n - 2]).scale(ONE * (n * (n - 1)))
        else:
            rhs = TensorElement(e, pe)
        bad = "" if lhs == rhs else f"{lhs} != {rhs}"
        checks.append(Check(f"box (x.p)^{n} = {n * (n - 1)} s (x.p)^{max(n - 2, 0)}",
                            "fail" if bad else "pass", bad))
    return ValidationReport(tuple(checks))


def symbolic_u(sd: StructureData, mom: MomentumAlgebra):
    """U_i^l = Z^{kl}_i p_k with entries in the (commutative) momentum algebra."""
    n = sd.n
    e = mom.engine
    U = []
    for i in range(n):
        row = []
        for l in range(n):
            acc = e.zero()
            for k in range(n):
                z = sd.Z(k, l, i)
                if z:
                    acc = acc + mom.lower(k) * z
            row.append(acc)
        U.append(row)
    return U


def verify_u_algebra(calc: Calculus, n_max: int = 6, mom: MomentumAlgebra | None = None):
    """del_j (x.p)^n computed by the calculus equals
    sum_{k=1}^n C(n,k) (U^{k-1})_j^b p_b (x.p)^{n-k}, exactly, for n <= n_max.

    Momenta are commuting indeterminates (the momentum algebra of R = tau).
    """
    sd = calc.sd
    if not sd.is_flip:
        raise NotRTauError("the closed U-matrix formula needs R = tau")
    mom = mom or MomentumAlgebra(sd)
    e, pe = calc.engine, mom.engine
    n = calc.n
    X = _x_dot_p(calc, mom)
    pw = _power_table(X, n_max)
    U = symbolic_u(sd, mom)
    # upow[k] = U^k as a matrix over F
    upow = [[[pe.one() if i == j else pe.zero() for j in range(n)] for i in range(n)]]
    for _ in range(n_max):
        prev = upow[-1]
        nxt = [[sum((prev[i][m] * U[m][j] for m in range(n)), pe.zero())
                for j in range(n)] for i in range(n)]
        upow.append(nxt)
    checks = []
    for N_ in range(1, n_max + 1):
        bad = ""
        for j in range(n):
            lhs = pw[N_].map_x(lambda a, j=j: calc.partial(j, a))
            rhs = TensorElement(e, pe)
            for k in range(1, N_ + 1):
                coef = pe.zero()
                for b in range(n):
                    if upow[k - 1][j][b]:
                        coef = coef + upow[k - 1][j][b] * mom.lower(b)
                if coef:
                    rhs = rhs + (TensorElement.pure(e, pe, e.one(), coef) * pw[N_ - k]).scale(
                        ONE * comb(N_, k))
            if lhs != rhs:
                bad = f"j={j}: {lhs} != {rhs}"
                break
        checks.append(Check(f"del_j (x.p)^{N_} closed U form", "fail" if bad else "pass", bad))
    return ValidationReport(tuple(checks))


# ---------------------------------------------------------------------------
# matrix functions

def _rho_scalar(z):
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    big = np.abs(z) > 1e-8
    out[big] = np.expm1(z[big]) / z[big]
    small = ~big
    out[small] = 1 + z[small] / 2 + z[small] ** 2 / 6
    return out


def _h_scalar(z):
    z = np.asarray(z, dtype=complex)
    half = z / 2
    out = np.ones_like(z)
    big = np.abs(half) > 1e-8
    out[big] = (np.sinh(half[big]) / half[big]) ** 2
    small = ~big
    out[small] = 1 + half[small] ** 2 / 3
    return out


def _eig_apply(X, fn):
    w, V = np.linalg.eig(X)
    if np.linalg.cond(V) >= COND_LIMIT:
        return None
    return V @ np.diag(fn(w)) @ np.linalg.inv(V)


def _rho_taylor(X):
    """Scaling and squaring with rho(2Y) = rho(Y) (Y rho(Y) + 2) / 2."""
    n = X.shape[0]
    ident = np.eye(n, dtype=complex)
    norm = np.linalg.norm(X, 1)
    s = 0
    while norm / 2 ** s > 0.5:
        s += 1
    Y = X / 2 ** s
    term = ident.copy()
    acc = ident.copy()
    k = 1
    while True:
        term = term @ Y / (k + 1)
        acc = acc + term
        k += 1
        if np.linalg.norm(term, 1) <= 1e-17 * np.linalg.norm(acc, 1) or k > 60:
            break
    for _ in range(s):
        acc = acc @ (Y @ acc + 2 * ident) / 2
        Y = 2 * Y
    return acc


def matrix_rho(X, method: str = "auto"):
    """rho(X) = sum_k X^{k-1}/k! = (e^X - 1)/X for a square matrix."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("matrix_rho needs a square matrix")
    if method in ("auto", "eig"):
        out = _eig_apply(X, _rho_scalar)
        if out is not None:
            return out
        if method == "eig":
            raise np.linalg.LinAlgError("matrix is too close to defective for eigendecomposition")
    return _rho_taylor(X)


def matrix_h(X, method: str = "auto"):
    """h(X) = rho(-X) rho(X) = (sinh(X/2)/(X/2))^2."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("matrix_h needs a square matrix")
    if method in ("auto", "eig"):
        out = _eig_apply(X, _h_scalar)
        if out is not None:
            return out
        if method == "eig":
            raise np.linalg.LinAlgError("matrix is too close to defective for eigendecomposition")
    return _rho_taylor(-X) @ _rho_taylor(X)


# ---------------------------------------------------------------------------
# dispersion

@dataclass(frozen=True)
class DispersionModel:
    """Numeric g^{ab}, Z^{kl}_i and mass parameter M for an R = tau structure."""

    g: np.ndarray
    z: np.ndarray  # z[k, l, i] = Z^{kl}_i
    mass: float = 0.0
    method: str = "auto"
    tol: float = REAL_TOL
    gammas: np.ndarray | None = field(default=None, compare=False)

    @classmethod
    def from_structure(cls, sd: StructureData, mass: float = 0.0, **kw) -> "DispersionModel":
        if not sd.is_flip:
            raise NotRTauError("the dispersion relation needs R = tau")
        if mass < 0:
            raise ValueError("mass parameter must be non-negative")
        n = sd.n
        g = np.array([[complex(x) for x in row] for row in sd.g])
        z = np.array([[[complex(sd.Z(k, l, i)) for i in range(n)] for l in range(n)]
                      for k in range(n)])
        return cls(g, z, float(mass), **kw)

    @property
    def n(self) -> int:
        return self.g.shape[0]


def u_matrix(model: DispersionModel, p):
    """U_i^l = Z^{kl}_i p_k for a covariant momentum p (row i, column l)."""
    p = np.asarray(p, dtype=float)
    return np.einsum("kli,k->il", model.z, p)


def _real_or_raise(value: complex, tol: float, what: str) -> float:
    if abs(value.imag) > tol * (1 + abs(value)):
        raise NonRealMassError(f"{what} = {value} is not real; Z is not star compatible")
    return value.real


def mass_squared(model: DispersionModel, p) -> float:
    """m^2 = g^{as} h(-iU)_s^b p_a p_b."""
    p = np.asarray(p, dtype=float)
    H = matrix_h(-1j * u_matrix(model, p), model.method)
    m2 = complex(p @ model.g @ H @ p)
    return _real_or_raise(m2, model.tol, "m^2")


def propagator(model: DispersionModel, p) -> complex:
    """i / (m^2(p) - M^2)."""
    den = mass_squared(model, p) - model.mass ** 2
    if abs(den) < POLE_TOL:
        raise OnShellPoleError(f"momentum {list(p)} is on shell (m^2 - M^2 = {den})")
    return complex(0.0, 1.0 / den)


@dataclass
class DiracDispersion:
    calP: np.ndarray
    m2: float
    mass: complex
    plus: np.ndarray  # columns span the +m eigenspace of calP-slash
    minus: np.ndarray


def _range_basis(P, tol=1e-9):
    u, s, _ = np.linalg.svd(P)
    rank = int(np.sum(s > tol * max(1.0, s[0] if len(s) else 0)))
    return u[:, :rank]


def dirac_dispersion(model: DispersionModel, gammas, p) -> DiracDispersion:
    """calP_j = rho(-iU)_j^b p_b, calP-slash = calP_j gamma^j, split into +-m eigenspaces."""
    G = np.asarray(gammas, dtype=complex)
    if G.ndim != 3 or G.shape[0] != model.n or G.shape[1] != G.shape[2]:
        raise GammaMismatchError(f"need {model.n} square gamma matrices")
    p = np.asarray(p, dtype=float)
    calP = matrix_rho(-1j * u_matrix(model, p), model.method) @ p
    m2c = complex(calP @ model.g @ calP)
    m2 = _real_or_raise(m2c, model.tol, "g^{js} P_j P_s")
    slash = np.einsum("j,jab->ab", calP, G)
    d = G.shape[1]
    ident = np.eye(d)
    resid = np.linalg.norm(slash @ slash - m2c * ident)
    if resid > model.tol * (1 + abs(m2c)) * d:
        raise GammaMismatchError(f"Pslash^2 differs from m^2 by {resid:.3e}; gammas do not match g")
    mass = np.sqrt(complex(m2)) if m2 < 0 else complex(np.sqrt(m2))
    if abs(mass) < 1e-12:
        null = _range_basis(ident - np.linalg.pinv(slash) @ slash)
        return DiracDispersion(calP, m2, mass, null, null)
    plus = _range_basis((ident + slash / mass) / 2)
    minus = _range_basis((ident - slash / mass) / 2)
    return DiracDispersion(calP, m2, mass, plus, minus)


def gamma_array(gammas) -> np.ndarray:
    """Complex array of shape (N, d, d) from a GammaSet or nested lists of Scalars."""
    mats = gammas.mats if hasattr(gammas, "mats") else gammas
    return np.array([[[complex(x) for x in row] for row in m] for m in mats])


def _eval_point(args):
    model, p = args
    m2 = mass_squared(model, p)
    den = m2 - model.mass ** 2
    prop = None if abs(den) < POLE_TOL else complex(0.0, 1.0 / den)
    return m2, prop


def evaluate_grid(model: DispersionModel, points, jobs: int = 1):
    """(m^2, propagator or None at a pole) for every point, in input order."""
    tasks = [(model, tuple(p)) for p in points]
    if jobs <= 1 or len(tasks) < 2:
        return [_eval_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_eval_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
