"""Structure data (N, R, Z, T, g[, gammas]) of a quantum space and its
matrix-level consistency checks.

Index conventions: generators are numbered ``0..N-1``; a pair ``(i, j)`` is
flattened row-major to ``i*N + j``.  ``R[i*N+j][k*N+l]`` is R^{ij}_{kl},
``Z[k*N+l][s]`` is Z^{kl}_s, ``T[k*N+l]`` is T^{kl} and ``g[a][b]`` is g^{ab}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SingularMetricError, StructureInvalidError, StructureParseError
from .exact import ONE, ZERO, Scalar, as_scalar, mat_inverse, parse_scalar

__all__ = [
    "StructureData",
    "Check",
    "ValidationReport",
    "load_structure",
    "structure_from_dict",
    "structure_to_dict",
    "dump_structure",
    "validate",
    "flip_matrix",
]

DEFAULT_CUTOFF = 8

Matrix = tuple  # tuple of tuples of Scalar


def _freeze(rows) -> Matrix:
    return tuple(tuple(r) for r in rows)


def flip_matrix(n: int) -> Matrix:
    """The flip tau as an N^2 x N^2 matrix: R^{ij}_{kl} = delta^i_l delta^j_k."""
    size = n * n
    rows = [[ZERO] * size for _ in range(size)]
    for i in range(n):
        for j in range(n):
            rows[i * n + j][j * n + i] = ONE
    return _freeze(rows)


@dataclass(frozen=True, eq=True)
class StructureData:
    n: int
    r: Matrix
    z: Matrix
    t: tuple
    g: Matrix
    gammas: tuple | None = None
    f_tilde: Matrix | None = None
    degree_cutoff: int = DEFAULT_CUTOFF
    g_inv: Matrix = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        n = self.n
        if not isinstance(n, int) or n < 1:
            raise StructureParseError(f"n must be a positive integer, got {n!r}")
        _check_shape("r", self.r, n * n, n * n)
        _check_shape("z", self.z, n * n, n)
        if len(self.t) != n * n:
            raise StructureParseError(f"t must have {n * n} entries, got {len(self.t)}")
        _check_shape("g", self.g, n, n)
        if self.f_tilde is not None:
            _check_shape("f_tilde", self.f_tilde, n ** 3, n)
        if self.gammas is not None:
            if len(self.gammas) != n:
                raise StructureParseError(f"expected {n} gamma matrices, got {len(self.gammas)}")
            d = len(self.gammas[0])
            for a, gam in enumerate(self.gammas):
                _check_shape(f"gammas[{a}]", gam, d, d)
        if not isinstance(self.degree_cutoff, int) or self.degree_cutoff < 1:
            raise StructureParseError("degree_cutoff must be a positive integer")
        try:
            inv = mat_inverse([list(row) for row in self.g])
        except ZeroDivisionError:
            raise SingularMetricError("metric g is singular") from None
        object.__setattr__(self, "g_inv", _freeze(inv))

    # tensor accessors -----------------------------------------------------
    def R(self, i, j, k, l) -> Scalar:
        n = self.n
        return self.r[i * n + j][k * n + l]

    def Z(self, k, l, s) -> Scalar:
        return self.z[k * self.n + l][s]

    def T(self, k, l) -> Scalar:
        return self.t[k * self.n + l]

    @property
    def is_flip(self) -> bool:
        """True when R is the flip tau, so coordinates and forms commute classically."""
        return self.r == flip_matrix(self.n)

    @property
    def z_is_zero(self) -> bool:
        return not any(v for row in self.z for v in row)

    def replace(self, **changes) -> "StructureData":
        kw = {
            "n": self.n, "r": self.r, "z": self.z, "t": self.t, "g": self.g,
            "gammas": self.gammas, "f_tilde": self.f_tilde,
            "degree_cutoff": self.degree_cutoff,
        }
        kw.update(changes)
        return StructureData(**kw)

    def require_valid(self) -> "ValidationReport":
        """Raise StructureInvalidError unless every core check passes."""
        report = validate(self)
        if not report.core_ok:
            bad = ", ".join(c.name for c in report.failures(core_only=True))
            raise StructureInvalidError(f"structure fails validation: {bad}", report)
        return report


def _check_shape(name, rows, nrows, ncols):
    if len(rows) != nrows or any(len(r) != ncols for r in rows):
        raise StructureParseError(f"{name} must be a {nrows}x{ncols} array")


# ---------------------------------------------------------------------------
# file format

def _literal(x, where: str) -> Scalar:
    if isinstance(x, bool):
        raise StructureParseError(f"{where}: boolean is not a complex literal")
    if isinstance(x, int):
        return as_scalar(x)
    if isinstance(x, str):
        try:
            return parse_scalar(x)
        except StructureParseError as exc:
            raise StructureParseError(f"{where}: {exc}") from None
    raise StructureParseError(f"{where}: expected a complex literal string, got {x!r}")


def _matrix(obj, where: str) -> Matrix:
    if not isinstance(obj, list) or not all(isinstance(r, list) for r in obj):
        raise StructureParseError(f"{where} must be an array of arrays")
    return tuple(
        tuple(_literal(x, f"{where}[{i}][{j}]") for j, x in enumerate(row))
        for i, row in enumerate(obj)
    )


def structure_from_dict(data: dict) -> StructureData:
    if not isinstance(data, dict):
        raise StructureParseError("structure file must contain a JSON object")
    missing = [k for k in ("n", "r", "z", "t", "g") if k not in data]
    if missing:
        raise StructureParseError(f"missing fields: {', '.join(missing)}")
    known = {"n", "r", "z", "t", "g", "gammas", "f_tilde", "degree_cutoff", "description"}
    unknown = set(data) - known
    if unknown:
        raise StructureParseError(f"unknown fields: {', '.join(sorted(unknown))}")
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise StructureParseError("n must be an integer")
    t = data["t"]
    if not isinstance(t, list):
        raise StructureParseError("t must be an array")
    gammas = None
    if data.get("gammas") is not None:
        gammas = tuple(_matrix(m, f"gammas[{a}]") for a, m in enumerate(data["gammas"]))
    f_tilde = _matrix(data["f_tilde"], "f_tilde") if data.get("f_tilde") is not None else None
    return StructureData(
        n=n,
        r=_matrix(data["r"], "r"),
        z=_matrix(data["z"], "z"),
        t=tuple(_literal(x, f"t[{i}]") for i, x in enumerate(t)),
        g=_matrix(data["g"], "g"),
        gammas=gammas,
        f_tilde=f_tilde,
        degree_cutoff=data.get("degree_cutoff", DEFAULT_CUTOFF),
    )


def load_structure(path) -> StructureData:
    """Parse a structure file; scalars are exact and g^{-1} is computed exactly."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructureParseError(f"{path}: invalid JSON ({exc})") from None
    return structure_from_dict(data)


def structure_to_dict(sd: StructureData) -> dict:
    def mat(m):
        return [[str(x) for x in row] for row in m]

    out = {
        "n": sd.n,
        "r": mat(sd.r),
        "z": mat(sd.z),
        "t": [str(x) for x in sd.t],
        "g": mat(sd.g),
    }
    if sd.gammas is not None:
        out["gammas"] = [mat(gm) for gm in sd.gammas]
    if sd.f_tilde is not None:
        out["f_tilde"] = mat(sd.f_tilde)
    out["degree_cutoff"] = sd.degree_cutoff
    return out


def dump_structure(sd: StructureData) -> str:
    return json.dumps(structure_to_dict(sd), indent=1)


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Check:
    name: str
    status: str  # "pass" | "fail" | "skip"
    witness: str = ""
    star: bool = False

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    def __iter__(self):
        return iter(self.checks)

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def ran(self):
        return [c for c in self.checks if c.status != "skip"]

    def failures(self, core_only=False):
        return [c for c in self.checks
                if c.status == "fail" and not (core_only and c.star)]

    @property
    def ok(self) -> bool:
        return not self.failures()

    @property
    def core_ok(self) -> bool:
        return not self.failures(core_only=True)

    @property
    def star_ok(self) -> bool:
        return all(c.status != "fail" for c in self.checks if c.star)

    def summary(self) -> str:
        ran = self.ran
        return f"{sum(c.passed for c in ran)}/{len(ran)} checks passed"


def _first_nonzero(values):
    """values: iterable of (index_tuple, Scalar); first nonzero pair or None."""
    for idx, v in values:
        if v:
            return idx, v
    return None


def _witness(hit):
    if hit is None:
        return ""
    idx, v = hit
    return f"index {idx}: residual {v}"


def _apply(mat, vec):
    out = []
    for row in mat:
        acc = ZERO
        for a, b in zip(row, vec):
            if a and b:
                acc = acc + a * b
        out.append(acc)
    return out


def _a3_apply(sd: StructureData, vec):
    """Apply A_3 = 1 - R12 - R23 + R12 R23 + R23 R12 - R12 R23 R12 to vec in C^{N^3}."""
    n = sd.n

    def r12(v):
        out = [ZERO] * (n ** 3)
        for idx, x in enumerate(v):
            if not x:
                continue
            k, l, m = idx // (n * n), (idx // n) % n, idx % n
            for i in range(n):
                for j in range(n):
                    c = sd.R(i, j, k, l)
                    if c:
                        p = (i * n + j) * n + m
                        out[p] = out[p] + c * x
        return out

    def r23(v):
        out = [ZERO] * (n ** 3)
        for idx, x in enumerate(v):
            if not x:
                continue
            a, k, l = idx // (n * n), (idx // n) % n, idx % n
            for i in range(n):
                for j in range(n):
                    c = sd.R(i, j, k, l)
                    if c:
                        p = (a * n + i) * n + j
                        out[p] = out[p] + c * x
        return out

    terms = [
        (ONE, vec),
        (-ONE, r12(vec)),
        (-ONE, r23(vec)),
        (ONE, r12(r23(vec))),
        (ONE, r23(r12(vec))),
        (-ONE, r12(r23(r12(vec)))),
    ]
    out = [ZERO] * (n ** 3)
    for s, v in terms:
        out = [o + s * x for o, x in zip(out, v)]
    return out


def validate(sd: StructureData) -> ValidationReport:
    """Exact matrix-level consistency checks.

    Failures are report entries, never exceptions.  Checks (e) and (f) are
    flagged as star checks: they gate the star involution and metric
    contractions but not the bare algebra.
    """
    n = sd.n
    size = n * n
    checks = []

    # (a) R^2 = 1
    hit = None
    for i in range(size):
        for k in range(size):
            acc = ZERO
            for j in range(size):
                a = sd.r[i][j]
                if a:
                    b = sd.r[j][k]
                    if b:
                        acc = acc + a * b
            if acc != (ONE if i == k else ZERO):
                hit = ((divmod(i, n), divmod(k, n)), acc - (ONE if i == k else ZERO))
                break
        if hit:
            break
    checks.append(Check("R^2 = 1", "fail" if hit else "pass", _witness(hit)))

    # (b) R T = -T
    rt = _apply(sd.r, sd.t)
    hit = _first_nonzero((divmod(i, n), rt[i] + sd.t[i]) for i in range(size))
    checks.append(Check("R T = -T", "fail" if hit else "pass", _witness(hit)))

    # (c) A_3 (Z (x) 1 - 1 (x) Z) T = 0
    vec = [ZERO] * (n ** 3)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc = ZERO
                for a in range(n):
                    for b in range(n):
                        t = sd.T(a, b)
                        if not t:
                            continue
                        # (Z (x) 1)^{ijk}_{ab} = Z^{ij}_a d^k_b ; (1 (x) Z)^{ijk}_{ab} = d^i_a Z^{jk}_b
                        if k == b:
                            acc = acc + sd.Z(i, j, a) * t
                        if i == a:
                            acc = acc - sd.Z(j, k, b) * t
                vec[(i * n + j) * n + k] = acc
    res = _a3_apply(sd, vec)
    hit = _first_nonzero(((p // (n * n), (p // n) % n, p % n), v) for p, v in enumerate(res))
    checks.append(Check("A_3 (Z(x)1 - 1(x)Z) T = 0", "fail" if hit else "pass", _witness(hit)))

    # (d) R g = g, g viewed as a vector in C^{N^2}
    gvec = [sd.g[a][b] for a in range(n) for b in range(n)]
    rg = _apply(sd.r, gvec)
    hit = _first_nonzero((divmod(i, n), rg[i] - gvec[i]) for i in range(size))
    checks.append(Check("R g = g", "fail" if hit else "pass", _witness(hit)))

    # F-tilde (only when the file asserts one)
    if sd.f_tilde is not None:
        hit = _first_nonzero(
            ((p, s), v) for p, row in enumerate(sd.f_tilde) for s, v in enumerate(row)
        )
        checks.append(Check("F~ = 0", "fail" if hit else "pass", _witness(hit)))

    # (e) g~ = g with g~^{ij} = conj(g^{ji})
    hit = _first_nonzero(
        ((i, j), sd.g[j][i].conj() - sd.g[i][j]) for i in range(n) for j in range(n)
    )
    checks.append(Check("conj(g)^T = g", "fail" if hit else "pass", _witness(hit), star=True))

    # (f) R = tau: Z^{kl}_r g^{rj} = -Z^{kj}_s g^{ls}
    if sd.is_flip:
        def residuals():
            for k in range(n):
                for l in range(n):
                    for j in range(n):
                        lhs = ZERO
                        rhs = ZERO
                        for r in range(n):
                            lhs = lhs + sd.Z(k, l, r) * sd.g[r][j]
                            rhs = rhs + sd.Z(k, j, r) * sd.g[l][r]
                        yield (k, l, j), lhs + rhs
        hit = _first_nonzero(residuals())
        checks.append(Check("Z g = -(Z g)^T (R = tau)", "fail" if hit else "pass",
                            _witness(hit), star=True))
    else:
        checks.append(Check("Z g = -(Z g)^T (R = tau)", "skip", "R is not the flip", star=True))

    return ValidationReport(tuple(checks))
