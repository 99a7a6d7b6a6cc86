import itertools
import random
from fractions import Fraction
from functools import lru_cache
from math import factorial

import pytest

from qminkowski.errors import SizeExceeded, StarUndefined, StructureInvalidError
from qminkowski.exact import ONE, ZERO, Scalar
from qminkowski.exterior import Exterior, build_antisymmetrizer, permutation_words
from qminkowski.operators import random_poly
from qminkowski.structures import structure_from_dict, structure_to_dict

from conftest import SHIPPED, calculus, structure

RANKS = {
    "classical": [1, 4, 6, 4, 1, 0],
    "epsilon": [1, 4, 6, 4, 1, 0],
    "skew": [1, 4, 6, 4, 1, 0],
    "n2twist": [1, 2, 1, 0],
    "lattice1d": [1, 1, 0],
}


@lru_cache(maxsize=None)
def exterior(name):
    return Exterior(calculus(name))


def sign(perm):
    inv = sum(1 for a, b in itertools.combinations(range(len(perm)), 2) if perm[a] > perm[b])
    return -1 if inv % 2 else 1


@pytest.mark.parametrize("name", SHIPPED)
def test_ranks(name):
    ext = exterior(name)
    assert [ext.rank(k) for k in range(len(RANKS[name]))] == RANKS[name]


@pytest.mark.parametrize("name", SHIPPED)
def test_low_degrees_are_identity(name):
    sd = structure(name)
    for k in (0, 1):
        A = build_antisymmetrizer(sd, k)
        words = list(itertools.product(range(sd.n), repeat=k))
        for I in words:
            for J in words:
                assert A.entry(I, J) == (ONE if I == J else ZERO)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_classical_matches_levi_civita(k):
    """Flip case: A_k(I, J) = (1/k!) sum of sgn(pi) over pi with J = I permuted."""
    A = build_antisymmetrizer(structure("classical"), k)
    words = list(itertools.product(range(4), repeat=k))
    for I in words:
        want = {}
        for pi in itertools.permutations(range(k)):
            J = tuple(I[pi[a]] for a in range(k))
            want[J] = want.get(J, 0) + Fraction(sign(pi), factorial(k))
        for J in words:
            assert A.entry(I, J) == Scalar(want.get(J, 0))


def r_action(sd, words, k, pos):
    """Matrix of R acting on tensor positions pos, pos+1 of degree-k words."""
    n = sd.n
    out = {}
    for I in words:
        row = {}
        for c in range(n):
            for d in range(n):
                r = sd.R(I[pos], I[pos + 1], c, d)
                if r:
                    J = I[:pos] + (c, d) + I[pos + 2:]
                    row[J] = row.get(J, ZERO) + r
        out[I] = row
    return out


def matmul(a, b, words):
    return {I: {K: v for K in words
                if (v := sum((a[I].get(J, ZERO) * b[J].get(K, ZERO) for J in words), ZERO))}
            for I in words}


@pytest.mark.parametrize("name, k", [(n, k) for n in SHIPPED for k in (2, 3)])
def test_projector_and_antisymmetry(name, k):
    sd = structure(name)
    A = build_antisymmetrizer(sd, k)
    words = list(itertools.product(range(sd.n), repeat=k))
    M = {I: dict(A.matrix.get(I, {})) for I in words}
    assert matmul(M, M, words) == {I: M[I] for I in words}
    neg = {I: {J: -v for J, v in M[I].items()} for I in words}
    for pos in range(k - 1):
        R = r_action(sd, words, k, pos)
        assert matmul(R, M, words) == neg
        assert matmul(M, R, words) == neg
    assert {I: r for I, r in A.reconstruct().items()} == {I: r for I, r in M.items() if r}


def test_permutation_words_are_reduced():
    for n in range(1, 6):
        table = permutation_words(n)
        assert len(table) == factorial(n)
        for perm, word in table.items():
            arr = list(range(n))
            for k in word:
                arr[k], arr[k + 1] = arr[k + 1], arr[k]
            assert tuple(arr) == perm
            assert len(word) == sum(1 for a, b in itertools.combinations(perm, 2) if a > b)


def test_size_guards():
    sd = structure("classical")
    with pytest.raises(SizeExceeded):
        build_antisymmetrizer(sd, 7)
    with pytest.raises(SizeExceeded):
        build_antisymmetrizer(sd, 11, max_degree=12)


def test_non_braid_r_is_rejected():
    # R swaps x0 x1 <-> x1 x0 and x0 x0 <-> x1 x1: R^2 = 1 but no braid relation
    data = structure_to_dict(structure("n2twist"))
    r = [["0"] * 4 for _ in range(4)]
    for a, b in [(0, 3), (3, 0), (1, 2), (2, 1)]:
        r[a][b] = "1"
    data.update(r=r, z=[["0", "0"] for _ in range(4)])
    sd = structure_from_dict(data)
    with pytest.raises(StructureInvalidError, match="braid relation"):
        build_antisymmetrizer(sd, 3)


@pytest.mark.parametrize("name", SHIPPED)
def test_two_form_relation(name):
    ext = exterior(name)
    sd, n = ext.sd, ext.n
    for i in range(n):
        for j in range(n):
            lhs = ext.dx(i, j)
            rhs = ext.zero(2)
            for k in range(n):
                for l in range(n):
                    r = sd.R(i, j, k, l)
                    if r:
                        rhs = rhs - ext.dx(k, l) * r
            assert lhs == rhs


def test_classical_wedge_examples():
    ext = exterior("classical")
    e = ext.engine
    assert ext.dx(0, 0).is_zero()
    vol = ext.wedge(ext.wedge(ext.dx(0), ext.dx(1)), ext.wedge(ext.dx(2), ext.dx(3)))
    assert vol == ext.dx(0, 1, 2, 3) and not vol.is_zero()
    assert ext.wedge(ext.dx(1), ext.dx(0)) == -ext.dx(0, 1)
    omega = ext.from_words(1, {(1,): e.gen(0)})
    assert ext.d(omega) == ext.dx(0, 1)
    a = e.word((0, 1, 2))
    assert ext.d(ext.d(ext.function(a))).is_zero()


def test_lattice_d_of_x_dx():
    ext = exterior("lattice1d")
    x = ext.engine.gen(0)
    omega = ext.from_words(1, {(0,): x})
    assert ext.rank(2) == 0
    assert ext.d(omega).is_zero()


def random_form(ext, rng, degree, poly_degree=2):
    words = {J: random_poly(ext.engine, rng, poly_degree, terms=2)
             for J in rng.sample(list(itertools.product(range(ext.n), repeat=degree)),
                                 min(3, ext.n ** degree))}
    return ext.from_words(degree, words)


@pytest.mark.parametrize("name", SHIPPED)
def test_dd_zero(name):
    ext = exterior(name)
    rng = random.Random(21)
    for _ in range(4):
        a = random_poly(ext.engine, rng, 5)
        assert ext.d(ext.d(ext.function(a))).is_zero()
    for degree in (1, 2):
        if ext.rank(degree + 2) == 0 and ext.rank(degree) == 0:
            continue
        for _ in range(3):
            omega = random_form(ext, rng, degree)
            assert ext.d(ext.d(omega)).is_zero()


@pytest.mark.parametrize("name", SHIPPED)
def test_graded_leibniz_and_associativity(name):
    ext = exterior(name)
    rng = random.Random(13)
    for k, l in [(0, 1), (1, 1), (1, 0), (0, 2)]:
        omega, theta = random_form(ext, rng, k, 1), random_form(ext, rng, l, 1)
        lhs = ext.d(ext.wedge(omega, theta))
        s = ONE if k % 2 == 0 else -ONE
        rhs = ext.wedge(ext.d(omega), theta) + ext.wedge(omega, ext.d(theta)) * s
        assert lhs == rhs
    a, b, c = (random_form(ext, rng, 1, 1) for _ in range(3))
    assert ext.wedge(ext.wedge(a, b), c) == ext.wedge(a, ext.wedge(b, c))


@pytest.mark.parametrize("name", SHIPPED)
def test_oneform_interop(name):
    ext = exterior(name)
    calc = ext.calc
    rng = random.Random(1)
    a = random_poly(ext.engine, rng, 3)
    assert ext.to_oneform(ext.d(ext.function(a))) == calc.d0(a)
    omega = calc.oneform([random_poly(ext.engine, rng, 2) for _ in range(calc.n)])
    assert ext.to_oneform(ext.from_oneform(omega)) == omega
    b = random_poly(ext.engine, rng, 2)
    assert ext.to_oneform(b * ext.from_oneform(omega)) == b * omega


@pytest.mark.parametrize("name", SHIPPED)
def test_bimodule_consistency(name):
    assert exterior(name).bimodule_consistency() == []


def test_star_form_classical():
    ext = exterior("classical")
    assert ext.star_form(ext.dx(0, 1)) == ext.dx(0, 1)
    assert ext.star_form(ext.dx(0, 1)) == -ext.dx(1, 0)


@pytest.mark.parametrize("name", ["classical", "epsilon", "skew", "n2twist"])
def test_star_form_properties(name):
    ext = exterior(name)
    rng = random.Random(17)
    for _ in range(3):
        omega = random_form(ext, rng, 2, 1)
        assert ext.star_form(ext.star_form(omega)) == omega
        theta = random_form(ext, rng, 1, 1)
        assert ext.d(ext.star_form(theta)) == ext.star_form(ext.d(theta))
        t1, t2 = random_form(ext, rng, 1, 1), random_form(ext, rng, 1, 1)
        lhs = ext.star_form(ext.wedge(t1, t2))
        rhs = -ext.wedge(ext.star_form(t2), ext.star_form(t1))
        assert lhs == rhs


def test_star_form_undefined_on_lattice():
    ext = exterior("lattice1d")
    with pytest.raises(StarUndefined):
        ext.star_form(ext.dx(0))
