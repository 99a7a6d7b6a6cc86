from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qminkowski.errors import StructureParseError
from qminkowski.exact import (
    I, ONE, ZERO, Scalar, as_scalar, mat_inverse, mat_mul, parse_scalar, rref, sparse_rref,
)

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=30)
scalars = st.builds(Scalar, rationals, rationals)


def pair_mul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def as_pair(s):
    return (Fraction(s.re), Fraction(s.im))


def test_parse_literal_from_file_contract():
    s = parse_scalar("1/3+2/5i")
    assert s.re == Fraction(1, 3) and s.im == Fraction(2, 5)


@pytest.mark.parametrize("text, re, im", [
    ("7", 7, 0), ("-3/4", Fraction(-3, 4), 0), ("0-1/2i", 0, Fraction(-1, 2)),
    ("+2-3i", 2, -3), ("0", 0, 0),
])
def test_parse_accepts(text, re, im):
    s = parse_scalar(text)
    assert (s.re, s.im) == (re, im)


@pytest.mark.parametrize("text", ["1/0", "2/4", "abc", "1+i", "1.5", "", "-1/2i", "1/2+"])
def test_parse_rejects(text):
    with pytest.raises(StructureParseError):
        parse_scalar(text)


@given(scalars)
def test_print_parse_round_trip(a):
    assert parse_scalar(str(a)) == a


@given(scalars, scalars)
def test_arithmetic_matches_pair_oracle(a, b):
    pa, pb = as_pair(a), as_pair(b)
    assert as_pair(a + b) == (pa[0] + pb[0], pa[1] + pb[1])
    assert as_pair(a - b) == (pa[0] - pb[0], pa[1] - pb[1])
    assert as_pair(a * b) == pair_mul(pa, pb)
    if b:
        assert (a / b) * b == a


@given(scalars, scalars, scalars)
def test_field_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a


@given(scalars)
def test_inverse_and_conjugate(a):
    if a:
        assert a * a.inverse() == ONE
    assert (a * a.conj()).is_real
    assert a.conj().conj() == a


def test_zero_inverse_raises():
    with pytest.raises(ZeroDivisionError):
        ZERO.inverse()


def test_i_squared_and_coercion():
    assert I * I == -ONE
    assert as_scalar(Fraction(1, 2)) + as_scalar(1) == Scalar(Fraction(3, 2))
    assert complex(parse_scalar("1/4+1/2i")) == 0.25 + 0.5j
    assert hash(Scalar(3)) == hash(as_scalar(3))


def test_matrix_inverse_exact():
    m = [[Scalar(2), Scalar(1)], [I, Scalar(1)]]
    inv = mat_inverse(m)
    assert mat_mul(m, inv) == [[ONE, ZERO], [ZERO, ONE]]


def test_singular_inverse_raises():
    with pytest.raises(ZeroDivisionError):
        mat_inverse([[ONE, ONE], [ONE, ONE]])


@given(st.lists(st.lists(st.integers(-3, 3), min_size=4, max_size=4), min_size=1, max_size=5))
def test_sparse_rref_agrees_with_dense(raw):
    dense_rows = [[Scalar(v) for v in r] for r in raw]
    sparse_rows = [{c: Scalar(v) for c, v in enumerate(r) if v} for r in raw]
    rows, pivots = rref(dense_rows)
    sparse = sparse_rref(sparse_rows)
    assert [p for p, _ in sparse] == pivots
    for (p, srow), drow in zip(sparse, rows):
        assert [srow.get(c, ZERO) for c in range(4)] == drow
