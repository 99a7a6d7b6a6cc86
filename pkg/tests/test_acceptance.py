"""Acceptance criteria, one test each, at their stated tolerances.

Test names are ``test_<number>_<description>``; the conftest prints one
PASS/FAIL line per criterion at the end of the run.
"""

import itertools
import random
import time
from collections import Counter
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from qminkowski.calculus import Calculus
from qminkowski.errors import StarUndefined, WellDefinednessError
from qminkowski.exact import Scalar
from qminkowski.exterior import build_antisymmetrizer
from qminkowski.fock import BraidOperator, fock_suite
from qminkowski.ncalgebra import NormalFormEngine, build_engine
from qminkowski.operators import box, dirac, identity_suite, make_classical_gammas, random_poly, verify_gammas
from qminkowski.structures import load_structure, structure_from_dict, structure_to_dict, validate
from qminkowski.waves import (
    DispersionModel, mass_squared, matrix_h, propagator, u_matrix, verify_u_algebra, verify_z0_series,
)

from conftest import SHIPPED, calculus, fixture_path, structure


def fresh_calculus(name):
    return Calculus(build_engine(load_structure(fixture_path(name))))


def test_1_classical_equivalence_oracle():
    start = time.perf_counter()
    calc = fresh_calculus("classical")
    e = calc.engine
    assert e.cutoff >= 6
    for w in e.monomial_basis(6):
        count = Counter(w)
        for i in range(4):
            want = {}
            if count[i]:
                rest = list(w)
                rest.remove(i)
                want = {tuple(rest): Scalar(count[i])}
            assert calc.partial(i, e.word(w)) == e.normal_form(want)
    assert time.perf_counter() - start < 10


def test_2_lattice_oracle():
    calc = fresh_calculus("lattice1d")
    e = calc.engine
    l = Fraction(1, 2)
    assert calc.sd.Z(0, 0, 0) == Scalar(l)
    for n in range(9):
        # ((x + l)^n - x^n) / l
        want = {(0,) * k: Scalar(comb(n, k) * l ** (n - k - 1)) for k in range(n)}
        assert calc.partial(0, e.word((0,) * n)) == e.normal_form(want)
    model = DispersionModel.from_structure(calc.sd)
    lf = float(l)
    for p in np.linspace(-30.0, 30.0, 100):
        k = lf * p / 2
        want = (np.sin(k) / k) ** 2 * p * p
        assert abs(mass_squared(model, [p]) - want) <= 1e-12 * abs(want)


def test_3_exterior_dimensions():
    start = time.perf_counter()
    sd = load_structure(fixture_path("classical"))
    ranks = [build_antisymmetrizer(sd, k, max_degree=5).rank for k in range(6)]
    assert ranks == [1, 4, 6, 4, 1, 0]
    assert time.perf_counter() - start < 60


def test_4_calculus_identity_suite():
    failures = []
    for name in SHIPPED:
        for check in identity_suite(calculus(name), None, max_degree=4, seed=42):
            if check.status != "pass":
                failures.append(f"{name}: {check.name}: {check.witness[:160]}")
    assert not failures, "\n".join(failures)


def test_5_dirac_square():
    ran = 0
    for name in SHIPPED:
        sd = structure(name)
        if not sd.is_flip:
            continue
        calc = calculus(name)
        gammas = make_classical_gammas(sd)
        assert verify_gammas(sd, gammas).ok
        rng = random.Random(5)
        for _ in range(4):
            phi = tuple(random_poly(calc.engine, rng, 4, 3) for _ in range(gammas.d))
            assert dirac(calc, gammas, dirac(calc, gammas, phi)) == tuple(box(calc, p) for p in phi)
        ran += 1
    assert ran >= 3


def test_6_z0_series():
    report = verify_z0_series(calculus("classical"), 4)
    assert report["s central in F"].status == "pass"
    assert report.ok, report.failures()
    assert len(report.checks) == 1 + 2 * 4


def test_7_r_tau_closed_form():
    for name in ("lattice1d", "epsilon"):
        report = verify_u_algebra(calculus(name), 6)
        assert report.ok, (name, report.failures())
        assert len(report.checks) == 6


def test_8_epsilon_propagator():
    eps, M = 0.5, 1.0
    model = DispersionModel.from_structure(structure("epsilon"), mass=M)
    axis = np.linspace(-1.7, 2.3, 5)  # avoids the on-shell point p = (+-1, 0, 0, 0)
    for p in itertools.product(axis, repeat=4):
        k = eps * p[1] / 4
        factor = (np.sinh(k) / k) ** 2 if k else 1.0
        want = 1j / ((p[0] ** 2 - p[3] ** 2) * factor - p[1] ** 2 - p[2] ** 2 - M * M)
        got = propagator(model, p)
        assert abs(got - want) <= 1e-10 * abs(want), (p, got, want)


def test_9_spectral_reality():
    rng = np.random.default_rng(9)
    names = [n for n in SHIPPED if structure(n).is_flip and validate(structure(n)).ok]
    assert "epsilon" in names
    for name in names:
        model = DispersionModel.from_structure(structure(name))
        grid = np.linspace(-4, 4, 7)
        samples = list(itertools.product(grid, repeat=model.n)) + list(rng.uniform(-10, 10, (200, model.n)))
        for p in samples:
            p = np.asarray(p)
            m2 = complex(p @ model.g @ matrix_h(-1j * u_matrix(model, p)) @ p)
            assert abs(m2.imag) / (1 + abs(m2)) < 1e-10, (name, p, m2)


def test_10_fock_suite():
    wanted = {"K^2 = id", "braid relation K1 K2 K1 = K2 K1 K2", "pi is a representation",
              "W^(n) formulas agree"}
    for name in ("classical", "epsilon"):
        braid = BraidOperator(calculus(name).engine)
        for n in (2, 3, 4):
            checks = {c.name: c for c in fock_suite(braid, n)}
            assert wanted <= set(checks)
            bad = [c for c in checks.values() if c.status != "pass"]
            assert not bad, (name, n, bad)


def test_11_well_definedness_gates():
    for name in SHIPPED:
        calc = calculus(name)
        for q in calc.engine.relations:
            rho, dd, base = calc.derivative_homomorphism(q)
            assert base.is_zero() and all(p.is_zero() for p in dd)
            assert all(p.is_zero() for row in rho for p in row)
        assert calc.engine.star_defined(), name
        for q in calc.engine.relations:
            assert calc.engine.normal_form(calc.engine._star_raw(q)).is_zero()
    # a failing gate aborts the dependent computation with a diagnostic
    data = structure_to_dict(structure("n2twist"))
    data["z"][3][1] = "0"
    with pytest.raises(WellDefinednessError, match="rho_0\\^1"):
        Calculus(NormalFormEngine(structure_from_dict(data)))
    data = structure_to_dict(structure("n2twist"))
    z = [["0", "0"] for _ in range(4)]
    z[1][0] = "1/2"
    data.update(z=z)
    e = NormalFormEngine(structure_from_dict(data))
    with pytest.raises(StarUndefined, match="star of relation"):
        e.star(e.gen(0))
