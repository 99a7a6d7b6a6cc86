import itertools

import numpy as np
import pytest
from scipy.linalg import expm

from qminkowski.errors import (
    GammaMismatchError, NonRealMassError, NotRTauError, OnShellPoleError, ZNonzeroError,
)
from qminkowski.operators import make_classical_gammas
from qminkowski.waves import (
    DispersionModel, MomentumAlgebra, dirac_dispersion, evaluate_grid, gamma_array, mass_squared,
    matrix_h, matrix_rho, propagator, u_matrix, verify_u_algebra, verify_z0_series,
)

from conftest import calculus, structure

EPS = 0.5


def expm_rho(X):
    """rho(X) = int_0^1 e^{tX} dt, read off the block exponential [[X, 1], [0, 0]]."""
    n = X.shape[0]
    big = np.zeros((2 * n, 2 * n), dtype=complex)
    big[:n, :n] = X
    big[:n, n:] = np.eye(n)
    return expm(big)[:n, n:]


def close(a, b, tol):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) <= tol * max(1.0, np.linalg.norm(b))


# ---------------------------------------------------------------------------
# exact series checks

@pytest.mark.parametrize("name", ["classical", "skew"])
def test_z0_series(name):
    report = verify_z0_series(calculus(name), 4)
    assert report.ok, report.failures()
    assert report["s central in F"].status == "pass"


def test_z0_first_order():
    calc = calculus("classical")
    mom = MomentumAlgebra(calc.sd)
    report = verify_z0_series(calc, 1, mom)
    assert report["del_j (x.p)^1 = 1 p_j (x.p)^0"].status == "pass"


@pytest.mark.parametrize("name", ["classical", "skew"])
def test_momentum_scalar_is_central(name):
    mom = MomentumAlgebra(structure(name))
    assert mom.centrality_defects() == []


def test_z0_series_rejects_nonzero_z():
    with pytest.raises(ZNonzeroError):
        verify_z0_series(calculus("epsilon"))


@pytest.mark.parametrize("name", ["lattice1d", "epsilon", "classical", "n2twist"])
def test_u_algebra(name):
    report = verify_u_algebra(calculus(name), 6)
    assert report.ok, report.failures()
    assert len(report.checks) == 6


def test_u_algebra_rejects_general_r():
    with pytest.raises(NotRTauError):
        verify_u_algebra(calculus("skew"))


# ---------------------------------------------------------------------------
# matrix functions

def test_rho_and_h_of_zero():
    Z = np.zeros((3, 3))
    assert close(matrix_rho(Z), np.eye(3), 1e-15)
    assert close(matrix_h(Z), np.eye(3), 1e-15)


def test_rho_diagonal():
    c = np.array([0.3, -1.2, 2j, 1e-10])
    want = np.diag([np.expm1(x) / x for x in c])
    assert close(matrix_rho(np.diag(c)), want, 1e-14)


def test_rho_symmetric_pair():
    a = 0.7
    X = np.array([[0, a], [a, 0]])
    ev = np.sort(np.linalg.eigvals(matrix_rho(X)).real)
    want = np.sort([np.expm1(a) / a, np.expm1(-a) / -a])
    assert np.allclose(ev, want, rtol=1e-14)


def test_h_scalar_imaginary():
    for y in (0.1, 1.0, 3.0):
        h = matrix_h(np.array([[1j * y]]))[0, 0]
        assert abs(h - (np.sin(y / 2) / (y / 2)) ** 2) < 1e-14


def random_matrices(seed=0, count=10):
    rng = np.random.default_rng(seed)
    for k in range(count):
        A = rng.normal(size=(4, 4))
        if k % 2:
            A = 1j * (A - A.T)  # Hermitian: real spectrum of -iA is imaginary
        yield A


@pytest.mark.parametrize("method", ["auto", "eig", "taylor"])
def test_rho_against_block_exponential(method):
    for X in random_matrices():
        assert close(matrix_rho(X, method), expm_rho(X), 1e-12)


def test_taylor_handles_defective_matrix():
    J = np.array([[0.5, 1.0], [0.0, 0.5]])  # Jordan block
    assert close(matrix_rho(J), expm_rho(J), 1e-13)
    with pytest.raises(np.linalg.LinAlgError):
        matrix_rho(J, "eig")


def test_h_is_rho_product_and_even():
    for X in random_matrices(1):
        H = matrix_h(X)
        assert close(H, matrix_rho(-X) @ matrix_rho(X), 1e-12)
        assert close(H, matrix_h(-X), 1e-12)
        assert close(matrix_h(X, "taylor"), H, 1e-12)


def test_matrix_functions_need_square_input():
    with pytest.raises(ValueError):
        matrix_rho(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        matrix_h(np.zeros(3))


# ---------------------------------------------------------------------------
# dispersion

def test_u_is_imaginary_for_star_compatible_z():
    model = DispersionModel.from_structure(structure("epsilon"))
    U = u_matrix(model, [0.3, 1.1, -0.4, 2.0])
    assert np.allclose(U.real, 0)
    assert np.isclose(U[0, 3], 1j * EPS * 1.1 / 2) and np.isclose(U[3, 0], 1j * EPS * 1.1 / 2)


def test_zero_u_gives_metric_square():
    model = DispersionModel.from_structure(structure("classical"))
    rng = np.random.default_rng(4)
    for p in rng.normal(size=(10, 4)):
        assert abs(mass_squared(model, p) - (p[0] ** 2 - p[1:] @ p[1:])) < 1e-12
    assert propagator(model, [1, 0, 0, 0]) == 1j


def test_lattice_dispersion():
    l = 0.5
    model = DispersionModel.from_structure(structure("lattice1d"))
    for p in np.linspace(-20, 20, 100):
        k = l * p / 2
        want = (np.sin(k) / k) ** 2 * p * p if k else 0.0
        got = mass_squared(model, [p])
        assert abs(got - want) <= 1e-12 * max(abs(want), 1e-300) or got == want == 0.0


def epsilon_reference(p, M):
    k = EPS * p[1] / 4
    factor = (np.sinh(k) / k) ** 2 if k else 1.0
    return 1j / ((p[0] ** 2 - p[3] ** 2) * factor - p[1] ** 2 - p[2] ** 2 - M * M)


def test_epsilon_propagator_grid():
    model = DispersionModel.from_structure(structure("epsilon"), mass=1.0)
    axis = np.linspace(-2.1, 1.9, 5)
    for p in itertools.product(axis, repeat=4):
        want = epsilon_reference(p, 1.0)
        assert abs(propagator(model, p) - want) <= 1e-10 * abs(want)


def test_on_shell_pole():
    model = DispersionModel.from_structure(structure("classical"), mass=1.0)
    with pytest.raises(OnShellPoleError):
        propagator(model, [1.0, 0, 0, 0])
    assert evaluate_grid(model, [[1.0, 0, 0, 0]])[0][1] is None


def test_spectral_reality():
    rng = np.random.default_rng(5)
    for name in ("classical", "epsilon"):
        model = DispersionModel.from_structure(structure(name))
        for p in rng.uniform(-5, 5, size=(50, 4)):
            U = u_matrix(model, p)
            H = matrix_h(-1j * U)
            m2 = complex(p @ model.g @ H @ p)
            assert abs(m2.imag) / (1 + abs(m2)) < 1e-10


def test_nonreal_mass_for_real_z():
    # Z outside iR gives -iU a complex spectrum, so h(-iU) is no longer real
    sd = structure("epsilon")
    model = DispersionModel.from_structure(sd)
    z = model.z.copy()
    z[1, 3, 0] = z[1, 0, 3] = 0.25 + 0.1j
    bad = DispersionModel(model.g, z)
    with pytest.raises(NonRealMassError):
        mass_squared(bad, [0.2, 1.5, 0.0, 0.7])


def test_dispersion_needs_r_tau():
    with pytest.raises(NotRTauError):
        DispersionModel.from_structure(structure("skew"))
    with pytest.raises(ValueError):
        DispersionModel.from_structure(structure("classical"), mass=-1)


@pytest.mark.parametrize("name", ["classical", "epsilon"])
def test_dirac_dispersion_agrees_with_mass_squared(name):
    sd = structure(name)
    model = DispersionModel.from_structure(sd)
    G = gamma_array(make_classical_gammas(sd))
    rng = np.random.default_rng(6)
    for p in rng.uniform(-3, 3, size=(20, 4)):
        res = dirac_dispersion(model, G, p)
        m2 = mass_squared(model, p)
        assert abs(res.m2 - m2) <= 1e-10 * max(1.0, abs(m2))
        assert res.plus.shape == (4, 2) and res.minus.shape == (4, 2)
        slash = np.einsum("j,jab->ab", res.calP, G)
        assert np.allclose(slash @ res.plus, res.mass * res.plus, atol=1e-9)
        assert np.allclose(slash @ res.minus, -res.mass * res.minus, atol=1e-9)


def test_dirac_dispersion_classical_momentum():
    model = DispersionModel.from_structure(structure("classical"))
    G = gamma_array(make_classical_gammas(structure("classical")))
    p = np.array([2.0, 0.5, -0.3, 1.0])
    res = dirac_dispersion(model, G, p)
    assert np.allclose(res.calP, p)
    assert abs(res.m2 - (4 - 0.25 - 0.09 - 1)) < 1e-12


def test_dirac_dispersion_rejects_bad_gammas():
    model = DispersionModel.from_structure(structure("classical"))
    G = gamma_array(make_classical_gammas(structure("classical")))
    with pytest.raises(GammaMismatchError):
        dirac_dispersion(model, G[:3], [1, 0, 0, 0])
    with pytest.raises(GammaMismatchError):
        dirac_dispersion(model, 2 * G, [1, 0.2, 0, 0])


def test_grid_parallel_order():
    model = DispersionModel.from_structure(structure("epsilon"), mass=1.0)
    pts = [tuple(p) for p in np.random.default_rng(7).uniform(-2, 2, size=(40, 4))]
    serial = evaluate_grid(model, pts)
    assert evaluate_grid(model, pts, jobs=3) == serial
    assert serial[0][0] == mass_squared(model, pts[0])
