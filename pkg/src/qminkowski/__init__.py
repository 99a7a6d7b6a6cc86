"""Exact covariant differential calculus on quantum Minkowski spaces."""

from .calculus import Calculus, OneForm
from .errors import *  # noqa: F401,F403
from .exact import Scalar, parse_scalar
from .exterior import Exterior, Form, build_antisymmetrizer
from .fock import BraidOperator, TensorState, lift_operator, pi_sigma, symmetrize
from .ncalgebra import NCPoly, NormalFormEngine, build_engine
from .operators import box, dirac, identity_suite, make_classical_gammas
from .structures import StructureData, load_structure, validate
from .waves import DispersionModel, mass_squared, propagator

__version__ = "0.1.0"
