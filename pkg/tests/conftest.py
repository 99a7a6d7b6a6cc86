from functools import lru_cache
from pathlib import Path

import pytest

from qminkowski.calculus import Calculus
from qminkowski.ncalgebra import build_engine
from qminkowski.structures import load_structure

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
SHIPPED = ["classical", "lattice1d", "epsilon", "n2twist", "skew"]


def fixture_path(name):
    return FIXTURES / f"{name}.json"


@lru_cache(maxsize=None)
def structure(name):
    return load_structure(fixture_path(name))


@lru_cache(maxsize=None)
def calculus(name):
    return Calculus(build_engine(structure(name)))


@pytest.fixture(params=SHIPPED)
def shipped(request):
    return request.param


# one summary line per acceptance criterion
_criteria: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _criteria[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in sorted(_criteria.items(), key=lambda kv: int(kv[0].split("_")[1])):
        label = " ".join(name.split("_")[2:])
        terminalreporter.write_line(f"criterion {name.split('_')[1]:>2}  {status}  {label}")
