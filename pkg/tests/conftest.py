import pytest

from qpquant.algebra import gl
from qpquant.funalg import cotangent_model, gl_model
from qpquant.moduli import Fuse, FusionProgram, SkeletonGraph, cotangent_manin


@pytest.fixture(scope="session")
def gl2():
    return gl(2)


@pytest.fixture(scope="session")
def gl2_model(gl2):
    return gl_model(gl2)


@pytest.fixture(scope="session")
def annulus_program(gl2_model):
    return FusionProgram("annulus", gl2_model, SkeletonGraph(("P", "Q"), (("a", "P", "Q"),)),
                         (Fuse("P", "Q", "R"),))


@pytest.fixture(scope="session")
def cot_manin():
    return cotangent_manin()


@pytest.fixture(scope="session")
def cot_model(cot_manin):
    return cotangent_model(cot_manin.d)


# one summary line per acceptance criterion
_CRITERIA: dict[str, list] = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    row = _CRITERIA.setdefault(props["criterion"], [True, 0.0])
    row[0] = row[0] and not report.failed
    if report.when == "call":
        row[1] = props.get("seconds", report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda s: int(s.split()[0])):
        ok, secs = _CRITERIA[name]
        terminalreporter.write_line(f"criterion {name}: {'PASS' if ok else 'FAIL'} ({secs:.2f}s)")
