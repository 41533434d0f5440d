import math

import pytest

from fractal_spectra.forms import SelfSimilarMeasure, sg_harmonic
from fractal_spectra.geometry import preset

D_S = 2 * math.log(3) / math.log(5)
T5 = math.log(5) / 2


@pytest.fixture(scope="session")
def sg():
    return preset("sg")


@pytest.fixture(scope="session")
def hs():
    return sg_harmonic()


@pytest.fixture(scope="session")
def mu():
    return SelfSimilarMeasure.uniform(3)


ACCEPTANCE: list = []


@pytest.fixture
def accept():
    """Record one acceptance line; assertion happens in the test."""
    def record(n, ok, detail, seconds):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'} ({seconds:.1f} s) {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
