import pytest

from pneunet.config import build, load_config
from pneunet.geometry import BaseDims, design_family
from pneunet.material import ECOFLEX_00_50

_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture(scope="session")
def setup():
    return build(load_config())


@pytest.fixture(scope="session")
def base(setup) -> BaseDims:
    return setup.base


@pytest.fixture(scope="session")
def family(base):
    return design_family(base)


@pytest.fixture(scope="session")
def yeoh():
    return ECOFLEX_00_50


@pytest.fixture(scope="session")
def geom(setup):
    return setup.plant.wall_geometry


@pytest.fixture
def acceptance():
    """Record one acceptance criterion outcome for the end-of-run summary."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE[number] = (title, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")
