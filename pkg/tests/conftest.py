import numpy as np
import pytest
from hypothesis import settings

# first calls pay for numba compilation, so per-example deadlines are meaningless
settings.register_profile("ncma", deadline=None)
settings.load_profile("ncma")

_CRITERIA: dict[int, str] = {}


def criterion_line(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    _CRITERIA[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
