import functools
import math

import pytest

from qtmxxz import bethe
from qtmxxz.model import ChainParams

ZETA = math.pi / 7
# acceptance criterion -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@functools.lru_cache(maxsize=None)
def sector(N: int, M: int, T: float = 100.0, J: float = 0.5):
    """Cached (params, spectrum, states) of one sector at zeta = pi/7, h = 0."""
    p = ChainParams(J=J, zeta=ZETA, T=T, N=N)
    spec, states = bethe.extract_sector(p, M)
    return p, spec, states


@pytest.fixture(scope="session")
def p5():
    return ChainParams(J=0.5, zeta=ZETA, T=100.0, N=5)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:4s} {'PASS' if ok else 'FAIL'}  {detail}")
