from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from alphahs.oracle import multipeakon, multipeakon_alpha, multipeakon_state

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True, scope="session")
def _isolated_cache(tmp_path_factory):
    mp = pytest.MonkeyPatch()
    mp.setenv("ALPHAHS_CACHE", str(tmp_path_factory.mktemp("cache")))
    yield
    mp.undo()


@pytest.fixture(scope="session")
def mp_state():
    return multipeakon_state()


@pytest.fixture(scope="session")
def mp_alpha():
    return multipeakon_alpha()


@pytest.fixture(scope="session")
def mp_exact():
    return multipeakon()


def random_profile(rng: np.random.Generator, n: int | None = None,
                   span: float = 4.0):
    """Random piecewise-linear profile with constant tails."""
    from alphahs.piecewise import PiecewiseLinear
    n = n or int(rng.integers(3, 9))
    x = np.sort(rng.uniform(-span / 2, span / 2, n))
    x = x[np.concatenate([[True], np.diff(x) > 1e-3])]
    u = rng.uniform(-1.5, 1.5, x.size)
    return PiecewiseLinear(x, u)


# {{{ acceptance report

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion and assert it."""
    def record(n: int, ok: bool, detail: str) -> None:
        prev = ACCEPTANCE.get(n)
        if prev is not None:
            ok = ok and prev[0]
            detail = prev[1] + "; " + detail
        ACCEPTANCE[n] = (bool(ok), detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {detail}")

# }}}
