import numpy as np
import pytest

from finslernav.spec import make_rng


@pytest.fixture
def rng():
    return make_rng(1234)


def assert_close(a, b, tol):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    err = float(np.max(np.abs(a - b))) if a.size else 0.0
    assert err <= tol, f"max deviation {err:.3e} exceeds {tol:.1e}"


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
