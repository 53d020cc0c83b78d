import math

import numpy as np
import pytest

from kdvtrail.initial_data import catastrophe, make_sech2_profile
from kdvtrail.modulation import leading_edge, trailing_edge, whitham_curve

EDGE_TIMES = (0.25, 0.3)


@pytest.fixture(scope="session")
def sech2():
    return make_sech2_profile()


@pytest.fixture(scope="session")
def cp(sech2):
    return catastrophe(sech2)


@pytest.fixture(scope="session")
def edges(sech2, cp):
    return {t: trailing_edge(t, sech2, cp) for t in EDGE_TIMES}


@pytest.fixture(scope="session")
def curve25(sech2, edges):
    return whitham_curve(0.25, sech2, edges[0.25])


@pytest.fixture(scope="session")
def lead25(sech2, curve25):
    return leading_edge(0.25, sech2, curve25)


def sech2_exact_inverse(y):
    """f_L for -sech^2: x = -arccosh(1/sqrt(-y))."""
    return -np.arccosh(1.0 / np.sqrt(-np.asarray(y, dtype=float)))


@pytest.fixture
def fL_exact():
    return sech2_exact_inverse


SQRT3_8 = math.sqrt(3.0) / 8.0


# -- acceptance reporting ----------------------------------------------------

_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Context manager that prints one PASS/FAIL line per acceptance criterion."""
    import contextlib

    config = request.config
    lines = config.stash.setdefault(_ACCEPTANCE_KEY, [])
    reporter = config.pluginmanager.get_plugin("terminalreporter")

    @contextlib.contextmanager
    def run(number, title):
        notes = []
        try:
            yield notes
        except BaseException as exc:
            detail = "; ".join(notes + [f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"])
            lines.append(f"criterion {number:2d} FAIL  {title}  [{detail}]")
            raise
        else:
            lines.append(f"criterion {number:2d} PASS  {title}" + (f"  [{'; '.join(notes)}]" if notes else ""))
        finally:
            if reporter is not None:
                reporter.write_line("")
                reporter.write_line(lines[-1])

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
