import os

import pytest
from hypothesis import strategies as st

from dialectdecomp.decomp import CountFunction
from dialectdecomp.poset import MessagePattern, MessageUniverse, build_poset

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


def diamond_poset():
    """a = {} below b = {B}, c = {C}, both below d = {B, C}."""
    u = MessageUniverse(("B", "C"))
    return build_poset([u.pattern(()), u.pattern(["B"]), u.pattern(["C"]), u.pattern(["B", "C"])], u)


@pytest.fixture
def diamond():
    return diamond_poset()


def on_diamond(a, b, c, d):
    return CountFunction(diamond_poset(), (a, b, c, d))


@st.composite
def posets(draw, max_width=5, max_size=8):
    width = draw(st.integers(1, max_width))
    bits = draw(st.sets(st.integers(0, 2**width - 1), min_size=1, max_size=max_size))
    return build_poset([MessagePattern(b, width) for b in bits])


@st.composite
def count_functions(draw, max_width=5, max_size=8, max_value=6):
    p = draw(posets(max_width, max_size))
    values = draw(st.lists(st.integers(0, max_value), min_size=len(p), max_size=len(p)))
    return CountFunction(p, tuple(values))


# -- one summary line per acceptance criterion ---------------------------------

_verdicts = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" in report.nodeid and name.startswith("test_criterion_"):
        n = int(name.split("_")[2])
        _verdicts[n] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_verdicts):
        terminalreporter.write_line(f"criterion {n}: {_verdicts[n]}")
