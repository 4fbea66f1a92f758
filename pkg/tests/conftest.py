import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from wikifca.context import FormalContext  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# the isMother/godparent/mother table over four family members
CROSS_OBJECTS = ("Q13909", "Q4235", "Q132616", "Q9439")
CROSS_ATTRIBUTES = ("P1290@subj", "P25@obj", "P25@subj")
CROSS_ROWS = ("XXX", "X.X", ".XX", "XXX")


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def cross_table() -> FormalContext:
    return FormalContext.from_table(CROSS_OBJECTS, ("godparent", "isMother", "mother"), CROSS_ROWS)


@st.composite
def contexts(draw, max_objects=8, max_attrs=6):
    n = draw(st.integers(0, max_objects))
    m = draw(st.integers(0, max_attrs))
    rows = draw(st.lists(st.integers(0, (1 << m) - 1), min_size=n, max_size=n))
    return FormalContext(tuple(f"g{i}" for i in range(n)), tuple(f"m{j}" for j in range(m)),
                         tuple(rows))


@st.composite
def context_and_set(draw, max_objects=8, max_attrs=6):
    k = draw(contexts(max_objects, max_attrs))
    return k, draw(st.integers(0, k.full_attributes))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
