import numpy as np
import pytest
from hypothesis import strategies as st

from dvstrack.events import EventStream


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@st.composite
def valid_streams(draw, max_events=40, geometry=(128, 128), max_dt=30_000):
    """Small valid streams: in-range pixels, +-1 polarity, sorted times."""
    n = draw(st.integers(0, max_events))
    W, H = geometry
    xs = draw(st.lists(st.integers(0, W - 1), min_size=n, max_size=n))
    ys = draw(st.lists(st.integers(0, H - 1), min_size=n, max_size=n))
    gaps = draw(st.lists(st.integers(0, max_dt), min_size=n, max_size=n))
    ps = draw(st.lists(st.sampled_from([1, -1]), min_size=n, max_size=n))
    ts = np.cumsum(gaps) if n else []
    return EventStream(xs, ys, ts, ps, geometry)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    if config.acceptance_lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(config.acceptance_lines, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request, capsys):
    """Record and print a one-line pass/fail verdict for an acceptance criterion."""
    def record(criterion, ok, detail):
        line = f"{criterion} {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.acceptance_lines.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok
    return record
