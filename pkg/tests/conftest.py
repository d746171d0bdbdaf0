import numpy as np
from hypothesis import strategies as st

from hyster.relay import Signal


def pwl_l2_norm(times, diff) -> float:
    """Exact L2 norm of the piecewise-linear function with nodal values ``diff``."""
    a, b = diff[:-1], diff[1:]
    return float(np.sqrt(np.sum(np.diff(times) * (a * a + a * b + b * b) / 3.0)))


def random_signal(rng, n_knots=12, t_end=1.0, scale=3.0) -> Signal:
    t = np.concatenate([[0.0], np.sort(rng.uniform(0.0, t_end, n_knots - 2)), [t_end]])
    t = np.unique(t)
    return Signal(t, rng.uniform(-scale, scale, t.size))


@st.composite
def pwl_signals(draw, min_knots=2, max_knots=10, scale=3.0):
    n = draw(st.integers(min_knots, max_knots))
    gaps = draw(st.lists(st.floats(0.01, 1.0), min_size=n - 1, max_size=n - 1))
    vals = draw(st.lists(st.floats(-scale, scale), min_size=n, max_size=n))
    t = np.concatenate([[0.0], np.cumsum(gaps)])
    return Signal(t, np.array(vals))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
