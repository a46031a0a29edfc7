import numpy as np
import pytest

from monodec import StoppingCriterion, make_problem, standard_monodromy


@pytest.fixture(scope="session")
def cyclic5():
    return make_problem("cyclic5", np.random.default_rng(11))


@pytest.fixture(scope="session")
def cyclic5_fiber(cyclic5):
    """Full 70-point fiber of cyclic-5, shared by the slower tests."""
    P = cyclic5
    W, stats = standard_monodromy(
        P.curve,
        P.base,
        [P.seed_x],
        StoppingCriterion(max_loops=200, target_count=70, stabilization=None),
        rng=np.random.default_rng(11),
        alpha=P.alpha,
    )
    assert len(W.points) == 70
    return W, stats


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
