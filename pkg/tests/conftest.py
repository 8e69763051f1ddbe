import numpy as np
import pytest

_acceptance_lines: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_cloud(rng, n, scale=(1.5, 4.5, 1.5)):
    return rng.normal(size=(n, 3)) * np.asarray(scale)


@pytest.fixture
def report():
    """Record one verdict line per acceptance criterion (None = not run)."""

    def emit(criterion: int, ok: bool | None, detail: str) -> None:
        verdict = {True: "PASS", False: "FAIL", None: "NOT RUN"}[ok]
        line = f"[criterion {criterion:2d}] {verdict:7s} {detail}"
        _acceptance_lines.append(line)
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines):
            terminalreporter.write_line(line)
