import os

os.environ.setdefault("WHOT_INSECURE", "1")

import numpy as np
import pytest

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion for the summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
