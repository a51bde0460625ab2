import os

import pytest

os.environ.setdefault("FLATLENS_THREADS", "1")

_ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line: report(number, ok, detail)."""
    def add(number, ok, detail):
        _ACCEPTANCE.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    return add


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
