"""Collects one pass/fail line per acceptance criterion and prints them at the end."""

from __future__ import annotations

import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


class Criterion:
    def __init__(self, number: int):
        self.number = number

    def record(self, passed: bool, detail: str) -> None:
        _RESULTS[self.number] = (bool(passed), detail)
        print(f"CRITERION {self.number}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture
def criterion(request):
    number = request.node.get_closest_marker("criterion").args[0]
    rec = Criterion(number)
    yield rec
    if number not in _RESULTS:
        _RESULTS[number] = (False, "test errored before reporting")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        passed, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
