from __future__ import annotations

import pytest

from solitonlab import acceptance

_RESULTS: dict[int, acceptance.CriterionResult] = {}


class AcceptanceRunner:
    """Runs each criterion at most once per session; criterion 8 reuses the first seven."""

    def get(self, number: int) -> acceptance.CriterionResult:
        if number not in _RESULTS:
            if number == 8:
                previous = {n: self.get(n) for n in sorted(acceptance.CRITERIA)}
                _RESULTS[8] = acceptance.determinism(previous)
            else:
                _RESULTS[number] = acceptance.run_criterion(number)
        return _RESULTS[number]


@pytest.fixture(scope="session")
def acceptance_runner() -> AcceptanceRunner:
    return AcceptanceRunner()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        r = _RESULTS[number]
        terminalreporter.write_line(f"{r.line()} ({r.seconds:.1f} s)")
