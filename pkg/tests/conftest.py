import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one verdict line per acceptance criterion for the terminal summary."""

    def record(number: int, title: str, passed: bool, detail: str):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2} {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
        terminalreporter.write_line(line)
