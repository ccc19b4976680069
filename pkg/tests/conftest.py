import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""

    def record(number, passed, seconds, limit_s, detail):
        flag = "PASS" if passed else "FAIL"
        line = f"{flag}  criterion {number}  ({seconds:.1f}s, limit {limit_s:g}s)  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
