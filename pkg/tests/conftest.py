import pytest

ACCEPTANCE_REPORT = []


@pytest.fixture
def report():
    def record(criterion: str, ok: bool, detail: str) -> None:
        ACCEPTANCE_REPORT.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_REPORT:
            terminalreporter.write_line(line)
