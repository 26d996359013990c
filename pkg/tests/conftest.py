import pytest

ACCEPTANCE: dict = {}


@pytest.fixture
def record_criterion():
    """Store ``(passed, detail)`` for the acceptance summary printed at the end."""

    def record(number: int, name: str, passed: bool, detail: str):
        ACCEPTANCE[number] = (name, bool(passed), detail)
        print(f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {name}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{number:2d} {'PASS' if passed else 'FAIL'}  {name}: {detail}")
