import pytest

_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_KEY] = []


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion and assert it."""
    lines = request.config.stash[_KEY]

    def record(number: int, title: str, passed: bool, detail: str = ""):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {title}" + (f" ({detail})" if detail else "")
        print(line)
        lines.append((number, line))
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
