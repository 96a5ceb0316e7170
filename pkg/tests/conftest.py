import pytest

_LOG = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LOG] = []


@pytest.fixture
def criterion_log(request):
    """Append (number, passed, detail) for the acceptance summary."""
    log = request.config.stash[_LOG]

    def record(number: int, passed: bool, detail: str):
        log.append((number, bool(passed), detail))
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = sorted(config.stash[_LOG])
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in log:
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
