import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion as a summary line."""
    lines = request.config.stash[_LINES]
    recorded = []

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        recorded.append(number)
        lines.append((number, f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"))
        return ok

    yield record
    if not recorded:
        lines.append((None, f"FAIL: {request.node.name} raised before reporting"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, text in sorted(lines, key=lambda item: (item[0] is None, item[0] or 0)):
        terminalreporter.write_line(text)
