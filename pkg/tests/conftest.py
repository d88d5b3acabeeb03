import pytest

_DETAILS = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record a one-line detail for an acceptance criterion."""
    store = request.config.stash.setdefault(_DETAILS, {})

    def note(text):
        store[request.node.nodeid] = text
        print(text)

    return note


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_DETAILS, {})
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py" in rep.nodeid:
                name = rep.nodeid.split("::")[-1]
                rows.append((name, outcome.upper()[:4] if outcome == "passed" else "FAIL",
                             store.get(rep.nodeid, "")))
    if not rows:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, status, detail in sorted(rows):
        terminalreporter.write_line(f"{status}  {name}  {detail}")
