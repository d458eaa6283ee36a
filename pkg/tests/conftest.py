import pytest

from dgcrl.nav_env import NavTask
from dgcrl.td3 import Td3Config


@pytest.fixture
def tiny_td3():
    return Td3Config(actor_hidden=[16, 16], critic_hidden=[16, 16], batch_size=16,
                     buffer_capacity=5000)


@pytest.fixture
def open_task():
    return NavTask("V1", (0.1, 0.1), (0.5, 0.4), task_id=0)


_RESULTS = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """record(n, ok, detail): log one acceptance line, then fail the test if not ok."""
    results = request.config.stash.setdefault(_RESULTS, [])

    def record(n, ok, detail):
        results.append((n, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, f"criterion {n}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n, ok, detail in sorted(results, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:>2}: {detail}")
