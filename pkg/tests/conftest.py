import time
from contextlib import contextmanager

import pytest

_RESULTS_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = []


@pytest.fixture
def criterion(request):
    """Context manager that times one acceptance criterion and records a pass/fail line."""
    results = request.config.stash[_RESULTS_KEY]

    @contextmanager
    def run(number, title, limit=None):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            within = limit is None or elapsed < limit
            budget = f" (limit {limit:g} s)" if limit is not None else ""
            status = "PASS" if ok and within else "FAIL"
            results.append((number, f"criterion {number:2d} {status} {elapsed:7.2f} s{budget}  {title}"))
        assert within, f"criterion {number} took {elapsed:.2f} s, limit {limit} s"

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS_KEY, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(results):
        terminalreporter.write_line(line)
