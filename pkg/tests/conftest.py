import numpy as np
import pytest

_RESULTS = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, text = marker.args
    entry = _RESULTS.setdefault(number, {"text": text, "failed": [], "count": 0})
    entry["count"] += 1
    if call.excinfo is not None:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        status = "FAIL" if entry["failed"] else "PASS"
        line = f"criterion {number:>2}: {status}  {entry['text']} ({entry['count']} checks)"
        if entry["failed"]:
            line += "  failed: " + ", ".join(entry["failed"])
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20010301)


def random_states(rng, n):
    """n Haar-random qubit amplitude vectors, shape (n, 2)."""
    z = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    return z / np.linalg.norm(z, axis=1, keepdims=True)
