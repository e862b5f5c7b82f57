import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fwan import _kernels  # noqa: E402
from fwan.corpus import FunctionWordLexicon, default_lexicon  # noqa: E402
from fwan.wan import WanParams  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture
def small_lexicon():
    return FunctionWordLexicon(("a", "the", "of", "and", "to"), frozenset({"a", "the", "of"}),
                               frozenset({"a", "the"}))


@pytest.fixture(scope="session")
def params(lexicon):
    return WanParams(lexicon)


@pytest.fixture(params=["numba", "numpy"])
def backend(request, monkeypatch):
    """Run a test once per kernel implementation."""
    monkeypatch.setattr(_kernels, "USE_NUMBA", request.param == "numba")
    return request.param


# one PASS/FAIL line per acceptance criterion at the end of the run

_CRITERIA = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _CRITERIA.append((marker.args[0], status, marker.args[1] if len(marker.args) > 1 else item.name))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    by_number = {}
    for number, status, title in _CRITERIA:
        entry = by_number.setdefault(number, [title, []])
        entry[1].append(status)
    terminalreporter.section("acceptance criteria")
    for number in sorted(by_number):
        title, statuses = by_number[number]
        if "FAIL" in statuses:
            status = "FAIL"
        elif "PASS" in statuses:
            status = "PASS"
        else:
            status = "SKIP"
        skipped = statuses.count("SKIP")
        note = f" ({skipped} optional check skipped)" if skipped and status == "PASS" else ""
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {title}{note}")
