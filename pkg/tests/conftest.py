import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bli_toolkit.embeddings import EmbeddingSpace  # noqa: E402

_criteria: dict[str, list] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = _markers.get(report.nodeid)
    if marker is None:
        return
    number, title = marker
    entry = _criteria.setdefault(number, [title, []])
    entry[1].append(report.outcome)


_markers: dict[str, tuple] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _markers[item.nodeid] = (str(m.args[0]), m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria, key=lambda s: int(s)):
        title, outcomes = _criteria[number]
        if all(o == "passed" for o in outcomes):
            status = "PASS"
        elif any(o == "failed" for o in outcomes):
            status = "FAIL"
        else:
            status = "SKIP"
        terminalreporter.write_line(f"criterion {number:>2} [{status}] {title}")


def unit_space(rng, n, d, prefix="w", normalized=True):
    m = rng.standard_normal((n, d))
    if normalized:
        m /= np.linalg.norm(m, axis=1, keepdims=True)
    return EmbeddingSpace([f"{prefix}{i}" for i in range(n)], m, normalized=normalized)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_vec(path, words, rows, header=None):
    rows = [list(r) for r in rows]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header if header is not None else f"{len(words)} {len(rows[0]) if rows else 0}\n")
        for w, r in zip(words, rows):
            fh.write(w + " " + " ".join(repr(float(v)) for v in r) + "\n")
    return path
