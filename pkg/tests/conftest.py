import sys
from pathlib import Path

import numpy as np
import pytest

from shapeeval.dataset import Classification

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


def grid_classification(n_classes=40, per_class=20):
    return Classification.from_classes(
        {f"c{k:02d}": [f"m{k:02d}_{j:02d}" for j in range(per_class)] for k in range(n_classes)}
    )


def planted_matrix(c, noise, seed, perfect=False):
    """Dissimilarities that are small within a class, plus Gaussian noise."""
    rng = np.random.default_rng(seed)
    ids = c.object_ids
    labels = np.array([c.entries[x] for x in ids])
    same = labels[:, None] == labels[None, :]
    values = np.where(same, 0.0, 1.0)
    if not perfect:
        values = values + rng.normal(0.0, noise, size=values.shape)
    values = values - values.min() + 0.01
    np.fill_diagonal(values, 0.0)
    return ids, values


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def toy_classification():
    from shapeeval.dataset import load_classification

    return load_classification(FIXTURES / "toy.cls")


@pytest.fixture
def nist_like():
    return grid_classification()


# -- acceptance summary ----------------------------------------------------
# Tests marked @pytest.mark.acceptance(n, "text") are rolled up into one
# PASS/FAIL line per criterion at the end of the run.

_ACCEPTANCE: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, text): exit criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or (rep.when != "call" and rep.passed):
        return
    number, text = marker.args
    entry = _ACCEPTANCE.setdefault(number, {"text": text, "ok": True, "failed": []})
    if rep.failed:
        entry["ok"] = False
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[number]
        status = "PASS" if entry["ok"] else "FAIL"
        line = f"[{status}] {number}. {entry['text']}"
        if entry["failed"]:
            line += f"  (failed: {', '.join(entry['failed'])})"
        terminalreporter.write_line(line)
