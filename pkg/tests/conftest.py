import numpy as np
import pytest

from driftwatch.dataio import EmbeddingRecord


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): criterion checked by the acceptance gate")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Print one PASS/FAIL line per acceptance criterion, visible in terminal output."""
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    name = marker.args[0]
    tr = item.config.pluginmanager.get_plugin("terminalreporter")
    if report.when == "call" or (report.when == "setup" and report.failed):
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        if tr is not None:
            tr.write_line(f"ACCEPTANCE {status}: {name}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_records(X: np.ndarray, pred: int = 0, truth: int = 0, start_id: int = 0) -> list[EmbeddingRecord]:
    return [
        EmbeddingRecord(id=start_id + i, pred=pred, truth=truth, features=row)
        for i, row in enumerate(np.asarray(X, dtype=np.float64))
    ]


@pytest.fixture
def gaussian_records(rng):
    def build(n: int, dim: int, center: float = 0.0, pred: int = 0, truth: int = 0, start_id: int = 0):
        X = rng.standard_normal((n, dim)) + center
        return make_records(X, pred=pred, truth=truth, start_id=start_id)

    return build
