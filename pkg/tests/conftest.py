import numpy as np
import pytest

from dmm.survey import LabeledDataset, SurveySchema


def random_dataset(rng, n, block_sizes, k, all_classes=True):
    """Uniform random codes and labels; every class present when requested."""
    schema = SurveySchema(tuple(block_sizes))
    codes = np.column_stack([rng.integers(0, m, size=n) for m in block_sizes])
    labels = rng.integers(0, k, size=n)
    if all_classes:
        labels[:k] = np.arange(k)
    return LabeledDataset(schema, codes, labels, k)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---------------------------------------------------------------------------
# acceptance reporting: tests marked ``criterion(n)`` feed one summary line each

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    entry = _criteria.setdefault(marker.args[0], {"ok": True, "details": []})
    entry["ok"] = entry["ok"] and rep.passed
    entry["details"] += [str(v) for k, v in item.user_properties if k == "detail"]
    if rep.failed and not any(k == "detail" for k, _ in item.user_properties):
        entry["details"].append(f"{item.name} failed")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_criteria):
        entry = _criteria[n]
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {'; '.join(entry['details'])}")
