from pathlib import Path

import pytest

from affectkit.corpus import DEFAULT_SCHEMA, save_records
from affectkit.synthetic import synthetic_corpus

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def labeled_csv(tmp_path) -> Path:
    """200 synthetic labeled rows, the CLI smoke-test fixture."""
    path = tmp_path / "labeled.csv"
    save_records(synthetic_corpus(200, seed=1, noise=0.05), path, DEFAULT_SCHEMA)
    return path


@pytest.fixture
def unlabeled_csv(tmp_path) -> Path:
    path = tmp_path / "unlabeled.csv"
    save_records(synthetic_corpus(300, seed=2, labeled=False, id_prefix="u"), path, DEFAULT_SCHEMA)
    return path


# one summary line per acceptance criterion, printed after the run
_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if not item.nodeid.startswith("tests/test_acceptance.py") and "test_acceptance.py" not in item.nodeid:
        return
    criterion = getattr(item.function, "criterion", item.name)
    if report.when == "call" or (report.when == "setup" and report.skipped):
        if report.skipped:
            reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else str(report.longrepr)
            _ACCEPTANCE.append((criterion, "SKIPPED", reason.removeprefix("Skipped: ")))
        elif report.passed:
            _ACCEPTANCE.append((criterion, "PASS", getattr(item, "acceptance_detail", "")))
        else:
            _ACCEPTANCE.append((criterion, "FAIL", getattr(item, "acceptance_detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, status, detail in _ACCEPTANCE:
        line = f"{status:7s} {criterion}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the acceptance summary."""

    def record(text: str) -> None:
        request.node.acceptance_detail = text

    return record
