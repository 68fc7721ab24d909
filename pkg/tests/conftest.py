import pytest

from helpers import write_toy_inputs


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\n[ACCEPTANCE] {name}: {outcome}")


@pytest.fixture(scope="session")
def toy_inputs(tmp_path_factory):
    """(corpus_path, vectors_path) for the 500-sentence toy setup."""
    directory = tmp_path_factory.mktemp("toy")
    return write_toy_inputs(directory)
