import pytest

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture
def record():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture(scope="session")
def reference_items():
    from corpora import reference_corpus

    return reference_corpus()


@pytest.fixture(scope="session")
def injected_items():
    from corpora import injected_violation_corpus

    return injected_violation_corpus()


@pytest.fixture(scope="session")
def injected_report(reference_items, injected_items):
    from corpora import sift_lexicon
    from mdkin.sifter import sift_corpus

    return sift_corpus([c.sample for c in injected_items], [r.sample for r in reference_items], sift_lexicon())
