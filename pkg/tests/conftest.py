import pytest

from heritage_studio.corpus import default_corpus_root, load_corpus
from heritage_studio.guardrails import TagSelection

# one line per acceptance criterion, printed after the run
ACCEPTANCE_REPORT: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_REPORT:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(default_corpus_root())


@pytest.fixture
def exterior_selection():
    return TagSelection.of(
        {
            "viewpoint": "medium",
            "time-of-day": "morning",
            "people": "single",
            "architectural-style": "baroque",
            "rendering-style": "photorealistic",
        }
    )
