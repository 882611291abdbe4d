import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from vismc.backends import OracleBackend, load_corpus  # noqa: E402
from vismc.data import CASES, CORPUS_DIR, QUERIES  # noqa: E402
from vismc.io import read_jsonl  # noqa: E402
from vismc.pipeline import QueryItem  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(CORPUS_DIR)


@pytest.fixture(scope="session")
def oracle(corpus):
    return OracleBackend(corpus)


@pytest.fixture(scope="session")
def queries():
    return [QueryItem.from_dict(d) for d in read_jsonl(QUERIES)]


@pytest.fixture(scope="session")
def cases():
    return {d["query_id"]: d for d in read_jsonl(CASES)}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
