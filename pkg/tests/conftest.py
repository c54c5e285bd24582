import sys
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
sys.path.insert(0, str(Path(__file__).parent))  # for `oracles`

from knowvl.formats import (  # noqa: E402
    read_embedding_table,
    read_knowledge_base,
    read_parse_file,
    read_records,
)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def caption_parses():
    return read_parse_file(FIXTURES / "caption_parses.conllu")


@pytest.fixture(scope="session")
def definition_parses():
    return read_parse_file(FIXTURES / "definition_parses.conllu")


@pytest.fixture(scope="session")
def embedding_table():
    return read_embedding_table(FIXTURES / "embeddings.vec")


@pytest.fixture(scope="session")
def knowledge_base():
    return read_knowledge_base(FIXTURES / "kb.jsonl")


@pytest.fixture(scope="session")
def fixture_records():
    return read_records(FIXTURES / "records.jsonl")


@pytest.fixture(scope="session")
def extraction_gold():
    import json

    return {g["id"]: g for g in json.loads((FIXTURES / "extraction_gold.json").read_text())}
