import json
from pathlib import Path

import pytest
from hypothesis import settings

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

settings.register_profile("suite", deadline=None, max_examples=100)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def evidence_expected() -> dict:
    return json.loads((FIXTURES / "expected" / "evidence_expected.json").read_text("utf-8"))


@pytest.fixture(scope="session")
def fixture_record_rows() -> list[dict]:
    with (FIXTURES / "records.jsonl").open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


@pytest.fixture(scope="session")
def adversarial_rows() -> list[dict]:
    with (FIXTURES / "adversarial_responses.jsonl").open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


@pytest.fixture(scope="session")
def segmentation_gold() -> dict:
    return json.loads((FIXTURES / "segmentation_gold.json").read_text("utf-8"))
