import json
from pathlib import Path

import pytest

from tailtyping.dataset import TypeVocabulary, TypingExample

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "data" / "fixtures"


@pytest.fixture
def small_vocab() -> TypeVocabulary:
    labels = {
        "person": "coarse", "organization": "coarse", "location": "coarse",
        "politician": "fine", "athlete": "fine", "city": "fine",
        "dog": "fine",
        "ex-president": "ultrafine", "marathon runner": "ultrafine",
        "party": "ultrafine",
    }
    return TypeVocabulary(labels=frozenset(labels), granularity=labels)


def make_example(ex_id: str, mention: str, left: str, right: str,
                 gold: set[str]) -> TypingExample:
    return TypingExample(
        example_id=ex_id,
        mention_span=mention,
        left_context=tuple(left.split()),
        right_context=tuple(right.split()),
        gold_types=frozenset(gold),
    )


@pytest.fixture
def toy_examples() -> list[TypingExample]:
    return [
        make_example("ex1", "Barack Obama", "I saw", "at the rally",
                     {"person", "politician"}),
        make_example("ex2", "the city council", "", "approved the budget",
                     {"organization"}),
        make_example("ex3", "Springfield", "He moved to", "last year",
                     {"location", "city"}),
        make_example("ex4", "Rex", "", "barked all night", {"dog"}),
    ]


def write_jsonl(path: Path, rows: list[dict]) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path
