import random

import pytest

from oracles import naive_count_hits
from tailtyping.corpus import (CorpusStream, PatternAutomaton,
                               count_corpus_hits)
from tailtyping.errors import InputFormatError


def _random_split(rng, text, max_parts=8):
    if not text:
        return [""]
    cuts = sorted(rng.sample(range(len(text) + 1),
                             rng.randint(0, min(max_parts, len(text)))))
    parts = []
    prev = 0
    for c in cuts + [len(text)]:
        parts.append(text[prev:c])
        prev = c
    return parts


def test_word_boundary_example():
    stream = CorpusStream.from_texts(["a b a b a"])
    assert count_corpus_hits(stream, ["a b"], "word-boundary") == {"a b": 2}


def test_empty_corpus():
    stream = CorpusStream.from_texts([""])
    assert count_corpus_hits(stream, ["anything"], "substring") == {"anything": 0}


def test_overlapping_substring():
    stream = CorpusStream.from_texts(["aaaa"])
    assert count_corpus_hits(stream, ["aa"], "substring") == {"aa": 3}


def test_boundary_rules():
    text = "cats cat catcat cat_ cat-cat"
    stream = CorpusStream.from_texts([text])
    counts = count_corpus_hits(stream, ["cat"], "word-boundary")
    # "cat" alone and both sides of "cat-cat"; catcat, cats and cat_ are out
    assert counts == {"cat": 3}


def test_entity_keys_preserved_and_normalized():
    stream = CorpusStream.from_texts(["Carl Crawford played."])
    counts = count_corpus_hits(stream, ["Carl   Crawford"], "word-boundary")
    assert counts == {"Carl   Crawford": 1}


def test_fold_case():
    stream = CorpusStream.from_texts(["The Film ended. the film began."])
    exact = count_corpus_hits(stream, ["the film"], "word-boundary")
    assert exact == {"the film": 1}
    stream = CorpusStream.from_texts(["The Film ended. the film began."])
    folded = count_corpus_hits(stream, ["the film"], "word-boundary",
                               fold_case=True)
    assert folded == {"the film": 2}


def test_errors():
    with pytest.raises(ValueError):
        count_corpus_hits(CorpusStream.from_texts(["x"]), [], "substring")
    with pytest.raises(ValueError):
        count_corpus_hits(CorpusStream.from_texts(["x"]), ["  "], "substring")
    with pytest.raises(ValueError):
        count_corpus_hits(CorpusStream.from_texts(["x"]), ["x"], "regex")
    with pytest.raises(MemoryError):
        count_corpus_hits(CorpusStream.from_texts(["x"]), ["abcdefgh" * 100],
                          "substring", memory_budget_bytes=10)


def test_unreadable_shard_named(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_bytes(b"\xff\xfe invalid \xff")
    stream = CorpusStream.from_dir(tmp_path)
    with pytest.raises(InputFormatError, match="bad.txt"):
        count_corpus_hits(stream, ["x"], "substring")


def test_from_dir_counts(tmp_path):
    (tmp_path / "a.txt").write_text("the film was the film", encoding="utf-8")
    (tmp_path / "b.txt").write_text("film the film", encoding="utf-8")
    stream = CorpusStream.from_dir(tmp_path, chunk_chars=4)
    counts = count_corpus_hits(stream, ["the film"], "word-boundary")
    assert counts == {"the film": 3}
    assert stream.total_bytes == 34


def test_oracle_equivalence_randomized():
    rng = random.Random(20240601)
    alphabet = "ab _xy"
    for trial in range(60):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 400)))
        patterns = set()
        while len(patterns) < rng.randint(1, 12):
            if text and rng.random() < 0.6:
                i = rng.randrange(len(text))
                j = min(len(text), i + rng.randint(1, 6))
                cand = text[i:j]
            else:
                cand = "".join(rng.choice(alphabet)
                               for _ in range(rng.randint(1, 5)))
            cand = " ".join(cand.split())
            if cand:
                patterns.add(cand)
        mode = rng.choice(["word-boundary", "substring"])
        expected = naive_count_hits(text, patterns, mode)
        shards = _random_split(rng, text)
        got = count_corpus_hits(CorpusStream.from_texts(shards),
                                list(patterns), mode)
        assert got == expected, (text, sorted(patterns), mode, shards)


def test_shard_invariance():
    rng = random.Random(7)
    text = "".join(rng.choice("abc de") for _ in range(500))
    patterns = ["ab", "c d", "e", "abc", "de d"]
    reference = count_corpus_hits(CorpusStream.from_texts([text]),
                                  patterns, "word-boundary")
    for _ in range(25):
        shards = _random_split(rng, text, max_parts=30)
        assert "".join(shards) == text
        got = count_corpus_hits(CorpusStream.from_texts(shards),
                                patterns, "word-boundary")
        assert got == reference


def test_parallel_merge_matches_sequential():
    rng = random.Random(11)
    text = "".join(rng.choice("xy z") for _ in range(2000))
    shards = _random_split(rng, text, max_parts=16)
    patterns = ["x y", "z", "xy", "y z x"]
    seq = count_corpus_hits(CorpusStream.from_texts(shards), patterns,
                            "substring", workers=1)
    par = count_corpus_hits(CorpusStream.from_texts(shards), patterns,
                            "substring", workers=4)
    assert seq == par


def test_determinism():
    shards = ["the quick brown fox ", "jumps over the lazy dog"]
    patterns = ["the", "o", "quick brown"]
    first = count_corpus_hits(CorpusStream.from_texts(shards), patterns,
                              "word-boundary")
    second = count_corpus_hits(CorpusStream.from_texts(shards), patterns,
                               "word-boundary")
    assert first == second


def test_automaton_duplicate_patterns_deduped():
    auto = PatternAutomaton(["ab", "ab", "b"])
    assert auto.patterns == ["ab", "b"]


def test_match_spanning_three_tiny_shards():
    stream = CorpusStream.from_texts(["a", "b", "c", " ", "a", "bc"])
    counts = count_corpus_hits(stream, ["abc"], "word-boundary")
    assert counts == {"abc": 2}
