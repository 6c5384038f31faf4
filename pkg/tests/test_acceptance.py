"""Acceptance suite: one test per exit criterion, each at its stated
tolerance. Run with ``pytest tests/test_acceptance.py -v -s`` to see one
PASS line per criterion.

The shipped frequency snapshots and the test split under data/fixtures/ are
synthetic stand-ins that reproduce the published distributional shape (the
real entity lists and API counts are not redistributable); the binning and
drift criteria run against them exactly as they would against real
snapshots.
"""

import math
import random
import sys
import time
from pathlib import Path

import pytest

from conftest import FIXTURES, make_example
from oracles import brute_block, brute_spearman, naive_count_hits
from tailtyping.baselines import build_fewshot_prompt, parse_typing_response, singularize
from tailtyping.corpus import CorpusStream, count_corpus_hits
from tailtyping.dataset import (ContextSet, FrequencyRecord, TypeVocabulary,
                                load_dataset, load_frequency_records,
                                load_type_vocabulary, normalize_surface)
from tailtyping.evaluation import bin_example_counts, stratified_eval
from tailtyping.rankstats import assign_bins, spearman, split_ratio_curve
from tailtyping.recovery import (STRATEGIES, STRATEGY_CAUSAL,
                                 STRATEGY_MLM_EQUAL, average_salience,
                                 correlate_salience_with_hits,
                                 recover_probability)
from tailtyping.report import ReportBundle, emit_report
from tailtyping.scorers import BigramScorer, TableScorer, UniformScorer
from tailtyping.search import compare_snapshots


def _ok(name: str) -> None:
    print(f"ACCEPTANCE {name}: PASS", file=sys.stderr)


# ---------------------------------------------------------------------------
# corpus-counter oracle


def test_corpus_counter_oracle_200_trials():
    rng = random.Random(0xC0DE)
    alphabets = ["ab ", "abcdef gh", "xy_z .,", "the quick fox "]
    started = time.perf_counter()
    trials = 0
    for trial in range(200):
        alphabet = rng.choice(alphabets)
        if trial < 2:
            # pin the full bounds once per mode; richer alphabets keep the
            # hit density representative of phrase counting
            alphabet = "abcdef gh" if trial == 0 else "the quick fox "
            size = 1_000_000
            n_patterns = 200
        else:
            size = int(10 ** rng.uniform(3.0, 5.7))
            n_patterns = rng.randint(1, 200)
        text = "".join(rng.choices(alphabet, k=size))
        patterns = set()
        attempts = 0
        while len(patterns) < n_patterns and attempts < n_patterns * 4:
            attempts += 1
            if rng.random() < 0.7:
                i = rng.randrange(max(1, len(text) - 10))
                cand = text[i:i + rng.randint(1, 10)]
            else:
                cand = "".join(rng.choice(alphabet)
                               for _ in range(rng.randint(1, 6)))
            cand = " ".join(cand.split())
            if cand:
                patterns.add(cand)
        if not patterns:
            continue
        mode = "word-boundary" if trial % 2 else "substring"
        shards = []
        pos = 0
        while pos < len(text):
            step = rng.randint(1, max(1, size // rng.randint(1, 8)))
            shards.append(text[pos:pos + step])
            pos += step
        got = count_corpus_hits(CorpusStream.from_texts(shards or [""]),
                                sorted(patterns), mode)
        expected = naive_count_hits(text, sorted(patterns), mode)
        assert got == expected, (mode, len(text), sorted(patterns)[:5])
        trials += 1
    elapsed = time.perf_counter() - started
    assert trials >= 196
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    _ok(f"corpus-counter oracle ({trials} trials, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# Spearman oracle


def test_spearman_oracle_500_vectors():
    rng = random.Random(0x5EA2)
    checked = 0
    for _ in range(500):
        n = rng.randint(2, 200)
        tie_pool = rng.randint(1, 8)  # tiny pools force heavy ties
        x = [float(rng.randint(0, tie_pool)) for _ in range(n)]
        y = [float(rng.randint(0, tie_pool)) for _ in range(n)]
        ours = spearman(x, y)
        oracle = brute_spearman(x, y)
        if oracle is None:
            assert ours is None
        else:
            assert ours is not None and abs(ours - oracle) <= 1e-12
        # defining identities, exact
        if len(set(x)) >= 2:
            assert spearman(x, x) == 1.0
            assert spearman(x, [-v for v in x]) == -1.0
            transform = [math.exp(v / 3.0) for v in x]
            if ours is not None:
                assert spearman(transform, y) == ours
        checked += 1
    assert checked == 500
    _ok("spearman oracle (500 vectors)")


# ---------------------------------------------------------------------------
# chain-rule exactness


def test_chain_rule_exactness():
    uniform = UniformScorer(100)
    est = recover_probability("I saw John Paul Jones downtown", (6, 21),
                              uniform, STRATEGY_MLM_EQUAL)
    assert est.n == 3
    assert abs(est.probability - 1e-6) <= 1e-12 * 1e-6

    table = TableScorer({"John": 0.5, "Paul": 0.25}, default=1.0)
    est = recover_probability("I saw John Paul", (6, 15), table,
                              STRATEGY_MLM_EQUAL)
    assert abs(est.probability - 0.125) <= 1e-12 * 0.125

    single = TableScorer({"Jones": 0.37}, default=1.0)
    values = [
        recover_probability("I met Jones here", (6, 11), single, s).probability
        for s in STRATEGIES
    ]
    assert values[0] == values[1] == values[2]
    _ok("chain-rule exactness")


# ---------------------------------------------------------------------------
# bin reproduction on the shipped snapshots


@pytest.fixture(scope="module")
def shipped():
    if not FIXTURES.exists():
        pytest.skip("shipped fixtures missing; run scripts/make_fixtures.py")
    dataset = load_dataset(FIXTURES / "ufet" / "test.jsonl")
    assert not dataset.errors
    snap_2024 = load_frequency_records(
        FIXTURES / "snapshots" / "search-api-2024.tsv")
    snap_2018 = load_frequency_records(
        FIXTURES / "snapshots" / "search-api-2018.tsv")
    return dataset.examples, snap_2024, snap_2018


def test_bin_reproduction_shipped_snapshot(shipped):
    examples, snap_2024, _ = shipped
    assignment = assign_bins(snap_2024)
    counts = bin_example_counts(examples, assignment)
    assert counts == {1: 301, 2: 301, 3: 300, 4: 1095}
    _ok("bin reproduction (301/301/300/1095, exact)")


def test_snapshot_drift_39_entities(shipped):
    _, snap_2024, snap_2018 = shipped
    drift = compare_snapshots(snap_2018, snap_2024, assign_bins)
    assert drift.count == 39
    _ok("snapshot drift (39 bin changes, exact)")


def test_vocabulary_class_sizes():
    if not FIXTURES.exists():
        pytest.skip("shipped fixtures missing")
    vocab = load_type_vocabulary(
        FIXTURES / "ufet" / "types.txt",
        FIXTURES / "ufet" / "types_granularity.tsv")
    assert vocab.class_sizes() == {"coarse": 9, "fine": 121,
                                   "ultrafine": 10201}
    _ok("vocabulary partition (9/121/10201)")


# ---------------------------------------------------------------------------
# metric reproduction: brute-force oracle equivalence (the released
# prediction files are not available offline)


def _oracle_world():
    vocab_map = {
        "person": "coarse", "organization": "coarse", "location": "coarse",
        "politician": "fine", "athlete": "fine", "city": "fine",
        "dog": "fine", "film": "fine",
        "retired politician": "ultrafine", "marathon runner": "ultrafine",
        "silent film": "ultrafine",
    }
    vocab = TypeVocabulary(labels=frozenset(vocab_map), granularity=vocab_map)
    rng = random.Random(0xBEEF)
    labels = sorted(vocab.labels)
    examples = []
    predictions = {}
    hits = {}
    for i in range(20):
        mention = f"Entity {i}"
        gold = frozenset(rng.sample(labels, rng.randint(1, 4)))
        examples.append(make_example(f"ex-{i}", mention, "about", "we spoke",
                                     gold))
        k = rng.randint(0, 4)
        predictions[f"ex-{i}"] = frozenset(rng.sample(labels, k))
        hits[mention] = rng.randint(0, 10_000)
    bins = assign_bins([FrequencyRecord(e, "t", "s", h)
                        for e, h in hits.items()])
    return vocab, examples, predictions, bins


def test_metric_oracle_equivalence_20_blocks():
    vocab, examples, predictions, bins = _oracle_world()
    result = stratified_eval(examples, predictions, bins, vocab)
    assert len(result.blocks) == 20
    for (subset, view), block in result.blocks.items():
        pairs = []
        for ex in examples:
            b = bins.bin_of(ex.surface)
            if subset != "full-test" and f"bin-{b}" != subset:
                continue
            pred = set(predictions[ex.example_id])
            gold = set(ex.gold_types)
            if view != "overall":
                cls = vocab.labels_of(view)
                pred &= cls
                gold &= cls
            pairs.append((pred, gold))
        p, r, f1 = brute_block(pairs)
        assert block.precision == p and block.recall == r and block.f1 == f1
    _ok("metric oracle equivalence (20 blocks, exact)")


# ---------------------------------------------------------------------------
# full-pipeline property substitute (real-model correlations are not
# desk-reproducible; the bigram stub drives the same math end to end)


def test_full_pipeline_bigram_stub(tmp_path):
    started = time.perf_counter()
    rng = random.Random(0xF00D)

    first = ["Aldric", "Brenna", "Caspian", "Delphine", "Evander",
             "Fiora", "Gideon", "Halcyon", "Isolde", "Jorvik"]
    second = ["Amberly", "Boswell", "Cardew", "Dunmore", "Ellery"]
    entities = [f"{a} {b}" for a in first for b in second]
    assert len(entities) == 50

    filler = ("the old harbor town woke slowly while fishermen hauled nets "
              "and merchants argued about prices near the stone bridge").split()

    # synthetic corpus: entity i appears roughly in proportion to its rank
    sentences = []
    for rank, entity in enumerate(entities):
        for _ in range(1 + rank // 2):
            lead = " ".join(rng.choice(filler) for _ in range(rng.randint(2, 6)))
            tail = " ".join(rng.choice(filler) for _ in range(rng.randint(2, 6)))
            sentences.append(f"{lead} {entity} {tail} .")
    rng.shuffle(sentences)
    corpus_text = "\n".join(sentences)

    counts = count_corpus_hits(CorpusStream.from_texts([corpus_text]),
                               entities, "word-boundary")
    freq = [FrequencyRecord(normalize_surface(e), "corpus", "synth", c)
            for e, c in counts.items()]
    bins = assign_bins(freq)

    scorer = BigramScorer(corpus_text)
    salience = []
    for entity in entities:
        contexts = ContextSet(entity, tuple(
            f"context {i} mentions {entity} favorably" for i in range(10)))
        salience.append(average_salience(entity, contexts, scorer,
                                         STRATEGY_CAUSAL))
    rho = correlate_salience_with_hits(salience, freq)
    assert rho is not None and math.isfinite(rho)

    # stratified eval over a toy prediction run
    vocab_map = {"person": "coarse", "sailor": "fine", "merchant": "fine",
                 "harbor master": "ultrafine"}
    vocab = TypeVocabulary(frozenset(vocab_map), vocab_map)
    examples = [
        make_example(f"p-{i}", e, "we saw", "at the dock",
                     {"person", rng.choice(["sailor", "merchant"])})
        for i, e in enumerate(entities)
    ]
    predictions = {
        ex.example_id: frozenset(rng.sample(sorted(vocab.labels),
                                            rng.randint(0, 2)))
        for ex in examples
    }
    result = stratified_eval(examples, predictions, bins, vocab)

    bundle = ReportBundle(
        metric_tables={"bigram-stub": result.blocks},
        scatter=[(s.entity, counts[s.entity], s.mean_probability)
                 for s in salience],
        bin_f1={"bigram-stub": {
            b: result.blocks[(f"bin-{b}", "overall")].f1 for b in range(1, 5)
        }},
        split_curve=split_ratio_curve(
            [(1.0 + (i % 3) * 0.5, s.mean_probability)
             for i, s in enumerate(salience)]),
        bin_histogram=[(e, counts[e], bins.bin_of(normalize_surface(e)))
                       for e in entities],
    )
    manifest = emit_report(bundle, tmp_path / "report")
    assert len(manifest["figures"]) == 4
    assert len(manifest["tables"]) == 4

    elapsed = time.perf_counter() - started
    assert elapsed < 300.0
    _ok(f"full pipeline with bigram stub (rho={rho:.3f}, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# Hearst / few-shot plumbing


SINGULAR_FIXTURE = [
    ("politicians", "politician"), ("dogs", "dog"), ("cities", "city"),
    ("parties", "party"), ("armies", "army"), ("countries", "country"),
    ("ladies", "lady"), ("stories", "story"), ("wives", "wife"),
    ("knives", "knife"), ("lives", "life"), ("wolves", "wolf"),
    ("leaves", "leaf"), ("shelves", "shelf"), ("thieves", "thief"),
    ("scarves", "scarf"), ("churches", "church"), ("boxes", "box"),
    ("bushes", "bush"), ("classes", "class"), ("buses", "bus"),
    ("gases", "gas"), ("heroes", "hero"), ("potatoes", "potato"),
    ("tomatoes", "tomato"), ("echoes", "echo"), ("shoes", "shoe"),
    ("houses", "house"), ("causes", "cause"), ("cases", "case"),
    ("phrases", "phrase"), ("nurses", "nurse"), ("horses", "horse"),
    ("people", "person"), ("men", "man"), ("women", "woman"),
    ("children", "child"), ("feet", "foot"), ("teeth", "tooth"),
    ("mice", "mouse"), ("geese", "goose"), ("policemen", "policeman"),
    ("businessmen", "businessman"), ("criteria", "criterion"),
    ("analyses", "analysis"), ("crises", "crisis"), ("movies", "movie"),
    ("prizes", "prize"), ("athletes", "athlete"), ("engineers", "engineer"),
]

ADVERSARIAL = [
    '{"predicted_types": ["person", "politician", "person"]}',
    'Sure! {"predicted_types": ["dog"]} hope that helps',
    '```json\n{"predicted_types": ["city"]}\n```',
    '{"reasoning": "...", "predicted_types": ["person"]}',
    '{"outer": {"predicted_types": ["athlete"]}}',
    '{"predicted_types": []}',
    '{"predicted_types": ["PERSON", "Person"]}',
    '{"predicted_types": ["zzz-not-a-label"]}',
    '{"predicted_types": "person"}',
    '{"predicted_types": ["person"',
    "no json at all",
    "",
    "{}{}{}",
    '{"predicted_types": [42, null, "person"]}',
    '[{"predicted_types": ["person"]}]',
    '{"predicted_types": ["person"]} and {"predicted_types": ["dog"]}',
    "{'predicted_types': ['person']}",
    '{"PREDICTED_TYPES": ["person"]}',
    'x {"predicted_types": ["  city "]} y',
    '{"a": "}{", "predicted_types": ["person"]}',
]


def test_hearst_fewshot_plumbing(small_vocab):
    assert len(SINGULAR_FIXTURE) == 50
    for plural, singular in SINGULAR_FIXTURE:
        assert singularize(plural) == singular, plural
        assert singularize(singular) == singular, singular

    assert len(ADVERSARIAL) == 20
    for raw in ADVERSARIAL:
        parsed = parse_typing_response(raw, small_vocab)
        assert parsed.labels <= small_vocab.labels

    pool = [make_example(f"t-{i}", f"Entity{i}", "l", "r", {"person"})
            for i in range(40)]
    target = make_example("target", "Rex", "the dog", "barked", {"dog"})
    a = build_fewshot_prompt(pool, 15, target, seed=7)
    b = build_fewshot_prompt(pool, 15, target, seed=7)
    assert a.text.encode("utf-8") == b.text.encode("utf-8")
    _ok("hearst/fewshot plumbing (50 singulars, 20 adversarial, "
        "byte-exact prompts)")
