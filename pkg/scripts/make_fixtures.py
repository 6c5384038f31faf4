#!/usr/bin/env python3
"""Generate the shipped synthetic fixtures under data/fixtures/.

Everything here is deterministic (fixed seed) and self-checked before
writing:

* a type vocabulary with exactly 9 coarse / 121 fine / 10201 ultrafine
  labels;
* a test split of 1,997 examples over 1,203 unique entities whose 2024
  snapshot bins the examples (301, 301, 300, 1095) across bins 1-4;
* a 2018 snapshot that is a 39-entity hit permutation of the 2024 one, so
  exactly 39 entities change bins;
* a small plain-text corpus mentioning a handful of the entities.

The real benchmark's entity list and search-API counts are not
redistributable, so these stand-ins reproduce the published distributional
shape instead of the underlying data.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from tailtyping.dataset import FrequencyRecord, normalize_surface  # noqa: E402
from tailtyping.rankstats import assign_bins  # noqa: E402
from tailtyping.search import compare_snapshots  # noqa: E402

OUT = REPO / "data" / "fixtures"

COARSE = [
    "person", "group", "organization", "location", "entity", "time",
    "object", "event", "place",
]

FINE = """
politician athlete artist actor author musician singer dancer doctor lawyer engineer
scientist soldier criminal leader coach student teacher journalist director producer writer
city country state province island river mountain lake sea forest desert
company team university school hospital government army band church museum airline
newspaper magazine film book song album game war election festival ceremony
disease language religion currency animal dog cat bird fish horse snake
vehicle car ship aircraft train weapon building bridge road park stadium
hotel restaurant food drink drug law treaty award sport technology software
website instrument tool machine device product organ planet star holiday month
president minister senator governor mayor judge king queen prince princess duke
protest attack storm earthquake flood accident murder robbery trial wedding funeral
""".split()

ULTRA_MODIFIERS = """
retired famous local former young senior junior chief national international
regional military civil royal federal provincial urban rural ancient modern
digital medical legal financial industrial agricultural commercial religious
academic scientific artistic musical literary historic political economic
social cultural environmental professional amateur olympic veteran celebrated
aspiring struggling legendary notorious beloved controversial influential
prominent obscure wealthy impoverished exiled elected appointed hereditary
freelance corporate municipal colonial maritime alpine coastal tropical
nomadic indigenous immigrant refugee bilingual self-taught award-winning
bestselling debut interim deputy acting honorary visiting adjunct emeritus
clandestine undercover rogue reformed fictional mythical medieval renaissance
baroque romantic futuristic experimental orthodox secular radical moderate
conservative progressive populist grassroots underground mainstream fringe
pioneering
""".split()[:101]

ULTRA_NOUNS = """
strategist organizer archivist curator violinist cellist percussionist
blacksmith goldsmith locksmith carpenter electrician plumber machinist
welder surveyor cartographer navigator astronomer geologist botanist
zoologist chemist physicist mathematician statistician economist historian
archaeologist linguist philosopher theologian psychologist sociologist
anthropologist biographer novelist poet playwright screenwriter columnist
editor publisher translator interpreter diplomat ambassador consul envoy
chancellor registrar bursar provost dean principal headmaster tutor mentor
apprentice intern recruit cadet sergeant lieutenant colonel general admiral
commander pilot sailor marine ranger scout sniper medic surgeon dentist
pharmacist veterinarian midwife paramedic therapist counselor advocate
prosecutor magistrate bailiff sheriff constable detective inspector warden
chaplain missionary monk nun abbot bishop cardinal vicar deacon elder
shepherd farmer rancher fisherman miner logger
""".split()[:101]

DETERMINERS = ["the", "a"]

PLACE_WORDS = """
Arlenville Bruxton Caldermont Dunwich Eastvale Farrowgate Glenmoor Halbrook
Ironfield Juniper Kestrel Larkspur Millbrook Northgate Oakhurst Pinewood
Quarrytown Ravenshollow Silvermine Thornbury Umberfield Vexford Westmarch
Yarrowdale Zephyrton Ashcombe Birchwood Crowmarsh Dovermill Elmsworth
""".split()

ROLE_WORDS = """
police chief fire marshal harbor master town clerk night watchman
district attorney school superintendent park warden postmaster toll keeper
""".split()

TASK_WORDS = """
serial murder task force flood relief committee harvest festival council
lighthouse restoration society riverbank cleanup crew orchard preservation
trust bridge inspection panel drought response unit
""".split()

COMMON_HEADS = """
film company president city team game war book song album council mayor
author ship army storm trial election bridge museum hotel judge
""".split()

CONTEXT_WORDS = """
yesterday reporters said that during the meeting officials confirmed the
announcement while residents gathered near the old square and waited for
news about the decision which had been delayed since early spring despite
repeated promises from the committee according to several witnesses
""".split()


def build_vocabulary() -> tuple[list[str], dict[str, str]]:
    assert len(COARSE) == 9, len(COARSE)
    assert len(FINE) == len(set(FINE)) == 121, len(FINE)
    mods = ULTRA_MODIFIERS
    nouns = ULTRA_NOUNS
    assert len(mods) == len(set(mods)) == 101, len(mods)
    assert len(nouns) == len(set(nouns)) == 101, len(nouns)
    ultra = [f"{m} {n}" for m in mods for n in nouns]
    assert len(ultra) == 10201

    labels = COARSE + FINE + ultra
    assert len(labels) == len(set(labels)) == 10331
    granularity = {}
    for l in COARSE:
        granularity[l] = "coarse"
    for l in FINE:
        granularity[l] = "fine"
    for l in ultra:
        granularity[l] = "ultrafine"
    return labels, granularity


def _long_phrase(rng: random.Random, i: int) -> str:
    place = PLACE_WORDS[i % len(PLACE_WORDS)]
    role = ROLE_WORDS[(i // len(PLACE_WORDS)) % len(ROLE_WORDS)]
    task = TASK_WORDS[i % len(TASK_WORDS)]
    return f"the {place} {role} and the {task} number {i}"


def _medium_phrase(rng: random.Random, i: int) -> str:
    place = PLACE_WORDS[i % len(PLACE_WORDS)]
    noun = ULTRA_NOUNS[i % len(ULTRA_NOUNS)]
    return f"{noun.capitalize()} {place} {i}"


def _short_phrase(rng: random.Random, i: int) -> str:
    place = PLACE_WORDS[i % len(PLACE_WORDS)]
    head = COMMON_HEADS[(i * 7) % len(COMMON_HEADS)]
    return f"{place} {head} {i}"


def _common_phrase(i: int) -> str:
    if i < len(COMMON_HEADS):
        return f"the {COMMON_HEADS[i]}"
    det = DETERMINERS[i % 2]
    head = COMMON_HEADS[i % len(COMMON_HEADS)]
    qual = ULTRA_MODIFIERS[i % len(ULTRA_MODIFIERS)]
    return f"{det} {qual} {head}"


def build_entities(rng: random.Random) -> list[str]:
    """1203 unique surface forms ordered rarest -> most frequent."""
    entities: list[str] = []
    for i in range(301):
        entities.append(_long_phrase(rng, i))
    for i in range(301):
        entities.append(_medium_phrase(rng, i))
    for i in range(300):
        entities.append(_short_phrase(rng, i))
    for i in range(301):
        entities.append(_common_phrase(i))
    entities = [normalize_surface(e) for e in entities]
    assert len(entities) == 1203
    assert len(set(entities)) == 1203, "entity surface forms must be unique"
    return entities


def build_hits(count: int) -> list[int]:
    """Strictly increasing, long-tail-shaped hit counts."""
    hits = []
    for rank in range(count):
        base = int(10 ** (rank * 8.0 / (count - 1)))
        hits.append(base + rank - 1 if rank else 0)
    assert all(b > a for a, b in zip(hits, hits[1:]))
    return hits


def permute_for_2018(entities: list[str], hits: dict[str, int]) -> dict[str, int]:
    """Swap hit values among exactly 39 entities across bin boundaries.

    The hit multiset is unchanged, so the quartile thresholds are identical
    and precisely the permuted entities change bins: 18 two-cycles plus one
    three-cycle = 39 entities.
    """
    bin1 = entities[0:301]
    bin2 = entities[301:602]
    bin3 = entities[602:902]
    bin4 = entities[902:1203]
    older = dict(hits)
    for t in range(9):
        a, b = bin1[10 + t], bin3[50 + t]
        older[a], older[b] = older[b], older[a]
    for t in range(9):
        a, b = bin2[20 + t], bin4[40 + t]
        older[a], older[b] = older[b], older[a]
    a, b, c = bin1[200], bin2[150], bin3[150]
    older[a], older[b], older[c] = older[b], older[c], older[a]
    return older


def sample_gold(rng: random.Random) -> list[str]:
    gold = [rng.choice(COARSE)]
    for _ in range(rng.randint(0, 2)):
        gold.append(rng.choice(FINE))
    for _ in range(rng.randint(0, 2)):
        gold.append(
            f"{rng.choice(ULTRA_MODIFIERS)} {rng.choice(ULTRA_NOUNS)}"
        )
    return sorted(set(gold))


def build_examples(rng: random.Random, entities: list[str]) -> list[dict]:
    """1,997 example rows: bins 1-3 entities once each, bin-4 entities
    duplicated zipf-style up to 1,095 examples."""
    rows = []

    def ctx(n: int) -> list[str]:
        return [rng.choice(CONTEXT_WORDS) for _ in range(n)]

    mentions: list[str] = list(entities[:902])
    bin4 = entities[902:1203]
    weights = [1.0 / (i + 1) for i in range(len(bin4))]
    total_w = sum(weights)
    alloc = [max(1, int(w / total_w * 1095)) for w in weights]
    while sum(alloc) > 1095:
        alloc[alloc.index(max(alloc))] -= 1
    i = 0
    while sum(alloc) < 1095:
        alloc[i % len(alloc)] += 1
        i += 1
    assert sum(alloc) == 1095 and all(a >= 1 for a in alloc)
    for entity, n in zip(bin4, alloc):
        mentions.extend([entity] * n)
    assert len(mentions) == 1997

    rng.shuffle(mentions)
    for idx, mention in enumerate(mentions):
        rows.append({
            "ex_id": f"test-{idx:04d}",
            "mention_span": mention,
            "left_context_token": ctx(rng.randint(2, 8)),
            "right_context_token": ctx(rng.randint(2, 8)),
            "y_str": sample_gold(rng),
        })
    return rows


def build_corpus(rng: random.Random, entities: list[str]) -> list[str]:
    """A few shards of filler text with known entity mentions embedded."""
    shards = []
    frequent = entities[1150:1203]
    rare = entities[0:5]
    for s in range(3):
        words = []
        for _ in range(2500):
            words.append(rng.choice(CONTEXT_WORDS))
            if rng.random() < 0.02:
                words.append(rng.choice(frequent))
            if rng.random() < 0.002:
                words.append(rng.choice(rare))
        shards.append(" ".join(words) + "\n")
    return shards


def main() -> int:
    rng = random.Random(20240229)
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "ufet").mkdir(exist_ok=True)
    (OUT / "snapshots").mkdir(exist_ok=True)
    (OUT / "corpus").mkdir(exist_ok=True)

    labels, granularity = build_vocabulary()
    (OUT / "ufet" / "types.txt").write_text(
        "".join(l + "\n" for l in labels), encoding="utf-8")
    (OUT / "ufet" / "types_granularity.tsv").write_text(
        "".join(f"{l}\t{granularity[l]}\n" for l in labels), encoding="utf-8")

    entities = build_entities(rng)
    hit_values = build_hits(len(entities))
    hits_2024 = dict(zip(entities, hit_values))
    hits_2018 = permute_for_2018(entities, hits_2024)

    def records(hits: dict[str, int], snapshot: str) -> list[FrequencyRecord]:
        return [FrequencyRecord(e, "search-api", snapshot, hits[e])
                for e in entities]

    rec_2024 = records(hits_2024, "2024-12-31")
    rec_2018 = records(hits_2018, "2018-12-31")

    # self-checks before writing anything
    assignment = assign_bins(rec_2024)
    unique_counts = assignment.unique_counts()
    assert unique_counts == {1: 301, 2: 301, 3: 300, 4: 301}, unique_counts
    drift = compare_snapshots(rec_2018, rec_2024, assign_bins)
    assert drift.count == 39, drift.count

    examples = build_examples(rng, entities)
    per_bin = {b: 0 for b in range(1, 5)}
    for row in examples:
        per_bin[assignment.bins[normalize_surface(row["mention_span"])]] += 1
    assert per_bin == {1: 301, 2: 301, 3: 300, 4: 1095}, per_bin

    with (OUT / "ufet" / "test.jsonl").open("w", encoding="utf-8") as fh:
        for row in examples:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    for name, recs in (("search-api-2024.tsv", rec_2024),
                       ("search-api-2018.tsv", rec_2018)):
        with (OUT / "snapshots" / name).open("w", encoding="utf-8") as fh:
            for r in recs:
                fh.write(f"{r.entity}\t{r.source}\t{r.snapshot}\t{r.hits}\n")

    for i, shard in enumerate(build_corpus(rng, entities)):
        (OUT / "corpus" / f"shard-{i}.txt").write_text(shard, encoding="utf-8")

    print(f"fixtures written to {OUT}")
    print(f"  vocabulary: {len(labels)} labels")
    print(f"  test split: {len(examples)} examples, "
          f"{len(entities)} unique entities")
    print(f"  example distribution over bins: {per_bin}")
    print(f"  2018 vs 2024 bin changes: {drift.count}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
