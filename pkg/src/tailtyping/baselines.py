"""PLM-driven typing baselines: Hearst-template mask prediction and few-shot
prompting with structured output parsing.

Everything here is model-free: the Hearst path drives any mlm-capable
scorer, and the few-shot path builds prompt bytes / parses raw model output
so external runners can execute the actual generation.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .dataset import TypeVocabulary, TypingExample
from .errors import InputFormatError
from .scorers import MASK_SLOT, Scorer

logger = logging.getLogger(__name__)

PLACEMENTS = (
    "standalone",
    "appended-after-period",
    "appended-after-separator",
    "inserted-in-sentence",
)

MASK_TOKEN = "[MASK]"
ENTITY_SLOT = "{entity}"


@dataclass(frozen=True)
class HearstTemplate:
    """A mask-prediction template: pattern text containing exactly one
    ``{entity}`` and one ``[MASK]`` placeholder, a placement mode describing
    how it combines with the example sentence, and the number of mask
    candidates to keep."""

    pattern: str
    placement: str
    n: int
    name: str = ""

    def __post_init__(self) -> None:
        if self.pattern.count(MASK_TOKEN) != 1:
            raise ValueError(f"pattern needs exactly one {MASK_TOKEN}: {self.pattern!r}")
        if self.pattern.count(ENTITY_SLOT) != 1:
            raise ValueError(f"pattern needs exactly one {ENTITY_SLOT}: {self.pattern!r}")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"unknown placement {self.placement!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")


# Placements with their dev-tuned candidate counts, shipped as presets.
PRESET_TEMPLATES: dict[str, HearstTemplate] = {
    t.name: t
    for t in (
        HearstTemplate("[MASK] such as {entity}", "standalone", 12, name="standalone"),
        HearstTemplate("[MASK] such as {entity}", "appended-after-period", 5, name="after-period"),
        HearstTemplate("[MASK] such as {entity}", "appended-after-separator", 5, name="after-separator"),
        HearstTemplate("[MASK] such as {entity}", "inserted-in-sentence", 6, name="inserted"),
    )
}

ALTERNATE_PATTERNS = (
    "[MASK] such as {entity}",
    "{entity} and any other [MASK]",
    "{entity} and some other [MASK]",
)


def load_templates(path: str | Path) -> list[HearstTemplate]:
    """Read a ``name<TAB>pattern<TAB>placement<TAB>n`` preset file."""
    templates = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise InputFormatError(
                f"{path}:{lineno}: expected name<TAB>pattern<TAB>placement<TAB>n"
            )
        try:
            templates.append(HearstTemplate(
                pattern=parts[1], placement=parts[2], n=int(parts[3]),
                name=parts[0],
            ))
        except ValueError as e:
            raise InputFormatError(f"{path}:{lineno}: {e}") from e
    return templates


def dump_templates(templates: Sequence[HearstTemplate], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for t in templates:
            fh.write(f"{t.name}\t{t.pattern}\t{t.placement}\t{t.n}\n")


def _compose_query(example: TypingExample, template: HearstTemplate) -> str:
    """Render the mask query text for one example; the mask stays as the
    literal ``[MASK]`` and is located afterwards by token position."""
    hearst = template.pattern.replace(ENTITY_SLOT, example.mention_span)
    left = " ".join(example.left_context)
    right = " ".join(example.right_context)
    sentence = example.sentence()
    if template.placement == "standalone":
        return hearst
    if template.placement == "appended-after-period":
        return f"{sentence} . {hearst}"
    if template.placement == "appended-after-separator":
        return f"{sentence} [SEP] {hearst}"
    # inserted-in-sentence: the clause goes right after the mention span
    parts = [left, f"{example.mention_span} , {hearst} ,", right]
    return " ".join(p for p in parts if p)


def _ranked_label_candidates(
    example: TypingExample,
    template: HearstTemplate,
    scorer: Scorer,
    vocab: TypeVocabulary,
    need: int,
    top_m: int = 200,
) -> list[str]:
    """Mask-fill candidates ranked by probability, singularized and
    restricted to the vocabulary."""
    query = _compose_query(example, template)
    pre, _, post = query.partition(MASK_TOKEN)
    ids = list(scorer.tokenize(pre).ids) + [MASK_SLOT] + list(scorer.tokenize(post).ids)
    mask_position = len(scorer.tokenize(pre).ids)
    candidates = scorer.mlm_candidates(ids, mask_position, max(top_m, need))
    labels: list[str] = []
    for cand in candidates:
        label = singularize(cand.token.lower())
        if label in vocab and label not in labels:
            labels.append(label)
        if len(labels) >= need:
            break
    return labels


def hearst_predict(
    example: TypingExample,
    template: HearstTemplate,
    scorer: Scorer,
    vocab: TypeVocabulary,
    n: int | None = None,
) -> frozenset[str]:
    """Top-n surviving mask candidates as the predicted type set.

    Candidates are ranked by the scorer's mask-fill probability, converted
    plural -> singular, and filtered to the vocabulary; fewer than n
    survivors is a warning, not an error.
    """
    n = template.n if n is None else n
    labels = _ranked_label_candidates(example, template, scorer, vocab, n)
    if len(labels) < n:
        logger.warning(
            "example %s: only %d of %d candidates survive the vocabulary",
            example.example_id, len(labels), n,
        )
    return frozenset(labels)


# ---------------------------------------------------------------------------
# plural -> singular conversion

_IRREGULAR = {
    "people": "person", "men": "man", "women": "woman", "children": "child",
    "feet": "foot", "teeth": "tooth", "geese": "goose", "mice": "mouse",
    "oxen": "ox", "dice": "die", "indices": "index", "matrices": "matrix",
    "appendices": "appendix", "criteria": "criterion", "phenomena": "phenomenon",
    "media": "medium", "bacteria": "bacterium", "alumni": "alumnus",
    "fungi": "fungus", "cacti": "cactus", "nuclei": "nucleus",
    "stimuli": "stimulus", "theses": "thesis", "crises": "crisis",
    "analyses": "analysis", "diagnoses": "diagnosis", "hypotheses": "hypothesis",
    "axes": "axis",
}

# -ves plurals whose singular ends in -fe rather than -f
_VES_FE_STEMS = ("wi", "kni", "li")

# explicit plural -> singular where the suffix rules would misfire
_EXCEPTIONS = {
    "houses": "house", "causes": "cause", "cases": "case", "bases": "base",
    "phrases": "phrase", "phases": "phase", "courses": "course",
    "nurses": "nurse", "horses": "horse", "noses": "nose",
    "diseases": "disease", "purposes": "purpose", "licenses": "license",
    "universes": "universe", "shoes": "shoe", "toes": "toe",
    "aches": "ache", "caches": "cache", "niches": "niche",
    "headaches": "headache", "movies": "movie", "cookies": "cookie",
    "menus": "menu", "prizes": "prize", "sizes": "size", "mazes": "maze",
    "judges": "judge", "colleges": "college",
}

# words ending in s that are not plurals
_NOT_PLURAL = {
    "news", "series", "species", "politics", "physics", "economics",
    "mathematics", "athletics", "headquarters", "means", "lens", "bus",
    "gas", "campus", "virus", "status", "corps", "chaos", "bias", "atlas",
    "canvas", "alias", "texas", "christmas",
}


def singularize(label: str) -> str:
    """Rule-based English plural -> singular for lowercase type labels.

    Idempotent on singulars; unknown shapes pass through unchanged.
    """
    w = label
    if not w:
        return w
    if w in _IRREGULAR:
        return _IRREGULAR[w]
    if w in _EXCEPTIONS:
        return _EXCEPTIONS[w]
    if w.endswith("men") and len(w) >= 5:
        return w[:-3] + "man"
    if not w.endswith("s") or w in _NOT_PLURAL:
        return w
    if w.endswith("ies") and len(w) >= 5:
        return w[:-3] + "y"
    if w.endswith("ves") and len(w) >= 5:
        stem = w[:-3]
        if any(stem.endswith(s) for s in _VES_FE_STEMS):
            return stem + "fe"
        return stem + "f"
    if w.endswith(("ches", "shes", "xes", "sses", "zzes", "oes")):
        return w[:-2]
    if w.endswith("ses") and len(w) >= 5:
        return w[:-2]
    if w.endswith("ss") or w.endswith("us") or w.endswith("is"):
        return w
    if len(w) >= 2:
        return w[:-1]
    return w


# ---------------------------------------------------------------------------
# few-shot prompting

SYSTEM_PROMPT = '''# Entity-Typing Assistant
You are a precise entity-typing assistant.
Given a sentence in which **one entity mention is wrapped in `<ENT> ... </ENT>` tags**, produce **only** a JSON object whose single key is **"predicted_types"**.

## Guidelines
- The value must be a JSON array of strings.
- Include all the type labels that are relevant.
- Remove duplicates and keep each type concise (ideally a short noun phrase).
- Do not output any keys other than `"predicted_types"`.

## Input Format
- SENTENCE: The complete sentence with the target entity clearly marked with `<ENT>` tags
- ENTITY_MENTION: The target entity mention from the sentence

## Output Format
```json
{
    "predicted_types": ["TypeA", "TypeB", "TypeC", ...]
}
```'''


@dataclass(frozen=True)
class FewShotPrompt:
    """A deterministic few-shot prompt: system text, k worked examples, and
    the target input block."""

    system_text: str
    examples: tuple[TypingExample, ...]
    target: TypingExample

    def __post_init__(self) -> None:
        sentence = self.target.sentence(mark_entity=True)
        if sentence.count("<ENT>") != 1 or sentence.count("</ENT>") != 1:
            raise ValueError("target mention must be tagged exactly once")

    @property
    def k(self) -> int:
        return len(self.examples)

    @property
    def text(self) -> str:
        blocks = [self.system_text]
        for i, ex in enumerate(self.examples, start=1):
            types = ", ".join(json.dumps(t) for t in sorted(ex.gold_types))
            blocks.append(
                f"# Example #{i}:\n"
                "- INPUT:\n"
                f"- SENTENCE: '{ex.sentence(mark_entity=True)}'\n"
                f"- ENTITY_MENTION: '{ex.mention_span}'\n"
                "\n"
                "- OUTPUT:\n"
                f'{{"predicted_types": [{types}]}}'
            )
        blocks.append(
            "# Target:\n"
            "- INPUT:\n"
            f"- SENTENCE: '{self.target.sentence(mark_entity=True)}'\n"
            f"- ENTITY_MENTION: '{self.target.mention_span}'\n"
            "\n"
            "- OUTPUT:\n"
        )
        return "\n\n".join(blocks)


def build_fewshot_prompt(
    pool: Sequence[TypingExample],
    k: int,
    target: TypingExample,
    seed: int = 0,
) -> FewShotPrompt:
    """Select k examples uniformly at random (fixed seed) from the training
    pool and assemble the prompt; (pool, k, target, seed) fully determine
    the output bytes."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if len(pool) < k:
        raise ValueError(f"pool has {len(pool)} examples, need {k}")
    if any(ex.example_id == target.example_id for ex in pool):
        raise ValueError(f"target {target.example_id!r} must not be in the pool")
    chosen = random.Random(seed).sample(list(pool), k) if k else []
    return FewShotPrompt(system_text=SYSTEM_PROMPT, examples=tuple(chosen),
                         target=target)


# ---------------------------------------------------------------------------
# structured output parsing


@dataclass(frozen=True)
class ParsedPrediction:
    labels: frozenset[str]
    failed: bool


def parse_typing_response(raw: object, vocab: TypeVocabulary) -> ParsedPrediction:
    """Extract predicted labels from arbitrary model output.

    Scans for the first well-formed JSON object carrying a
    ``predicted_types`` array, lowercases, deduplicates and filters the
    labels to the vocabulary. Anything unparseable yields an empty set with
    the failure flag raised; this function never throws.
    """
    if not isinstance(raw, str) or not raw:
        return ParsedPrediction(frozenset(), failed=True)
    decoder = json.JSONDecoder()
    idx = raw.find("{")
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(raw, idx)
        except ValueError:
            obj = None
        if isinstance(obj, dict) and isinstance(obj.get("predicted_types"), list):
            labels = {
                t.strip().lower()
                for t in obj["predicted_types"]
                if isinstance(t, str) and t.strip()
            }
            return ParsedPrediction(
                frozenset(l for l in labels if l in vocab), failed=False
            )
        idx = raw.find("{", idx + 1)
    return ParsedPrediction(frozenset(), failed=True)
