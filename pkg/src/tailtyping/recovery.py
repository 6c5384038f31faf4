"""Chain-rule entity recovery probability under MLM and causal strategies.

The probability of recovering a multi-token entity in context factorizes
left to right: each token is scored conditioned on the already-revealed
entity prefix plus the surrounding context. Accumulation happens in log
space and is exponentiated once at the reporting boundary, so long entities
over large vocabularies cannot underflow mid-product.

Strategies:

* ``mlm-equal-masks``: the entity is replaced by one mask per token and the
  masks are resolved strictly left to right; tokens not yet scored stay
  masked.
* ``mlm-progressive-single-mask``: a single mask is scored and then
  re-inserted after each filled token, growing the revealed prefix.
* ``causal-fill-in-blank``: a fill-in-the-blank prompt is built and the
  entity tokens are scored as a conditional continuation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .dataset import ContextSet, FrequencyRecord
from .rankstats import spearman
from .scorers import CAP_CAUSAL, CAP_MLM, MASK_SLOT, Scorer, check_logprob

STRATEGY_MLM_EQUAL = "mlm-equal-masks"
STRATEGY_MLM_PROGRESSIVE = "mlm-progressive-single-mask"
STRATEGY_CAUSAL = "causal-fill-in-blank"
STRATEGIES = (STRATEGY_MLM_EQUAL, STRATEGY_MLM_PROGRESSIVE, STRATEGY_CAUSAL)

_REQUIRED_CAPABILITY = {
    STRATEGY_MLM_EQUAL: CAP_MLM,
    STRATEGY_MLM_PROGRESSIVE: CAP_MLM,
    STRATEGY_CAUSAL: CAP_CAUSAL,
}

PROMPT_INSTRUCTION = (
    "Instruction: Fill in the appropriate entity that completes the "
    "sentence below."
)
PROMPT_BLANK = "[blank]"
PROMPT_RESPONSE = f"Response: {PROMPT_BLANK} can be replaced with:"


@dataclass(frozen=True)
class RecoveryEstimate:
    """Per-token conditional log-probabilities and their product for one
    (entity, context) pair."""

    entity: str
    context_id: str
    token_logprobs: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.token_logprobs:
            raise ValueError("estimate needs at least one token")
        for lp in self.token_logprobs:
            check_logprob(lp, "RecoveryEstimate")

    @property
    def n(self) -> int:
        return len(self.token_logprobs)

    @property
    def log_probability(self) -> float:
        return math.fsum(self.token_logprobs)

    @property
    def probability(self) -> float:
        return math.exp(self.log_probability)

    @property
    def token_probabilities(self) -> tuple[float, ...]:
        return tuple(math.exp(lp) for lp in self.token_logprobs)


@dataclass(frozen=True)
class SalienceRecord:
    """Mean recovery probability of an entity over its context set."""

    entity: str
    mean_probability: float
    estimates: tuple[RecoveryEstimate, ...]

    @property
    def context_count(self) -> int:
        return len(self.estimates)


def required_capability(strategy: str) -> str:
    try:
        return _REQUIRED_CAPABILITY[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}") from None


def _check_strategy(scorer: Scorer, strategy: str) -> None:
    needed = required_capability(strategy)
    if needed not in scorer.capabilities:
        raise ValueError(
            f"strategy {strategy!r} needs a {needed!r}-capable scorer; "
            f"{scorer.model_id} offers {sorted(scorer.capabilities)}"
        )


def mask_entity(
    context_tokens: Sequence[int], span_start: int, n: int, mode: str
) -> list[int]:
    """Replace the ``n`` entity tokens at ``span_start`` with mask slots:
    ``equal`` inserts n masks, ``single`` exactly one."""
    if n < 1:
        raise ValueError("entity token count must be >= 1")
    if mode not in ("equal", "single"):
        raise ValueError(f"unknown mask mode {mode!r}")
    if not (0 <= span_start and span_start + n <= len(context_tokens)):
        raise ValueError("entity span out of range")
    masks = [MASK_SLOT] * (n if mode == "equal" else 1)
    return list(context_tokens[:span_start]) + masks + list(context_tokens[span_start + n:])


def build_causal_prompt(context: str, entity_span: tuple[int, int]) -> str:
    """Three-part fill-in-the-blank prompt: instruction, the context with
    the mention replaced by the literal ``[blank]``, and the response cue."""
    start, end = entity_span
    if not (0 <= start < end <= len(context)):
        raise ValueError(f"invalid entity span {entity_span}")
    if PROMPT_BLANK in context:
        raise ValueError(
            f"context already contains the literal {PROMPT_BLANK!r}"
        )
    blanked = context[:start] + PROMPT_BLANK + context[end:]
    return f"{PROMPT_INSTRUCTION}\nContext: {blanked}\n{PROMPT_RESPONSE}"


def recover_probability(
    context: str,
    entity_span: tuple[int, int],
    scorer: Scorer,
    strategy: str,
    context_id: str = "ctx-0",
) -> RecoveryEstimate:
    """Chain-rule probability of recovering the entity at ``entity_span``.

    Token i is scored given tokens 1..i-1 already revealed plus the
    surrounding context.
    """
    _check_strategy(scorer, strategy)
    start, end = entity_span
    if not (0 <= start < end <= len(context)):
        raise ValueError(f"invalid entity span {entity_span}")
    entity = context[start:end]

    entity_ids = list(scorer.tokenize(entity).ids)
    n = len(entity_ids)
    if n == 0:
        raise ValueError(f"entity {entity!r} tokenizes to zero tokens")

    if strategy == STRATEGY_CAUSAL:
        prompt = build_causal_prompt(context, entity_span)
        prefix = list(scorer.tokenize(prompt).ids)
        logprobs = []
        for i, target in enumerate(entity_ids):
            logprobs.append(scorer.score_causal(prefix + entity_ids[:i], target))
        return RecoveryEstimate(entity, context_id, tuple(logprobs))

    left_ids = list(scorer.tokenize(context[:start]).ids)
    right_ids = list(scorer.tokenize(context[end:]).ids)
    span_start = len(left_ids)

    logprobs = []
    if strategy == STRATEGY_MLM_EQUAL:
        tokens = left_ids + [MASK_SLOT] * n + right_ids
        for i, target in enumerate(entity_ids):
            logprobs.append(scorer.score_mlm(tokens, span_start + i, target))
            tokens[span_start + i] = target
    else:  # progressive single mask
        for i, target in enumerate(entity_ids):
            tokens = left_ids + entity_ids[:i] + [MASK_SLOT] + right_ids
            logprobs.append(scorer.score_mlm(tokens, span_start + i, target))
    return RecoveryEstimate(entity, context_id, tuple(logprobs))


def average_salience(
    entity: str,
    contexts: ContextSet,
    scorer: Scorer,
    strategy: str,
    *,
    geometric: bool = False,
) -> SalienceRecord:
    """Recovery probability averaged over a context set.

    The arithmetic mean of per-context probabilities is the default; the
    geometric alternative (mean in log space) is available behind a flag.
    """
    if not contexts.sentences:
        raise ValueError(f"empty context set for {entity!r}")
    if contexts.entity != entity:
        raise ValueError(
            f"context set is for {contexts.entity!r}, not {entity!r}"
        )
    estimates = []
    for i, sentence in enumerate(contexts.sentences):
        start = sentence.index(entity)
        span = (start, start + len(entity))
        estimates.append(
            recover_probability(sentence, span, scorer, strategy,
                                context_id=f"ctx-{i}")
        )
    if geometric:
        mean = math.exp(
            sum(e.log_probability for e in estimates) / len(estimates)
        )
    else:
        mean = sum(e.probability for e in estimates) / len(estimates)
    return SalienceRecord(entity=entity, mean_probability=mean,
                          estimates=tuple(estimates))


def correlate_salience_with_hits(
    salience: Sequence[SalienceRecord],
    frequency: Sequence[FrequencyRecord],
) -> float | None:
    """Spearman correlation between hit counts and mean recovery
    probabilities over a shared entity set."""
    sal_by_entity = {s.entity: s.mean_probability for s in salience}
    hits_by_entity = {r.entity: r.hits for r in frequency}
    if set(sal_by_entity) != set(hits_by_entity):
        diff = sorted(set(sal_by_entity).symmetric_difference(hits_by_entity))
        raise ValueError(f"entity sets differ, e.g. {diff[:5]}")
    entities = sorted(sal_by_entity)
    return spearman(
        [float(hits_by_entity[e]) for e in entities],
        [sal_by_entity[e] for e in entities],
    )


def write_salience_records(
    records: Sequence[SalienceRecord],
    per_context_path: str | Path,
    per_entity_path: str | Path,
) -> None:
    """Emit ``entity<TAB>context_id<TAB>n_tokens<TAB>log_prob`` lines plus a
    per-entity mean file."""
    with Path(per_context_path).open("w", encoding="utf-8") as fh:
        for rec in records:
            for est in rec.estimates:
                fh.write(
                    f"{rec.entity}\t{est.context_id}\t{est.n}\t"
                    f"{est.log_probability!r}\n"
                )
    with Path(per_entity_path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                f"{rec.entity}\t{rec.context_count}\t{rec.mean_probability!r}\n"
            )
