"""Context-sentence generation with a verbatim-containment guarantee.

A generator proposes candidate sentences for an entity; candidates that do
not contain the entity verbatim are discarded and regenerated within a
bounded retry budget. Falling short is not an error: the partial result is
returned with a shortfall flag so callers can decide.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

logger = logging.getLogger("lmbridge")

# produces candidate sentences for (entity, how_many, attempt_index)
Generator = Callable[[str, int, int], Sequence[str]]


@dataclass
class GeneratedContexts:
    sentences: list[str]
    shortfall: int
    attempts: int


def generate_with_containment(
    entity: str,
    count: int,
    generator: Generator,
    retry_budget: int = 3,
) -> GeneratedContexts:
    if count < 0:
        raise ValueError("count must be >= 0")
    kept: list[str] = []
    attempts = 0
    while len(kept) < count and attempts <= retry_budget:
        need = count - len(kept)
        candidates = generator(entity, need, attempts)
        attempts += 1
        for sentence in candidates:
            if entity in sentence and len(kept) < count:
                kept.append(sentence)
    shortfall = count - len(kept)
    if shortfall:
        logger.warning("generated %d/%d sentences for %r after %d attempts",
                       len(kept), count, entity, attempts)
    return GeneratedContexts(sentences=kept, shortfall=shortfall,
                             attempts=attempts)


def model_generator(model, settings) -> Generator:
    """Sampling generator over a causal checkpoint; seed-controlled."""
    import torch

    tokenizer = model.tokenizer

    def generate(entity: str, how_many: int, attempt: int) -> list[str]:
        prompt = f"Write a sentence that includes {entity} :"
        ids = tokenizer.encode(prompt, add_special_tokens=False)
        bos = model.model.config.bos_token_id
        if bos is not None:
            ids = [bos] + ids
        batch = torch.tensor([ids], device=model.config.device)
        torch.manual_seed(settings.seed + attempt)
        out = model.model.generate(
            batch,
            do_sample=True,
            temperature=settings.temperature,
            max_new_tokens=settings.max_new_tokens,
            num_return_sequences=how_many,
            pad_token_id=tokenizer.pad_token_id or 0,
        )
        sentences = []
        for row in out:
            text = tokenizer.decode(row[len(ids):],
                                    skip_special_tokens=True).strip()
            sentences.append(text)
        return sentences

    return generate
