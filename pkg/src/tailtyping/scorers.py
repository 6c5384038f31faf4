"""Scorer abstraction plus deterministic stub scorers for offline testing.

A scorer owns tokenization and conditional token log-probabilities; the rest
of the toolkit never guesses token boundaries. Real models sit behind the
wire protocol client in :mod:`tailtyping.protocol`; the stubs here exercise
the full scoring math without any model.

Masked slots in a token-id sequence are represented by the sentinel id
``MASK_SLOT`` (-1); a scorer substitutes its own mask token for every
negative id before scoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence, runtime_checkable

MASK_SLOT = -1

CAP_MLM = "mlm"
CAP_CAUSAL = "causal"


@dataclass(frozen=True)
class TokenizedText:
    ids: tuple[int, ...]
    strings: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.ids) != len(self.strings):
            raise ValueError("ids and strings must align")

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class Candidate:
    token_id: int
    token: str
    logprob: float


@runtime_checkable
class Scorer(Protocol):
    """Capability descriptor plus tokenize/score operations."""

    capabilities: frozenset[str]
    vocab_size: int
    model_id: str

    def tokenize(self, text: str) -> TokenizedText: ...

    def score_mlm(
        self, token_ids: Sequence[int], mask_position: int, target_id: int
    ) -> float: ...

    def score_causal(self, prefix_ids: Sequence[int], target_id: int) -> float: ...

    def mlm_candidates(
        self, token_ids: Sequence[int], mask_position: int, top_m: int
    ) -> list[Candidate]: ...


def check_logprob(lp: float, source: str) -> float:
    if not math.isfinite(lp) or lp > 0.0:
        raise ValueError(f"{source} returned invalid log-probability {lp}")
    return lp


class _WordTokenizer:
    """Whitespace tokenizer with ids assigned on first sight.

    Deterministic within one scorer instance, which is all the stub scorers
    promise.
    """

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}
        self._words: list[str] = []

    def encode(self, text: str) -> TokenizedText:
        words = text.split()
        ids = []
        for w in words:
            if w not in self._ids:
                self._ids[w] = len(self._words)
                self._words.append(w)
            ids.append(self._ids[w])
        return TokenizedText(ids=tuple(ids), strings=tuple(words))

    def word(self, token_id: int) -> str:
        if token_id == MASK_SLOT:
            return "[MASK]"
        return self._words[token_id]


class _StubScorerBase:
    """Shared plumbing: word tokenizer and context extraction."""

    capabilities: frozenset[str] = frozenset({CAP_MLM, CAP_CAUSAL})
    model_id = "stub"

    def __init__(self) -> None:
        self._tok = _WordTokenizer()

    def tokenize(self, text: str) -> TokenizedText:
        return self._tok.encode(text)

    def _word(self, token_id: int) -> str:
        return self._tok.word(token_id)

    def _logprob(self, prev: str | None, target: str) -> float:
        raise NotImplementedError

    def score_mlm(
        self, token_ids: Sequence[int], mask_position: int, target_id: int
    ) -> float:
        if not (0 <= mask_position < len(token_ids)):
            raise ValueError(f"mask_position {mask_position} out of range")
        prev = None
        if mask_position > 0 and token_ids[mask_position - 1] >= 0:
            prev = self._word(token_ids[mask_position - 1])
        return check_logprob(self._logprob(prev, self._word(target_id)),
                             type(self).__name__)

    def score_causal(self, prefix_ids: Sequence[int], target_id: int) -> float:
        prev = self._word(prefix_ids[-1]) if prefix_ids else None
        return check_logprob(self._logprob(prev, self._word(target_id)),
                             type(self).__name__)

    def mlm_candidates(
        self, token_ids: Sequence[int], mask_position: int, top_m: int
    ) -> list[Candidate]:
        prev = None
        if mask_position > 0 and token_ids[mask_position - 1] >= 0:
            prev = self._word(token_ids[mask_position - 1])
        ranked = sorted(
            self._candidate_words(),
            key=lambda w: (-self._logprob(prev, w), w),
        )[:top_m]
        out = []
        for w in ranked:
            tid = self._tok.encode(w).ids[0]
            out.append(Candidate(tid, w, self._logprob(prev, w)))
        return out

    def _candidate_words(self) -> Iterable[str]:
        raise NotImplementedError


class UniformScorer(_StubScorerBase):
    """Every conditional probability is exactly 1/vocab_size."""

    def __init__(self, vocab_size: int, capabilities: Iterable[str] = (CAP_MLM, CAP_CAUSAL)):
        super().__init__()
        if vocab_size < 1:
            raise ValueError("vocab_size must be positive")
        self.vocab_size = vocab_size
        self.capabilities = frozenset(capabilities)
        self.model_id = f"uniform-{vocab_size}"

    def _logprob(self, prev: str | None, target: str) -> float:
        return -math.log(self.vocab_size)

    def _candidate_words(self) -> Iterable[str]:
        return list(self._tok._words)


class TableScorer(_StubScorerBase):
    """Explicit probabilities: ``probs`` keys a token's unconditional
    probability; ``cond`` overrides it for a (previous token, token) pair."""

    def __init__(
        self,
        probs: dict[str, float],
        cond: dict[tuple[str, str], float] | None = None,
        vocab_size: int | None = None,
        default: float | None = None,
    ):
        super().__init__()
        for table in (probs, cond or {}):
            for key, p in table.items():
                if not (0.0 < p <= 1.0):
                    raise ValueError(f"probability out of (0, 1]: {key} -> {p}")
        self.probs = dict(probs)
        self.cond = dict(cond or {})
        self.vocab_size = vocab_size if vocab_size is not None else max(16, len(probs))
        self.default = default
        self.model_id = "table"

    def _logprob(self, prev: str | None, target: str) -> float:
        p = None
        if prev is not None:
            p = self.cond.get((prev, target))
        if p is None:
            p = self.probs.get(target, self.default)
        if p is None:
            raise KeyError(f"no probability for token {target!r} (prev={prev!r})")
        return math.log(p)

    def _candidate_words(self) -> Iterable[str]:
        return list(self.probs)


class BigramScorer(_StubScorerBase):
    """Add-one-smoothed bigram model over a tiny plain-text corpus.

    P(t | prev) = (count(prev, t) + 1) / (count(prev) + V) with V the corpus
    vocabulary size; unseen words simply fall back to the smoothing mass.
    """

    def __init__(self, corpus_text: str):
        super().__init__()
        words = corpus_text.split()
        if not words:
            raise ValueError("bigram corpus is empty")
        self._unigrams: dict[str, int] = {}
        self._bigrams: dict[tuple[str, str], int] = {}
        for i, w in enumerate(words):
            self._unigrams[w] = self._unigrams.get(w, 0) + 1
            if i + 1 < len(words):
                key = (w, words[i + 1])
                self._bigrams[key] = self._bigrams.get(key, 0) + 1
        self.vocab_size = len(self._unigrams)
        self._total = len(words)
        self.model_id = f"bigram-{self.vocab_size}"
        self._tok.encode(" ".join(self._unigrams))

    def _logprob(self, prev: str | None, target: str) -> float:
        v = self.vocab_size
        if prev is None:
            num = self._unigrams.get(target, 0) + 1
            den = self._total + v
        else:
            num = self._bigrams.get((prev, target), 0) + 1
            den = self._unigrams.get(prev, 0) + v
        return math.log(num) - math.log(den)

    def _candidate_words(self) -> Iterable[str]:
        return list(self._unigrams)
