"""Stratified typing evaluation (per frequency bin, per label granularity)
and template tuning on the dev split.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .baselines import HearstTemplate, _ranked_label_candidates
from .dataset import (PredictionRecord, TypeVocabulary, TypingExample,
                      normalize_surface)
from .errors import InvariantViolation
from .metrics import (GRANULARITY_VIEWS, SUBSET_FULL, MetricBlock,
                      aggregate_prf, view_pair)
from .rankstats import BinAssignment
from .scorers import Scorer


@dataclass
class EvalResult:
    """All 5 x 4 metric blocks, plus bookkeeping on prediction coverage."""

    blocks: dict[tuple[str, str], MetricBlock]
    missing_predictions: int = 0
    subset_sizes: dict[str, int] = field(default_factory=dict)


def split_runs(
    records: Sequence[PredictionRecord],
) -> dict[str, dict[str, frozenset[str]]]:
    """Group prediction records by run_id, mapping example_id -> labels."""
    runs: dict[str, dict[str, frozenset[str]]] = {}
    for rec in records:
        per_run = runs.setdefault(rec.run_id, {})
        if rec.example_id in per_run:
            raise ValueError(
                f"run {rec.run_id!r} has two records for {rec.example_id!r}"
            )
        per_run[rec.example_id] = rec.predicted_types
    return runs


def stratified_eval(
    dataset: Sequence[TypingExample],
    predictions: Sequence[PredictionRecord] | Mapping[str, frozenset[str]],
    bins: BinAssignment,
    vocab: TypeVocabulary,
) -> EvalResult:
    """Evaluate one run over full-test plus every bin, at every granularity.

    Examples without a prediction record score as empty prediction sets and
    are counted. Every example's entity must have a bin assignment.
    """
    if not dataset:
        raise ValueError("empty dataset")
    if isinstance(predictions, Mapping):
        pred_map = dict(predictions)
    else:
        runs = split_runs(predictions)
        if len(runs) > 1:
            raise ValueError(
                f"predictions span {len(runs)} runs; evaluate one run at a "
                "time (see split_runs)"
            )
        pred_map = next(iter(runs.values())) if runs else {}

    missing = 0
    subsets: dict[str, list[tuple[frozenset[str], frozenset[str]]]] = {
        SUBSET_FULL: []
    }
    for ex in dataset:
        pred = pred_map.get(ex.example_id)
        if pred is None:
            pred = frozenset()
            missing += 1
        bin_index = bins.bin_of(ex.surface)
        pair = (pred, ex.gold_types)
        subsets[SUBSET_FULL].append(pair)
        subsets.setdefault(f"bin-{bin_index}", []).append(pair)

    bin_total = sum(len(v) for s, v in subsets.items() if s != SUBSET_FULL)
    if bin_total != len(subsets[SUBSET_FULL]):
        raise InvariantViolation(
            f"bin subsets hold {bin_total} examples, full set has "
            f"{len(subsets[SUBSET_FULL])}"
        )

    blocks: dict[tuple[str, str], MetricBlock] = {}
    for subset_name in [SUBSET_FULL] + [f"bin-{b}" for b in range(1, bins.k + 1)]:
        pairs = subsets.get(subset_name, [])
        if not pairs:
            raise ValueError(f"subset {subset_name!r} has no examples")
        for view in GRANULARITY_VIEWS:
            view_pairs = [view_pair(pred, gold, vocab, view)
                          for pred, gold in pairs]
            blocks[(subset_name, view)] = aggregate_prf(
                view_pairs, subset=subset_name, granularity=view
            )
    return EvalResult(
        blocks=blocks,
        missing_predictions=missing,
        subset_sizes={s: len(v) for s, v in subsets.items()},
    )


def bin_example_counts(
    dataset: Sequence[TypingExample], bins: BinAssignment
) -> dict[int, int]:
    """Examples per bin; every example inherits its entity's bin."""
    counts = {b: 0 for b in range(1, bins.k + 1)}
    for ex in dataset:
        counts[bins.bin_of(ex.surface)] += 1
    return counts


@dataclass(frozen=True)
class TuneCell:
    template: HearstTemplate
    n: int
    f1: float


@dataclass(frozen=True)
class TuneResult:
    best: TuneCell
    grid: tuple[TuneCell, ...]


def tune_hearst(
    dev: Sequence[TypingExample],
    templates: Sequence[HearstTemplate],
    n_values: Sequence[int],
    scorer: Scorer,
    vocab: TypeVocabulary,
) -> TuneResult:
    """Exhaustive (template, n) grid on the dev split, maximizing overall F1.

    Ties break toward the smaller n, then earlier template. Candidates are
    fetched once per (example, template) and re-cut for each n.
    """
    if not templates or not n_values:
        raise ValueError("empty tuning grid")
    if not dev:
        raise ValueError("empty dev split")
    n_values = sorted(set(n_values))
    max_n = n_values[-1]

    cells: list[TuneCell] = []
    for template in templates:
        ranked = [
            _ranked_label_candidates(ex, template, scorer, vocab, max_n)
            for ex in dev
        ]
        for n in n_values:
            pairs = []
            for ex, labels in zip(dev, ranked):
                pred = frozenset(labels[:n])
                pairs.append(view_pair(pred, ex.gold_types, vocab, "overall"))
            block = aggregate_prf(pairs)
            cells.append(TuneCell(template=template, n=n, f1=block.f1))

    template_order = {id(t): i for i, t in enumerate(templates)}
    best = min(
        cells,
        key=lambda c: (-c.f1, c.n, template_order[id(c.template)]),
    )
    return TuneResult(best=best, grid=tuple(cells))
