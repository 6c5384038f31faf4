"""Domain types and file ingestion for typing datasets, type vocabularies,
prediction files, and frequency snapshots.

All readers consume line-delimited records so multi-gigabyte files can be
streamed. Loaded values are immutable and safe to share between workers;
the loaders themselves hold no state and are reentrant.

Line formats
------------
* dataset (``ufet-jsonl`` / ``ontonotes-jsonl``): one JSON object per line
  with fields ``ex_id``, ``mention_span``, ``left_context_token``,
  ``right_context_token``, ``y_str``.
* predictions: one JSON object per line with ``ex_id``, ``run_id``,
  ``predicted_types``.
* vocabulary: UTF-8, one label per line; granularity map ``label<TAB>class``.
* frequency snapshot: ``entity<TAB>source<TAB>snapshot<TAB>hits``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import InputFormatError

GRANULARITY_CLASSES = ("coarse", "fine", "ultrafine")

DATASET_FORMATS = ("ufet-jsonl", "ontonotes-jsonl")

_WS = re.compile(r"\s+")


def normalize_surface(mention: str) -> str:
    """Canonical surface form used as the frequency-lookup key.

    Internal whitespace collapses to single spaces; case is preserved so
    exact-phrase counts stay reproducible.
    """
    return _WS.sub(" ", mention.strip())


@dataclass(frozen=True)
class TypingExample:
    """One entity mention with its context tokens and gold type labels."""

    example_id: str
    mention_span: str
    left_context: tuple[str, ...]
    right_context: tuple[str, ...]
    gold_types: frozenset[str]

    def __post_init__(self) -> None:
        if not self.mention_span:
            raise ValueError(f"example {self.example_id!r}: empty mention_span")

    @property
    def surface(self) -> str:
        return normalize_surface(self.mention_span)

    def sentence(self, mark_entity: bool = False) -> str:
        """Render the full sentence; optionally wrap the mention in
        ``<ENT> ... </ENT>`` tags."""
        mention = self.mention_span
        if mark_entity:
            mention = f"<ENT> {mention} </ENT>"
        parts = [" ".join(self.left_context), mention, " ".join(self.right_context)]
        return " ".join(p for p in parts if p)


@dataclass(frozen=True)
class TypeVocabulary:
    """The label set plus its coarse/fine/ultrafine partition."""

    labels: frozenset[str]
    granularity: dict[str, str]

    def __post_init__(self) -> None:
        mapped = set(self.granularity)
        if mapped != set(self.labels):
            missing = sorted(set(self.labels) - mapped)[:5]
            extra = sorted(mapped - set(self.labels))[:5]
            raise ValueError(
                f"granularity map does not partition the label set "
                f"(missing={missing}, extra={extra})"
            )
        bad = {c for c in self.granularity.values() if c not in GRANULARITY_CLASSES}
        if bad:
            raise ValueError(f"unknown granularity classes: {sorted(bad)}")

    def labels_of(self, granularity_class: str) -> frozenset[str]:
        if granularity_class not in GRANULARITY_CLASSES:
            raise ValueError(f"unknown granularity class {granularity_class!r}")
        return frozenset(
            l for l, c in self.granularity.items() if c == granularity_class
        )

    def class_sizes(self) -> dict[str, int]:
        sizes = {c: 0 for c in GRANULARITY_CLASSES}
        for c in self.granularity.values():
            sizes[c] += 1
        return sizes

    def __contains__(self, label: str) -> bool:
        return label in self.labels


@dataclass(frozen=True)
class FrequencyRecord:
    """An entity surface form with a hit count from one source snapshot."""

    entity: str
    source: str
    snapshot: str
    hits: int

    def __post_init__(self) -> None:
        if self.hits < 0:
            raise ValueError(f"negative hit count for {self.entity!r}: {self.hits}")


@dataclass(frozen=True)
class PredictionRecord:
    """Predicted labels for one example from one run of an external system."""

    example_id: str
    predicted_types: frozenset[str]
    run_id: str = "run-0"


@dataclass(frozen=True)
class ContextSet:
    """Sentences that each contain the target entity verbatim exactly once."""

    entity: str
    sentences: tuple[str, ...]

    def __post_init__(self) -> None:
        for s in self.sentences:
            n = s.count(self.entity)
            if n != 1:
                raise ValueError(
                    f"context must contain {self.entity!r} exactly once, "
                    f"found {n}: {s!r}"
                )


@dataclass
class LineError:
    line_number: int
    message: str


@dataclass
class DatasetLoadResult:
    examples: list[TypingExample]
    errors: list[LineError] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.examples)


@dataclass
class PredictionLoadResult:
    records: list[PredictionRecord]
    dropped_labels: int = 0
    warnings: list[LineError] = field(default_factory=list)


def _iter_lines(path: Path) -> Iterable[tuple[int, str]]:
    if not path.exists():
        raise InputFormatError(f"no such file: {path}")
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if line.strip():
                yield lineno, line


def load_dataset(path: str | Path, format: str = "ufet-jsonl") -> DatasetLoadResult:
    """Load typing examples from a jsonl file.

    Malformed lines and duplicate example ids are collected into the error
    report instead of being dropped silently; well-formed lines are kept in
    file order.
    """
    if format not in DATASET_FORMATS:
        raise InputFormatError(f"unknown dataset format {format!r}")
    result = DatasetLoadResult(examples=[])
    seen_ids: set[str] = set()
    for lineno, line in _iter_lines(Path(path)):
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as e:
            result.errors.append(LineError(lineno, f"invalid JSON: {e.msg}"))
            continue
        try:
            example = _parse_example(raw)
        except (KeyError, TypeError, ValueError) as e:
            result.errors.append(LineError(lineno, str(e)))
            continue
        if example.example_id in seen_ids:
            result.errors.append(
                LineError(lineno, f"duplicate example_id {example.example_id!r}")
            )
            continue
        seen_ids.add(example.example_id)
        result.examples.append(example)
    return result


def _parse_example(raw: dict) -> TypingExample:
    for key in ("ex_id", "mention_span", "left_context_token",
                "right_context_token", "y_str"):
        if key not in raw:
            raise KeyError(f"missing field {key!r}")
    return TypingExample(
        example_id=str(raw["ex_id"]),
        mention_span=str(raw["mention_span"]),
        left_context=tuple(str(t) for t in raw["left_context_token"]),
        right_context=tuple(str(t) for t in raw["right_context_token"]),
        gold_types=frozenset(str(t) for t in raw["y_str"]),
    )


def dump_dataset(examples: Iterable[TypingExample], path: str | Path) -> None:
    """Write examples back out in the dataset line format (round-trips with
    :func:`load_dataset`)."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps({
                "ex_id": ex.example_id,
                "mention_span": ex.mention_span,
                "left_context_token": list(ex.left_context),
                "right_context_token": list(ex.right_context),
                "y_str": sorted(ex.gold_types),
            }, ensure_ascii=False) + "\n")


def load_type_vocabulary(
    path: str | Path, granularity_map_path: str | Path
) -> TypeVocabulary:
    """Load a label file (one label per line) and its granularity map."""
    labels: list[str] = []
    seen: set[str] = set()
    for lineno, line in _iter_lines(Path(path)):
        label = line.strip()
        if label in seen:
            raise InputFormatError(f"{path}:{lineno}: duplicate label {label!r}")
        seen.add(label)
        labels.append(label)

    granularity: dict[str, str] = {}
    for lineno, line in _iter_lines(Path(granularity_map_path)):
        parts = line.split("\t")
        if len(parts) != 2:
            raise InputFormatError(
                f"{granularity_map_path}:{lineno}: expected label<TAB>class"
            )
        label, cls = parts[0].strip(), parts[1].strip()
        if cls not in GRANULARITY_CLASSES:
            raise InputFormatError(
                f"{granularity_map_path}:{lineno}: unknown class {cls!r}"
            )
        granularity[label] = cls

    unmapped = [l for l in labels if l not in granularity]
    if unmapped:
        raise InputFormatError(
            f"labels without a granularity class: {unmapped[:10]}"
            + (" ..." if len(unmapped) > 10 else "")
        )
    granularity = {l: granularity[l] for l in labels}
    return TypeVocabulary(labels=frozenset(labels), granularity=granularity)


def load_predictions(
    path: str | Path,
    vocab: TypeVocabulary,
    known_ids: set[str] | None = None,
) -> PredictionLoadResult:
    """Load prediction records, dropping out-of-vocabulary labels.

    Every dropped label is counted; when ``known_ids`` is given, records for
    unknown example ids are excluded with a per-line warning so partial model
    outputs still score. Unreadable files raise.
    """
    result = PredictionLoadResult(records=[])
    for lineno, line in _iter_lines(Path(path)):
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as e:
            raise InputFormatError(f"{path}:{lineno}: invalid JSON: {e.msg}") from e
        try:
            ex_id = str(raw["ex_id"])
            run_id = str(raw.get("run_id", "run-0"))
            predicted = [str(t) for t in raw["predicted_types"]]
        except (KeyError, TypeError) as e:
            raise InputFormatError(f"{path}:{lineno}: {e}") from e
        kept = frozenset(t for t in predicted if t in vocab)
        dropped = [t for t in predicted if t not in vocab]
        if dropped:
            result.dropped_labels += len(dropped)
            result.warnings.append(
                LineError(lineno, f"dropped out-of-vocabulary labels: {sorted(set(dropped))}")
            )
        if known_ids is not None and ex_id not in known_ids:
            result.warnings.append(
                LineError(lineno, f"unknown example_id {ex_id!r}; record skipped")
            )
            continue
        result.records.append(
            PredictionRecord(example_id=ex_id, predicted_types=kept, run_id=run_id)
        )
    return result


def dump_predictions(records: Iterable[PredictionRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({
                "ex_id": rec.example_id,
                "run_id": rec.run_id,
                "predicted_types": sorted(rec.predicted_types),
            }, ensure_ascii=False) + "\n")


def load_frequency_records(path: str | Path) -> list[FrequencyRecord]:
    """Read a ``entity<TAB>source<TAB>snapshot<TAB>hits`` snapshot file."""
    records: list[FrequencyRecord] = []
    seen: set[tuple[str, str, str]] = set()
    for lineno, line in _iter_lines(Path(path)):
        parts = line.split("\t")
        if len(parts) != 4:
            raise InputFormatError(
                f"{path}:{lineno}: expected entity<TAB>source<TAB>snapshot<TAB>hits"
            )
        entity, source, snapshot, hits_s = parts
        try:
            hits = int(hits_s)
        except ValueError:
            raise InputFormatError(f"{path}:{lineno}: hits must be an integer")
        key = (entity, source, snapshot)
        if key in seen:
            raise InputFormatError(f"{path}:{lineno}: duplicate key {key}")
        seen.add(key)
        try:
            records.append(FrequencyRecord(entity, source, snapshot, hits))
        except ValueError as e:
            raise InputFormatError(f"{path}:{lineno}: {e}") from e
    return records


def dump_frequency_records(
    records: Iterable[FrequencyRecord], path: str | Path
) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(f"{rec.entity}\t{rec.source}\t{rec.snapshot}\t{rec.hits}\n")
