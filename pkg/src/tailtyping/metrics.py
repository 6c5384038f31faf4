"""Multi-label precision/recall/F1 primitives.

Metrics follow the macro-averaged convention used by ultra-fine typing
benchmarks: precision is averaged over examples with a non-empty prediction
set, recall over examples with non-empty gold, and F1 is the harmonic mean
of the two aggregates. Values are reported on a 0-100 scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .dataset import GRANULARITY_CLASSES, TypeVocabulary

SUBSET_FULL = "full-test"
GRANULARITY_VIEWS = ("overall",) + GRANULARITY_CLASSES


@dataclass(frozen=True)
class MetricBlock:
    """P/R/F1 (0-100) for one (subset, granularity) cell.

    ``precision`` or ``recall`` is None when no example defines it (e.g. all
    prediction sets empty). Sigmas are populated only by multi-run
    aggregation. ``n_p`` / ``n_r`` are the example counts behind the P and R
    means.
    """

    subset: str
    granularity: str
    precision: float | None
    recall: float | None
    f1: float
    sigma_p: float | None = None
    sigma_r: float | None = None
    sigma_f1: float | None = None
    n_p: int = 0
    n_r: int = 0

    def __post_init__(self) -> None:
        for name, value in (("precision", self.precision),
                            ("recall", self.recall), ("f1", self.f1)):
            if value is not None and not (0.0 <= value <= 100.0):
                raise ValueError(f"{name} out of [0, 100]: {value}")


def example_prf(
    pred: Iterable[str], gold: Iterable[str]
) -> tuple[float | None, float]:
    """Per-example precision and recall as fractions.

    Precision is None (undefined) for an empty prediction set; gold must be
    non-empty.
    """
    pred, gold = set(pred), set(gold)
    if not gold:
        raise ValueError("gold label set must be non-empty")
    hit = len(pred & gold)
    p = hit / len(pred) if pred else None
    r = hit / len(gold)
    return p, r


def f1_of(p: float | None, r: float | None) -> float:
    if p is None or r is None or p + r <= 0:
        return 0.0
    return 2.0 * p * r / (p + r)


def aggregate_prf(
    pairs: Sequence[tuple[float | None, float | None]],
    subset: str = SUBSET_FULL,
    granularity: str = "overall",
) -> MetricBlock:
    """Aggregate per-example (p, r) pairs into one block.

    Undefined entries (None) are excluded from their mean but counted via
    ``n_p`` / ``n_r``. F1 is computed from the aggregated P and R.
    """
    if not pairs:
        raise ValueError("cannot aggregate zero examples")
    ps = [p for p, _ in pairs if p is not None]
    rs = [r for _, r in pairs if r is not None]
    precision = 100.0 * sum(ps) / len(ps) if ps else None
    recall = 100.0 * sum(rs) / len(rs) if rs else None
    return MetricBlock(
        subset=subset,
        granularity=granularity,
        precision=precision,
        recall=recall,
        f1=f1_of(precision, recall),
        n_p=len(ps),
        n_r=len(rs),
    )


def granularity_view(
    labels: Iterable[str], vocab: TypeVocabulary, view: str
) -> frozenset[str]:
    """Restrict a label set to one granularity class; ``overall`` keeps all."""
    labels = frozenset(labels)
    unknown = labels - vocab.labels
    if unknown:
        raise ValueError(f"labels outside the vocabulary: {sorted(unknown)[:5]}")
    if view == "overall":
        return labels
    return labels & vocab.labels_of(view)


def view_pair(
    pred: Iterable[str],
    gold: Iterable[str],
    vocab: TypeVocabulary,
    view: str,
) -> tuple[float | None, float | None]:
    """Per-example (p, r) under a granularity view.

    An example with no gold labels in the view contributes no recall; one
    with no predicted labels in the view contributes no precision.
    """
    p_view = granularity_view(pred, vocab, view)
    g_view = granularity_view(gold, vocab, view)
    hit = len(p_view & g_view)
    p = hit / len(p_view) if p_view else None
    r = hit / len(g_view) if g_view else None
    return p, r


def format_metric_value(value: float | None) -> str:
    return "NA" if value is None else repr(value)


def _parse_metric_value(text: str) -> float | None:
    return None if text == "NA" else float(text)


METRIC_TABLE_HEADER = (
    "subset\tgranularity\tP\tR\tF1\tsigmaP\tsigmaR\tsigmaF1\tnP\tnR"
)


def write_metric_table(blocks: Iterable[MetricBlock], path) -> None:
    """Write the tab-separated machine-readable metric table."""
    from pathlib import Path

    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(METRIC_TABLE_HEADER + "\n")
        for b in blocks:
            fields = [
                b.subset, b.granularity,
                format_metric_value(b.precision),
                format_metric_value(b.recall),
                format_metric_value(b.f1),
                format_metric_value(b.sigma_p),
                format_metric_value(b.sigma_r),
                format_metric_value(b.sigma_f1),
                str(b.n_p), str(b.n_r),
            ]
            fh.write("\t".join(fields) + "\n")


def read_metric_table(path) -> list[MetricBlock]:
    from pathlib import Path

    from .errors import InputFormatError

    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != METRIC_TABLE_HEADER:
        raise InputFormatError(f"{path}: missing metric table header")
    blocks = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 10:
            raise InputFormatError(f"{path}:{lineno}: expected 10 columns")
        blocks.append(MetricBlock(
            subset=parts[0],
            granularity=parts[1],
            precision=_parse_metric_value(parts[2]),
            recall=_parse_metric_value(parts[3]),
            f1=float(parts[4]),
            sigma_p=_parse_metric_value(parts[5]),
            sigma_r=_parse_metric_value(parts[6]),
            sigma_f1=_parse_metric_value(parts[7]),
            n_p=int(parts[8]),
            n_r=int(parts[9]),
        ))
    return blocks


def render_metric_text(blocks: dict[tuple[str, str], MetricBlock]) -> str:
    """Human-readable table: one row per subset, P/R/F1 per granularity."""
    subsets = sorted({s for s, _ in blocks}, key=_subset_order)

    def cell(b: MetricBlock | None, attr: str) -> str:
        if b is None:
            return "-"
        value = getattr(b, attr)
        if value is None:
            return "NA"
        sigma = getattr(b, "sigma_" + ("p" if attr == "precision"
                                       else "r" if attr == "recall" else "f1"))
        return f"{value:.1f}" + (f"±{sigma:.1f}" if sigma is not None else "")

    header = ["Subset"]
    for view in GRANULARITY_VIEWS:
        header += [f"{view}.P", f"{view}.R", f"{view}.F1"]
    rows = [header]
    for subset in subsets:
        row = [subset]
        for view in GRANULARITY_VIEWS:
            b = blocks.get((subset, view))
            row += [cell(b, "precision"), cell(b, "recall"), cell(b, "f1")]
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip()
             for r in rows]
    return "\n".join(lines) + "\n"


def _subset_order(subset: str) -> tuple[int, str]:
    return (0, "") if subset == SUBSET_FULL else (1, subset)
