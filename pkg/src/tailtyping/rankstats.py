"""Rank statistics: quartile binning, Spearman correlation with tied ranks,
token-splitting ratios, and multi-run mean/stddev aggregation.

Everything here is a pure function over immutable inputs. Binning and
correlation work on average ranks, so both are invariant under strictly
increasing transforms of the raw values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .dataset import FrequencyRecord, normalize_surface
from .errors import InputFormatError
from .metrics import MetricBlock


# ---------------------------------------------------------------------------
# ranks and correlation


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks, ties replaced by the mean rank of their group."""
    n = len(values)
    order = sorted(range(n), key=values.__getitem__)
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Spearman's rho: Pearson correlation of the tie-averaged rank vectors.

    Returns None when either rank vector has zero variance (rho undefined).
    Identical and exactly-opposed rank vectors short-circuit to +/-1.0 so the
    defining identities hold without floating-point slack.
    """
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two observations")
    for seq in (x, y):
        if any(v != v for v in seq):
            raise ValueError("missing values (NaN) are not allowed")

    rx = average_ranks(x)
    ry = average_ranks(y)
    if all(r == rx[0] for r in rx) or all(r == ry[0] for r in ry):
        return None
    if rx == ry:
        return 1.0
    if all(a == (n + 1) - b for a, b in zip(rx, ry)):
        return -1.0

    mean = (n + 1) / 2.0  # rank sums are n(n+1)/2 by construction
    num = sx = sy = 0.0
    for a, b in zip(rx, ry):
        da = a - mean
        db = b - mean
        num += da * db
        sx += da * da
        sy += db * db
    rho = num / (math.sqrt(sx) * math.sqrt(sy))
    return max(-1.0, min(1.0, rho))


# ---------------------------------------------------------------------------
# frequency bins


@dataclass(frozen=True)
class BinAssignment:
    """Entity -> bin index (1 = rarest .. k = most frequent) plus the k-1
    frequency thresholds the assignment was derived from."""

    bins: dict[str, int]
    thresholds: tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.thresholds) + 1

    def bin_of(self, entity: str) -> int:
        try:
            return self.bins[entity]
        except KeyError:
            raise KeyError(f"no bin assignment for entity {entity!r}") from None

    def unique_counts(self) -> dict[int, int]:
        counts = {b: 0 for b in range(1, self.k + 1)}
        for b in self.bins.values():
            counts[b] += 1
        return counts


def _percentile_linear(sorted_values: Sequence[float], q: float) -> float:
    """Empirical percentile with linear interpolation between order stats."""
    n = len(sorted_values)
    pos = q * (n - 1)
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return float(sorted_values[lo])
    frac = pos - lo
    return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo])


def assign_bins(records: Sequence[FrequencyRecord], k: int = 4) -> BinAssignment:
    """Quartile-style binning of unique entities by hit count.

    Thresholds sit at the i/k empirical percentiles of the hit distribution;
    an entity lands in bin 1 + (number of thresholds its hits exceed), so a
    tie group always shares the lower (rarer) bin.
    """
    if k < 2:
        raise ValueError(f"bin count must be >= 2, got {k}")
    seen: set[str] = set()
    hits_by_entity: dict[str, int] = {}
    for rec in records:
        if rec.entity in seen:
            raise ValueError(f"duplicate entity in frequency records: {rec.entity!r}")
        seen.add(rec.entity)
        if rec.hits < 0:
            raise ValueError(f"negative hits for {rec.entity!r}")
        hits_by_entity[rec.entity] = rec.hits
    if len(hits_by_entity) < k:
        raise ValueError(
            f"need at least {k} unique entities, got {len(hits_by_entity)}"
        )

    ordered = sorted(hits_by_entity.values())
    thresholds = tuple(_percentile_linear(ordered, i / k) for i in range(1, k))
    bins = {
        entity: 1 + sum(1 for t in thresholds if hits > t)
        for entity, hits in hits_by_entity.items()
    }
    return BinAssignment(bins=bins, thresholds=thresholds)


def dump_bin_assignment(assignment: BinAssignment, path: str | Path) -> None:
    """Write ``entity<TAB>bin`` plus a ``.meta.json`` threshold sidecar."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for entity in sorted(assignment.bins):
            fh.write(f"{entity}\t{assignment.bins[entity]}\n")
    meta = {"k": assignment.k, "thresholds": list(assignment.thresholds)}
    Path(str(path) + ".meta.json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8"
    )


def load_bin_assignment(path: str | Path) -> BinAssignment:
    path = Path(path)
    meta_path = Path(str(path) + ".meta.json")
    if not path.exists() or not meta_path.exists():
        raise InputFormatError(f"bin assignment needs {path} and {meta_path}")
    bins: dict[str, int] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise InputFormatError(f"{path}:{lineno}: expected entity<TAB>bin")
        bins[parts[0]] = int(parts[1])
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    return BinAssignment(bins=bins, thresholds=tuple(meta["thresholds"]))


# ---------------------------------------------------------------------------
# tokenizer splitting ratio


@dataclass(frozen=True)
class SplitRatioStat:
    """Mean recovery probability for entities whose tokens-per-word ratio
    falls in one rounded bucket."""

    bucket: float
    mean_probability: float
    count: int


def split_ratio(entity: str, token_count: int) -> float:
    """Tokens-per-word ratio for an entity under some tokenizer."""
    words = normalize_surface(entity).split(" ")
    word_count = len([w for w in words if w])
    if word_count < 1:
        raise ValueError(f"entity has no words: {entity!r}")
    if token_count < 1:
        raise ValueError(f"token count must be >= 1, got {token_count}")
    if token_count < word_count:
        raise ValueError(
            f"{token_count} tokens for {word_count} words: supported tokenizers "
            "never merge across whitespace"
        )
    return token_count / word_count


def split_ratio_curve(
    points: Iterable[tuple[float, float]], bucket_width: float = 0.5
) -> list[SplitRatioStat]:
    """Group (ratio, recovery probability) points into rounded-ratio buckets."""
    if bucket_width <= 0:
        raise ValueError("bucket width must be positive")
    sums: dict[float, list[float]] = {}
    for ratio, prob in points:
        bucket = round(round(ratio / bucket_width) * bucket_width, 9)
        sums.setdefault(bucket, []).append(prob)
    return [
        SplitRatioStat(bucket=b, mean_probability=sum(v) / len(v), count=len(v))
        for b, v in sorted(sums.items())
    ]


# ---------------------------------------------------------------------------
# multi-run aggregation


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def aggregate_runs(
    runs: Sequence[Mapping[tuple[str, str], MetricBlock]],
) -> dict[tuple[str, str], MetricBlock]:
    """Mean and sample stddev per metric across runs.

    Every run must carry the same (subset, granularity) keys. Each of P, R
    and F1 is averaged independently; sigma is 0 for a single run. A metric
    undefined in any run stays undefined in the aggregate.
    """
    if not runs:
        raise ValueError("need at least one run")
    keys = set(runs[0])
    for i, run in enumerate(runs[1:], start=2):
        if set(run) != keys:
            diff = sorted(keys.symmetric_difference(run))[:5]
            raise ValueError(f"run {i} has mismatched keys, e.g. {diff}")

    out: dict[tuple[str, str], MetricBlock] = {}
    for key in keys:
        blocks = [run[key] for run in runs]
        stats: dict[str, tuple[float | None, float | None]] = {}
        for attr in ("precision", "recall", "f1"):
            values = [getattr(b, attr) for b in blocks]
            if any(v is None for v in values):
                stats[attr] = (None, None)
            else:
                stats[attr] = _mean_std(values)
        subset, granularity = key
        out[key] = MetricBlock(
            subset=subset,
            granularity=granularity,
            precision=stats["precision"][0],
            recall=stats["recall"][0],
            f1=stats["f1"][0] if stats["f1"][0] is not None else 0.0,
            sigma_p=stats["precision"][1],
            sigma_r=stats["recall"][1],
            sigma_f1=stats["f1"][1],
            n_p=blocks[0].n_p,
            n_r=blocks[0].n_r,
        )
    return out
