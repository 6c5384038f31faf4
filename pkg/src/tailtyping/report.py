"""Report emission: metric tables, per-bin bars, hits-vs-salience scatter,
split-ratio curves and the bin-size histogram.

Figures are vector graphics (SVG) and every figure gets a sibling
tab-separated data table, so downstream checks assert on data rather than
pixels. Identical bundles produce byte-identical files: the SVG hash salt is
pinned and no timestamps are embedded.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import matplotlib
from matplotlib.figure import Figure

from .metrics import MetricBlock, render_metric_text, write_metric_table
from .rankstats import SplitRatioStat

_SVG_RC = {
    "svg.hashsalt": "tailtyping",
    "svg.fonttype": "path",
}


@dataclass
class ReportBundle:
    """Data feeding one report directory; every field is optional."""

    # system name -> (subset, granularity) -> block
    metric_tables: dict[str, dict[tuple[str, str], MetricBlock]] = field(
        default_factory=dict
    )
    # (entity, hits, mean recovery probability)
    scatter: list[tuple[str, int, float]] | None = None
    # system name -> bin index -> overall F1
    bin_f1: dict[str, dict[int, float]] | None = None
    split_curve: Sequence[SplitRatioStat] | None = None
    # (entity, hits, bin index)
    bin_histogram: list[tuple[str, int, int]] | None = None


def _save_figure(fig: Figure, path: Path) -> None:
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})


def _write_tsv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(v) for v in row) + "\n")


def _bar_chart(bin_f1: dict[str, dict[int, float]], path: Path) -> None:
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot(111)
    systems = sorted(bin_f1)
    bins = sorted({b for per in bin_f1.values() for b in per})
    width = 0.8 / max(len(systems), 1)
    for i, system in enumerate(systems):
        xs = [b + (i - (len(systems) - 1) / 2) * width for b in bins]
        ys = [bin_f1[system].get(b, 0.0) for b in bins]
        ax.bar(xs, ys, width=width, label=system)
    ax.set_xticks(bins)
    ax.set_xticklabels([f"Bin {b}" for b in bins])
    ax.set_ylabel("Overall F1")
    ax.set_title("Typing performance across frequency bins")
    ax.legend(fontsize=8)
    _save_figure(fig, path)


def _scatter_chart(
    scatter: list[tuple[str, int, float]], path: Path
) -> int:
    """Log10(hits) on x, mean recovery probability on y. Entities with zero
    hits cannot appear on a log axis; returns how many were skipped."""
    points = [(e, h, p) for e, h, p in scatter if h > 0]
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot(111)
    ax.scatter(
        [math.log10(h) for _, h, _ in points],
        [p for _, _, p in points],
        s=12, alpha=0.7,
    )
    ax.set_xlabel("log10(hits)")
    ax.set_ylabel("mean recovery probability")
    ax.set_title("Entity salience vs. frequency")
    _save_figure(fig, path)
    return len(scatter) - len(points)


def _split_chart(curve: Sequence[SplitRatioStat], path: Path) -> None:
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot(111)
    ax.plot(
        [s.bucket for s in curve],
        [s.mean_probability for s in curve],
        marker="o",
    )
    ax.set_xlabel("tokens per word")
    ax.set_ylabel("mean recovery probability")
    ax.set_title("Recovery probability vs. tokenizer splitting ratio")
    _save_figure(fig, path)


def _histogram_chart(
    histogram: list[tuple[str, int, int]], path: Path
) -> None:
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot(111)
    bins = sorted({b for _, _, b in histogram})
    for b in bins:
        values = [math.log10(h) for _, h, bb in histogram if bb == b and h > 0]
        ax.hist(values, bins=20, alpha=0.6, label=f"Bin {b}")
    ax.set_xlabel("log10(hits)")
    ax.set_ylabel("entities")
    ax.set_title("Entity distribution across frequency bins")
    ax.legend(fontsize=8)
    _save_figure(fig, path)


def emit_report(bundle: ReportBundle, out_dir: str | Path) -> dict:
    """Write every present bundle part and a manifest describing the files.

    Returns the manifest (also written as ``manifest.json``).
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as e:
        raise OSError(f"report directory not writable: {out}: {e}") from e

    manifest: dict = {"figures": [], "tables": [], "metric_tables": [], "notes": {}}

    for system, blocks in sorted(bundle.metric_tables.items()):
        table_path = out / f"metrics_{system}.tsv"
        ordered = [blocks[k] for k in sorted(blocks)]
        write_metric_table(ordered, table_path)
        text_path = out / f"metrics_{system}.txt"
        text_path.write_text(render_metric_text(blocks), encoding="utf-8")
        manifest["metric_tables"] += [table_path.name, text_path.name]

    if bundle.bin_f1 is not None:
        fig_path = out / "bins_f1.svg"
        _bar_chart(bundle.bin_f1, fig_path)
        rows = [
            (system, b, f"{f1:.6g}")
            for system in sorted(bundle.bin_f1)
            for b, f1 in sorted(bundle.bin_f1[system].items())
        ]
        _write_tsv(out / "bins_f1.tsv", ("system", "bin", "overall_f1"), rows)
        manifest["figures"].append(fig_path.name)
        manifest["tables"].append("bins_f1.tsv")

    if bundle.scatter is not None:
        fig_path = out / "salience_scatter.svg"
        skipped = _scatter_chart(bundle.scatter, fig_path)
        rows = [
            (e, h, "NA" if h <= 0 else f"{math.log10(h):.6g}", f"{p:.6g}")
            for e, h, p in sorted(bundle.scatter)
        ]
        _write_tsv(
            out / "salience_scatter.tsv",
            ("entity", "hits", "log10_hits", "mean_probability"),
            rows,
        )
        manifest["figures"].append(fig_path.name)
        manifest["tables"].append("salience_scatter.tsv")
        manifest["notes"]["scatter_zero_hit_entities"] = skipped

    if bundle.split_curve is not None:
        fig_path = out / "split_ratio.svg"
        _split_chart(bundle.split_curve, fig_path)
        rows = [
            (f"{s.bucket:.6g}", f"{s.mean_probability:.6g}", s.count)
            for s in bundle.split_curve
        ]
        _write_tsv(
            out / "split_ratio.tsv",
            ("bucket", "mean_probability", "count"),
            rows,
        )
        manifest["figures"].append(fig_path.name)
        manifest["tables"].append("split_ratio.tsv")

    if bundle.bin_histogram is not None:
        fig_path = out / "bin_distribution.svg"
        _histogram_chart(bundle.bin_histogram, fig_path)
        rows = [
            (e, h, b, "NA" if h <= 0 else f"{math.log10(h):.6g}")
            for e, h, b in sorted(bundle.bin_histogram)
        ]
        _write_tsv(
            out / "bin_distribution.tsv",
            ("entity", "hits", "bin", "log10_hits"),
            rows,
        )
        manifest["figures"].append(fig_path.name)
        manifest["tables"].append("bin_distribution.tsv")

    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest
