"""Command-line interface.

Verb groups mirror the pipeline: ``freq`` (corpus counting and search-API
fetching), ``bins``, ``stats``, ``salience``, ``baseline``, ``eval``,
``tune-hearst`` and ``report``.

Exit codes: 0 success, 2 input-format error, 3 protocol/transport error,
4 violated internal invariant.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

from . import baselines, corpus, dataset, evaluation, metrics, rankstats
from . import recovery, report, search
from .errors import (InputFormatError, InvariantViolation, ProtocolError,
                     TransportError)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_TRANSPORT = 3
EXIT_INVARIANT = 4


def _build_scorer(spec: str):
    """Scorer factory: ``uniform:V``, ``bigram:PATH``, ``table:PATH``,
    ``stdio:CMD`` or ``http:URL``."""
    from . import protocol, scorers

    kind, _, arg = spec.partition(":")
    if kind == "uniform":
        return scorers.UniformScorer(int(arg))
    if kind == "bigram":
        return scorers.BigramScorer(Path(arg).read_text(encoding="utf-8"))
    if kind == "table":
        payload = json.loads(Path(arg).read_text(encoding="utf-8"))
        cond = {(p, t): v for p, t, v in payload.get("cond", [])}
        return scorers.TableScorer(
            payload["probs"], cond=cond,
            vocab_size=payload.get("vocab_size"),
            default=payload.get("default"),
        )
    if kind == "stdio":
        return protocol.StdioScorerClient(shlex.split(arg))
    if kind == "http" or spec.startswith("http://") or spec.startswith("https://"):
        url = spec if spec.startswith("http") else arg
        return protocol.HttpScorerClient(url)
    raise InputFormatError(f"unknown scorer spec {spec!r}")


def _load_vocab(args) -> dataset.TypeVocabulary:
    return dataset.load_type_vocabulary(args.vocab, args.vocab_map)


def _read_entities(path: str) -> list[str]:
    return [
        line.strip()
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def _load_examples(path: str) -> list[dataset.TypingExample]:
    result = dataset.load_dataset(path)
    for err in result.errors:
        print(f"{path}:{err.line_number}: {err.message}", file=sys.stderr)
    if not result.examples:
        raise InputFormatError(f"{path}: no usable examples")
    print(f"loaded {result.count} examples ({len(result.errors)} bad lines)",
          file=sys.stderr)
    return result.examples


# ---------------------------------------------------------------------------
# verb implementations


def _cmd_freq_count(args) -> int:
    stream = corpus.CorpusStream.from_dir(args.corpus)
    entities = _read_entities(args.entities)
    counts = corpus.count_corpus_hits(
        stream, entities, args.mode,
        fold_case=args.fold_case, workers=args.workers,
    )
    records = [
        dataset.FrequencyRecord(dataset.normalize_surface(e), "corpus",
                                args.snapshot_tag, c)
        for e, c in counts.items()
    ]
    dataset.dump_frequency_records(records, args.out)
    print(f"counted {len(records)} entities over "
          f"{stream.total_bytes} corpus bytes -> {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_freq_fetch(args) -> int:
    entities = (search.read_checkpoint(args.resume) if args.resume
                else _read_entities(args.entities))
    config = search.SearchConfig(source=args.source,
                                 min_interval_s=args.min_interval)
    with search.HitCache(args.cache) as cache:
        client = search.SearchClient(cache, config=config)
        result = client.fetch_many(entities, args.snapshot)
        dataset.dump_frequency_records(result.records, args.out)
        if result.quota_exhausted:
            result.write_checkpoint(args.checkpoint)
            print(
                f"quota exhausted after {len(result.records)} entities; "
                f"{len(result.remaining)} remaining -> {args.checkpoint}",
                file=sys.stderr,
            )
            return EXIT_TRANSPORT
    print(f"fetched {len(result.records)} records "
          f"({result.transport_calls} API calls)", file=sys.stderr)
    return EXIT_OK


def _cmd_bins_assign(args) -> int:
    records = dataset.load_frequency_records(args.freq)
    assignment = rankstats.assign_bins(records, k=args.k)
    rankstats.dump_bin_assignment(assignment, args.out)
    counts = assignment.unique_counts()
    print(f"thresholds={assignment.thresholds} unique-per-bin={counts}",
          file=sys.stderr)
    return EXIT_OK


def _cmd_stats_spearman(args) -> int:
    xs = [float(v) for v in _read_entities(args.x)]
    ys = [float(v) for v in _read_entities(args.y)]
    rho = rankstats.spearman(xs, ys)
    print("undefined" if rho is None else f"{rho!r}")
    return EXIT_OK


def _cmd_salience(args) -> int:
    scorer = _build_scorer(args.scorer)
    records = []
    for lineno, line in enumerate(
        Path(args.contexts).read_text(encoding="utf-8").splitlines(), 1
    ):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            ctx = dataset.ContextSet(entity=raw["entity"],
                                     sentences=tuple(raw["sentences"]))
        except (json.JSONDecodeError, KeyError, ValueError) as e:
            raise InputFormatError(f"{args.contexts}:{lineno}: {e}") from e
        records.append(recovery.average_salience(
            ctx.entity, ctx, scorer, args.strategy, geometric=args.geometric,
        ))
    recovery.write_salience_records(records, args.per_context, args.per_entity)
    print(f"scored {len(records)} entities", file=sys.stderr)
    return EXIT_OK


def _cmd_baseline_hearst(args) -> int:
    vocab = _load_vocab(args)
    examples = _load_examples(args.dataset)
    if args.template in baselines.PRESET_TEMPLATES:
        template = baselines.PRESET_TEMPLATES[args.template]
    else:
        named = {t.name: t for t in baselines.load_templates(args.template)}
        if len(named) != 1 and args.template_name is None:
            raise InputFormatError(
                "template file has several entries; pass --template-name"
            )
        template = (named[args.template_name] if args.template_name
                    else next(iter(named.values())))
    scorer = _build_scorer(args.scorer)
    n = args.n if args.n is not None else template.n
    records = [
        dataset.PredictionRecord(
            example_id=ex.example_id,
            predicted_types=baselines.hearst_predict(ex, template, scorer,
                                                     vocab, n=n),
            run_id=args.run_id,
        )
        for ex in examples
    ]
    dataset.dump_predictions(records, args.out)
    print(f"wrote {len(records)} prediction records -> {args.out}",
          file=sys.stderr)
    return EXIT_OK


def _cmd_baseline_fewshot(args) -> int:
    vocab = _load_vocab(args)
    if args.responses:
        failures = 0
        records = []
        for lineno, line in enumerate(
            Path(args.responses).read_text(encoding="utf-8").splitlines(), 1
        ):
            if not line.strip():
                continue
            raw = json.loads(line)
            parsed = baselines.parse_typing_response(raw.get("response"), vocab)
            failures += parsed.failed
            records.append(dataset.PredictionRecord(
                example_id=str(raw["ex_id"]),
                predicted_types=parsed.labels,
                run_id=args.run_id,
            ))
        dataset.dump_predictions(records, args.out)
        print(f"parsed {len(records)} responses ({failures} parse failures)",
              file=sys.stderr)
        return EXIT_OK

    train = _load_examples(args.train)
    targets = _load_examples(args.dataset)
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for ex in targets:
            prompt = baselines.build_fewshot_prompt(train, args.k, ex,
                                                    seed=args.seed)
            fh.write(json.dumps({"ex_id": ex.example_id,
                                 "prompt": prompt.text}) + "\n")
    print(f"wrote {len(targets)} prompts -> {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_eval(args) -> int:
    vocab = _load_vocab(args)
    examples = _load_examples(args.dataset)
    bins = rankstats.load_bin_assignment(args.bins)
    loaded = dataset.load_predictions(
        args.preds, vocab, known_ids={ex.example_id for ex in examples}
    )
    for warn in loaded.warnings:
        print(f"{args.preds}:{warn.line_number}: {warn.message}",
              file=sys.stderr)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runs = evaluation.split_runs(loaded.records)
    if not runs:
        raise InputFormatError(f"{args.preds}: no prediction records")
    per_run_blocks = {}
    for run_id, pred_map in sorted(runs.items()):
        result = evaluation.stratified_eval(examples, pred_map, bins, vocab)
        per_run_blocks[run_id] = result.blocks
        metrics.write_metric_table(
            [result.blocks[k] for k in sorted(result.blocks)],
            out / f"metrics_{run_id}.tsv",
        )
        if result.missing_predictions:
            print(f"run {run_id}: {result.missing_predictions} examples "
                  "had no prediction (scored as empty)", file=sys.stderr)
    blocks = (rankstats.aggregate_runs(list(per_run_blocks.values()))
              if len(per_run_blocks) > 1
              else next(iter(per_run_blocks.values())))
    metrics.write_metric_table([blocks[k] for k in sorted(blocks)],
                               out / "metrics.tsv")
    summary = metrics.render_metric_text(blocks)
    (out / "metrics.txt").write_text(summary, encoding="utf-8")
    print(summary)
    return EXIT_OK


def _cmd_tune_hearst(args) -> int:
    vocab = _load_vocab(args)
    dev = _load_examples(args.dev)
    templates = (list(baselines.PRESET_TEMPLATES.values())
                 if args.templates == "presets"
                 else baselines.load_templates(args.templates))
    n_values = [int(v) for v in args.n_values.split(",")]
    scorer = _build_scorer(args.scorer)
    result = evaluation.tune_hearst(dev, templates, n_values, scorer, vocab)
    for cell in result.grid:
        print(f"{cell.template.name or cell.template.placement}\t"
              f"{cell.n}\t{cell.f1:.4f}")
    best = result.best
    print(f"best: template={best.template.name or best.template.placement} "
          f"n={best.n} F1={best.f1:.4f}")
    return EXIT_OK


def _cmd_report(args) -> int:
    bundle = report.ReportBundle()
    for item in args.metrics or []:
        system, _, path = item.partition("=")
        if not path:
            raise InputFormatError(f"--metrics wants SYSTEM=PATH, got {item!r}")
        blocks = metrics.read_metric_table(path)
        bundle.metric_tables[system] = {
            (b.subset, b.granularity): b for b in blocks
        }
    if bundle.metric_tables:
        bundle.bin_f1 = {}
        for system, blocks in bundle.metric_tables.items():
            per_bin = {}
            for (subset, gran), block in blocks.items():
                if gran == "overall" and subset.startswith("bin-"):
                    per_bin[int(subset.split("-")[1])] = block.f1
            if per_bin:
                bundle.bin_f1[system] = per_bin
        if not bundle.bin_f1:
            bundle.bin_f1 = None
    if args.freq:
        freq = dataset.load_frequency_records(args.freq)
        if args.salience:
            means = {}
            for line in Path(args.salience).read_text(encoding="utf-8").splitlines():
                if line.strip():
                    entity, _, mean = line.split("\t")
                    means[entity] = float(mean)
            bundle.scatter = [
                (r.entity, r.hits, means[r.entity])
                for r in freq if r.entity in means
            ]
        if args.bins:
            assignment = rankstats.load_bin_assignment(args.bins)
            bundle.bin_histogram = [
                (r.entity, r.hits, assignment.bin_of(r.entity)) for r in freq
            ]
    if args.split_points:
        points = []
        for line in Path(args.split_points).read_text(encoding="utf-8").splitlines():
            if line.strip():
                ratio, prob = line.split("\t")
                points.append((float(ratio), float(prob)))
        bundle.split_curve = rankstats.split_ratio_curve(points)
    manifest = report.emit_report(bundle, args.out)
    print(f"report written to {args.out} "
          f"({len(manifest['figures'])} figures)", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailtyping",
        description="Frequency-stratified evaluation for ultra-fine entity typing",
    )
    parser.add_argument("--seed", type=int, default=0, help="global RNG seed")
    parser.add_argument("--runs", type=int, default=1,
                        help="declared run count (multi-run files carry run_id)")
    parser.add_argument("--fold-case", action="store_true",
                        help="case-insensitive corpus matching")
    sub = parser.add_subparsers(dest="group", required=True)

    freq = sub.add_parser("freq", help="entity frequency estimation")
    freq_sub = freq.add_subparsers(dest="verb", required=True)
    p = freq_sub.add_parser("count", help="count phrases over a local corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--entities", required=True)
    p.add_argument("--mode", choices=corpus.MATCH_MODES, default="word-boundary")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--snapshot-tag", default="local")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_freq_count)
    p = freq_sub.add_parser("fetch", help="fetch search-API hit counts")
    p.add_argument("--entities")
    p.add_argument("--snapshot", required=True, help="date cap, e.g. 2024-12-31")
    p.add_argument("--cache", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint", default="fetch.checkpoint")
    p.add_argument("--resume", help="checkpoint file to resume from")
    p.add_argument("--source", default="search-api")
    p.add_argument("--min-interval", type=float, default=1.0)
    p.set_defaults(fn=_cmd_freq_fetch)

    bins = sub.add_parser("bins", help="frequency binning")
    bins_sub = bins.add_subparsers(dest="verb", required=True)
    p = bins_sub.add_parser("assign")
    p.add_argument("--freq", required=True)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_bins_assign)

    stats = sub.add_parser("stats", help="rank statistics")
    stats_sub = stats.add_subparsers(dest="verb", required=True)
    p = stats_sub.add_parser("spearman")
    p.add_argument("--x", required=True, help="file with one value per line")
    p.add_argument("--y", required=True)
    p.set_defaults(fn=_cmd_stats_spearman)

    p = sub.add_parser("salience", help="chain-rule recovery scoring")
    p.add_argument("--contexts", required=True,
                   help="jsonl: {entity, sentences}")
    p.add_argument("--scorer", required=True)
    p.add_argument("--strategy", choices=recovery.STRATEGIES, required=True)
    p.add_argument("--geometric", action="store_true")
    p.add_argument("--per-context", required=True)
    p.add_argument("--per-entity", required=True)
    p.set_defaults(fn=_cmd_salience)

    baseline = sub.add_parser("baseline", help="PLM typing baselines")
    baseline_sub = baseline.add_subparsers(dest="verb", required=True)
    p = baseline_sub.add_parser("hearst")
    p.add_argument("--dataset", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--vocab-map", required=True)
    p.add_argument("--template", default="inserted",
                   help="preset name or template file")
    p.add_argument("--template-name")
    p.add_argument("--n", type=int)
    p.add_argument("--scorer", required=True)
    p.add_argument("--run-id", default="hearst")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_baseline_hearst)
    p = baseline_sub.add_parser("fewshot")
    p.add_argument("--dataset", required=True)
    p.add_argument("--train")
    p.add_argument("--vocab", required=True)
    p.add_argument("--vocab-map", required=True)
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--responses",
                   help="jsonl of {ex_id, response}; parsed into predictions")
    p.add_argument("--run-id", default="fewshot")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_baseline_fewshot)

    p = sub.add_parser("eval", help="stratified evaluation")
    p.add_argument("--dataset", required=True)
    p.add_argument("--preds", required=True)
    p.add_argument("--bins", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--vocab-map", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("tune-hearst", help="grid-search templates on dev")
    p.add_argument("--dev", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--vocab-map", required=True)
    p.add_argument("--templates", default="presets")
    p.add_argument("--n-values", default="1,2,3,4,5,6,8,10,12")
    p.add_argument("--scorer", required=True)
    p.set_defaults(fn=_cmd_tune_hearst)

    p = sub.add_parser("report", help="figures and data tables")
    p.add_argument("--metrics", action="append", metavar="SYSTEM=PATH")
    p.add_argument("--freq")
    p.add_argument("--bins")
    p.add_argument("--salience", help="per-entity salience means")
    p.add_argument("--split-points", help="tsv of ratio<TAB>probability")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputFormatError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (TransportError, ProtocolError) as e:
        print(f"transport error: {e}", file=sys.stderr)
        return EXIT_TRANSPORT
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
