"""Command line pipeline: mask -> explain -> aggregate -> rank -> heatmap,
plus the side stages (correct, freq, simcheck, eval, bench, synth).

Every stage reads files written by the previous one and writes its own
artifacts into ``--out-dir``, so stages are independently re-runnable and
diffable. Exit codes: 0 success, 2 validation failure, 3 stage failure;
failures emit one machine-readable JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .aggregate import (
    RankedWordList,
    aggregate_avg_shap,
    min_ratio_diagnostic,
    rank_values,
    read_ranked_csv,
    read_table_csv,
    task_text_frequency,
    weighted_f1,
    write_eval_csv,
    write_ranked_csv,
    write_table_csv,
)
from .attribution import (
    explain_corpus,
    explain_utterance,
    read_attribution_records,
    write_attributions,
    write_skip_summary,
)
from .backend import backend_name
from .config import RunConfig, load_run_config, make_adapter, require
from .corpus import (
    apply_corrections,
    apply_gazetteer,
    load_corpus,
    load_corpus_lenient,
    load_gazetteer,
    load_proposals,
    save_corpus,
    save_proposals,
)
from .errors import TokattrError, ValidationError
from .report import Palette, build_heatmap, write_heatmap_csv, write_heatmap_svg
from .simcheck import load_vectors, spuriousness_report, write_spuriousness_csv
from .synth import write_synthetic_bundle


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 0
    try:
        cfg = _config_from_args(args)
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.command](cfg, args)
        return 0
    except ValidationError as exc:
        _emit_error(args.command, "validation", exc)
        return 2
    except TokattrError as exc:
        _emit_error(args.command, "stage", exc)
        return 3
    except OSError as exc:
        _emit_error(args.command, "stage", exc)
        return 3


def _emit_error(stage: str, kind: str, exc: Exception) -> None:
    record = {"error": {"stage": stage, "type": kind, "message": str(exc)}}
    print(json.dumps(record, ensure_ascii=False), file=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tokattr",
        description="Shapley-style token attribution for black-box text classifiers",
    )
    parser.add_argument("--version", action="version", version=f"tokattr {__version__}")
    sub = parser.add_subparsers(dest="command")

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--out-dir", dest="out_dir", help="artifact directory")
        p.add_argument("--corpus", help="corpus JSONL")
        p.add_argument("--seed", type=int, help="seed for seeded stages")
        return p

    p = add("mask", "apply the gazetteer and write mask proposals")
    p.add_argument("--gazetteer", help="phrase,category CSV")

    p = add("correct", "apply reviewed mask proposals to the original corpus")
    p.add_argument("--proposals", help="reviewed proposals CSV")

    p = add("explain", "compute per-token attributions for every class")
    _explain_flags(p)

    p = add("aggregate", "fold attributions into the per-class word table")
    p.add_argument("--attributions", help="attribution JSONL")
    p.add_argument("--scope", choices=["all", "gold"], dest="aggregate_scope")
    p.add_argument("--per-utterance-mean", action="store_true", default=None,
                   dest="per_utterance_mean")
    p.add_argument("--raw-pieces", action="store_true",
                   help="keep subword pieces instead of merging them")

    p = add("rank", "rank and P/N-label the top words per class")
    p.add_argument("--table", help="word table CSV (default <out-dir>/avgshap.csv)")
    p.add_argument("--top-k", type=int, dest="top_k")

    p = add("heatmap", "render the cross-class heatmap SVG and CSV")
    p.add_argument("--ranked", help="ranked words CSV (default <out-dir>/ranked.csv)")

    p = add("freq", "count ranked words in a task document")
    p.add_argument("--document", help="plain-text document")
    p.add_argument("--ranked", help="ranked words CSV (default <out-dir>/ranked.csv)")
    p.add_argument("--words", help="comma-separated words (overrides --ranked)")

    p = add("simcheck", "flag high-contribution words far from class anchors")
    p.add_argument("--ranked", help="ranked words CSV (default <out-dir>/ranked.csv)")
    p.add_argument("--embeddings", help="word2vec text format vectors")
    p.add_argument("--threshold", type=float)

    p = add("eval", "classify the corpus and report weighted F1")
    _model_flags(p)

    p = add("bench", "evaluation-count and wall-time table across methods")
    _explain_flags(p)
    p.add_argument("--methods", default="exact,owen,partition,permutation",
                   help="comma-separated methods to time")

    p = add("pipeline", "run mask, explain, aggregate, rank, heatmap in order")
    _explain_flags(p)
    p.add_argument("--gazetteer", help="phrase,category CSV")
    p.add_argument("--top-k", type=int, dest="top_k")

    p = add("synth", "write the bundled synthetic corpus, model, and config")
    p.add_argument("--utterances", type=int, default=300)

    return parser


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="builtin:<spec.json> or bridge:<command line>")
    p.add_argument("--mask-mode", choices=["substitute", "delete"], dest="mask_mode")


def _explain_flags(p: argparse.ArgumentParser) -> None:
    _model_flags(p)
    p.add_argument("--method", choices=["exact", "owen", "partition", "permutation"])
    p.add_argument("--n-perms", type=int, dest="n_perms")
    p.add_argument("--workers", type=int)


_OVERRIDE_FIELDS = (
    "out_dir", "corpus", "seed", "gazetteer", "proposals", "attributions",
    "model", "mask_mode", "method", "n_perms", "workers", "aggregate_scope",
    "per_utterance_mean", "top_k", "document", "embeddings", "threshold",
)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {
        name: getattr(args, name)
        for name in _OVERRIDE_FIELDS
        if getattr(args, name, None) is not None
    }
    return load_run_config(getattr(args, "config", None), overrides)


def _out(cfg: RunConfig, name: str) -> Path:
    return Path(cfg.out_dir) / name


def _load_corpus_strict(cfg: RunConfig):
    return load_corpus(cfg.corpus)


# --- stages ---------------------------------------------------------------


def _cmd_mask(cfg: RunConfig, args) -> None:
    require(cfg, "corpus", "gazetteer")
    corpus = _load_corpus_strict(cfg)
    gazetteer = load_gazetteer(cfg.gazetteer)
    masked = []
    proposals = []
    for utt in corpus:
        m, props = apply_gazetteer(utt, gazetteer)
        masked.append(m)
        proposals.extend(props)
    save_corpus(masked, _out(cfg, "masked.jsonl"))
    save_proposals(proposals, _out(cfg, "proposals.csv"))
    print(f"masked {len(corpus)} utterances, {len(proposals)} proposals")


def _cmd_correct(cfg: RunConfig, args) -> None:
    require(cfg, "corpus", "proposals")
    corpus = _load_corpus_strict(cfg)
    proposals = load_proposals(cfg.proposals)
    corrected = apply_corrections(proposals, corpus)
    save_corpus(corrected, _out(cfg, "corrected.jsonl"))
    print(f"applied {len(proposals)} reviewed proposals")


def _cmd_explain(cfg: RunConfig, args) -> None:
    require(cfg, "corpus", "model", "method")
    corpus, load_skipped = load_corpus_lenient(cfg.corpus)
    adapter = make_adapter(cfg)
    try:
        results, skipped = explain_corpus(
            adapter, corpus, cfg.method,
            n_perms=cfg.n_perms, seed=cfg.seed,
            exact_cap=cfg.exact_cap, owen_cap=cfg.owen_cap,
            workers=cfg.workers,
        )
    finally:
        adapter.close()
    write_attributions(results, _out(cfg, "attributions.jsonl"))
    all_skipped = list(load_skipped) + list(skipped)
    write_skip_summary(all_skipped, len(results), _out(cfg, "explain_summary.json"))
    print(f"explained {len(results)} utterances ({len(all_skipped)} skipped) "
          f"with method={cfg.method}")


def _aggregate_records(cfg: RunConfig, merge_subwords: bool):
    records = read_attribution_records(cfg.attributions)
    gold = None
    if cfg.aggregate_scope == "gold":
        require(cfg, "corpus")
        gold = {u.id: u.gold_label for u in _load_corpus_strict(cfg)}
    return aggregate_avg_shap(
        records, cfg.dimension,
        per_utterance_mean=cfg.per_utterance_mean,
        merge_subwords=merge_subwords,
        gold_labels=gold,
    )


def _cmd_aggregate(cfg: RunConfig, args) -> None:
    if cfg.attributions is None:
        cfg = _with_field(cfg, "attributions", _out(cfg, "attributions.jsonl"))
    require(cfg, "attributions")
    _require_dimension(cfg)
    table = _aggregate_records(cfg, merge_subwords=not getattr(args, "raw_pieces", False))
    write_table_csv(table, _out(cfg, "avgshap.csv"))
    print(f"aggregated {len(table.cells)} words over {len(cfg.dimension.classes)} classes")


def _cmd_rank(cfg: RunConfig, args) -> None:
    _require_dimension(cfg)
    table_path = getattr(args, "table", None) or _out(cfg, "avgshap.csv")
    if not Path(table_path).exists():
        raise ValidationError(f"word table {table_path} does not exist; run aggregate first")
    rows = read_table_csv(table_path, cfg.dimension)
    by_class: dict[str, dict[str, float]] = {cls: {} for cls in cfg.dimension.classes}
    for word, class_id, avg, _occ, _utt in rows:
        by_class[class_id][word] = avg
    lists = [rank_values(by_class[cls], cls, k=cfg.top_k) for cls in cfg.dimension.classes]
    write_ranked_csv(lists, _out(cfg, "ranked.csv"))
    with open(_out(cfg, "min_ratio.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("class,min_ratio\n")
        for ranked in lists:
            if ranked.entries:
                fh.write(f"{ranked.class_id},{min_ratio_diagnostic(ranked)!r}\n")
            else:
                fh.write(f"{ranked.class_id},\n")
    print(f"ranked top-{cfg.top_k} words for {len(lists)} classes")


def _cmd_heatmap(cfg: RunConfig, args) -> None:
    _require_dimension(cfg)
    ranked_path = getattr(args, "ranked", None) or _out(cfg, "ranked.csv")
    if not Path(ranked_path).exists():
        raise ValidationError(f"ranked list {ranked_path} does not exist; run rank first")
    by_class = read_ranked_csv(ranked_path)
    for cls in cfg.dimension.classes:
        if cls not in by_class:
            by_class[cls] = RankedWordList(class_id=cls, entries=())
    spec = build_heatmap(
        [by_class[c] for c in cfg.dimension.classes],
        cfg.dimension.classes,
        dimension_name=cfg.dimension.name,
    )
    palette = Palette(**cfg.palette) if cfg.palette else Palette()
    write_heatmap_svg(spec, _out(cfg, "heatmap.svg"), palette)
    write_heatmap_csv(spec, _out(cfg, "heatmap.csv"))
    print(f"heatmap: {len(spec.columns)} qualifying words x {len(spec.rows)} classes")


def _cmd_freq(cfg: RunConfig, args) -> None:
    require(cfg, "document")
    if args.words:
        words = [w.strip() for w in args.words.split(",") if w.strip()]
    else:
        ranked_path = getattr(args, "ranked", None) or _out(cfg, "ranked.csv")
        if not Path(ranked_path).exists():
            raise ValidationError(
                f"no --words given and ranked list {ranked_path} does not exist"
            )
        by_class = read_ranked_csv(ranked_path)
        words = sorted({e.word for ranked in by_class.values() for e in ranked.entries})
    with open(cfg.document, encoding="utf-8") as fh:
        document = fh.read()
    counts = task_text_frequency(words, document)
    with open(_out(cfg, "freq.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("word,count\n")
        for word in sorted(counts):
            fh.write(f"{word},{counts[word]}\n")
    print(f"counted {len(counts)} words in {cfg.document}")


def _cmd_simcheck(cfg: RunConfig, args) -> None:
    require(cfg, "embeddings")
    ranked_path = getattr(args, "ranked", None) or _out(cfg, "ranked.csv")
    if not Path(ranked_path).exists():
        raise ValidationError(f"ranked list {ranked_path} does not exist; run rank first")
    by_class = read_ranked_csv(ranked_path)
    store = load_vectors(cfg.embeddings)
    rows = spuriousness_report(
        [by_class[c] for c in sorted(by_class)], cfg.anchors, store, cfg.threshold
    )
    write_spuriousness_csv(rows, _out(cfg, "simcheck.csv"))
    flagged = sum(1 for r in rows if r.flag == "spurious-candidate")
    print(f"simcheck: {len(rows)} positive words, {flagged} flagged")


def _cmd_eval(cfg: RunConfig, args) -> None:
    require(cfg, "corpus", "model")
    _require_dimension(cfg)
    corpus = _load_corpus_strict(cfg)
    labelled = [u for u in corpus if u.gold_label is not None]
    if not labelled:
        raise ValidationError("no utterance carries a gold label; nothing to evaluate")
    adapter = make_adapter(cfg)
    try:
        gold, predicted = [], []
        for utt in labelled:
            scores = adapter.predict_masks(utt, np.ones((1, len(utt.tokens)), dtype=bool))[0]
            predicted.append(adapter.dimension.classes[int(scores.argmax())])
            gold.append(utt.gold_label)
    finally:
        adapter.close()
    report = weighted_f1(gold, predicted, cfg.dimension)
    write_eval_csv(report, _out(cfg, "eval.csv"))
    print(f"weighted F1 = {report.weighted_f1:.4f} over {len(gold)} utterances")


def _cmd_bench(cfg: RunConfig, args) -> None:
    require(cfg, "corpus", "model")
    corpus = _load_corpus_strict(cfg)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    rows = []
    for method in methods:
        adapter = make_adapter(cfg)
        try:
            t0 = time.perf_counter()
            skipped = 0
            for utt in corpus:
                try:
                    explain_utterance(
                        adapter, utt, method,
                        n_perms=cfg.n_perms, seed=cfg.seed,
                        exact_cap=cfg.exact_cap, owen_cap=cfg.owen_cap,
                    )
                except ValidationError:
                    skipped += 1
            elapsed = time.perf_counter() - t0
            rows.append((method, adapter.eval_counter.count, elapsed, skipped))
        finally:
            adapter.close()
    with open(_out(cfg, "bench.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method,model_evals,wall_time_s,skipped\n")
        for method, evals, elapsed, skipped in rows:
            fh.write(f"{method},{evals},{elapsed:.6f},{skipped}\n")
    print(f"{'method':<12} {'model_evals':>12} {'wall_time_s':>12} {'skipped':>8}   "
          f"[kernel backend: {backend_name()}]")
    for method, evals, elapsed, skipped in rows:
        print(f"{method:<12} {evals:>12} {elapsed:>12.4f} {skipped:>8}")


def _cmd_pipeline(cfg: RunConfig, args) -> None:
    require(cfg, "corpus", "gazetteer", "model", "method")
    _require_dimension(cfg)
    _cmd_mask(cfg, args)
    explain_cfg = _with_field(cfg, "corpus", _out(cfg, "masked.jsonl"))
    _cmd_explain(explain_cfg, args)
    agg_cfg = _with_field(cfg, "attributions", _out(cfg, "attributions.jsonl"))
    _cmd_aggregate(agg_cfg, args)
    _cmd_rank(cfg, args)
    _cmd_heatmap(cfg, args)
    print("pipeline complete")


def _cmd_synth(cfg: RunConfig, args) -> None:
    write_synthetic_bundle(cfg.out_dir, n_utterances=args.utterances, seed=cfg.seed)
    print(f"synthetic bundle written to {cfg.out_dir}")


def _require_dimension(cfg: RunConfig) -> None:
    if cfg.dimension is None:
        raise ValidationError("config must declare the dimension (name and classes)")


def _with_field(cfg: RunConfig, field_name: str, value: Path) -> RunConfig:
    return replace(cfg, **{field_name: str(value)})


_COMMANDS = {
    "mask": _cmd_mask,
    "correct": _cmd_correct,
    "explain": _cmd_explain,
    "aggregate": _cmd_aggregate,
    "rank": _cmd_rank,
    "heatmap": _cmd_heatmap,
    "freq": _cmd_freq,
    "simcheck": _cmd_simcheck,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "pipeline": _cmd_pipeline,
    "synth": _cmd_synth,
}


if __name__ == "__main__":
    sys.exit(main())
