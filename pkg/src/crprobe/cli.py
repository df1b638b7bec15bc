"""Command-line pipeline: ingest, analyze, run-model, audit-predictions, compare-reports.

Artifacts land under the configured output directory:

    out/
      stats.json                     corpus statistics
      cache/<fingerprint>/           binary caches for one (data, preprocessing) pair
      analysis/*.json                pair/label/cooc distributions, partition counts
      models/<name>.*                predictions, metrics, model cache per built-in model
      audit/<name>.*                 proportions and metrics for external predictions

Exit codes: 0 success, 2 configuration error, 3 data error, 4 model failure.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import time
from pathlib import Path

from . import analysis, caches, crgraph, evaluation, ingest
from .config import MODELS, RunConfig, load_config
from .errors import ConfigError, CrprobeError, DataError, ModelError
from .recommenders import (
    BprHyperParams,
    train_bpr_mf,
    train_item_knn,
    train_sknn,
    predict_all,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_MODEL = 4


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _fingerprint(config: RunConfig) -> str:
    if not config.dataset_path:
        raise ConfigError("dataset.path is required (set it in the config file or via --set)")
    path = Path(config.dataset_path)
    if not path.is_file():
        raise DataError(f"dataset file not found: {config.dataset_path!r}")
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    return config.ingest_fingerprint(digest)


def _cache_dir(config: RunConfig, fingerprint: str) -> Path:
    return Path(config.out_dir) / "cache" / fingerprint


def cmd_ingest(config: RunConfig) -> Path:
    """Parse, preprocess, split, and cache a dataset; emit stats.json."""
    started = time.perf_counter()
    fingerprint = _fingerprint(config)
    cache = _cache_dir(config, fingerprint)
    cache.mkdir(parents=True, exist_ok=True)

    with open(config.dataset_path, "r", encoding="utf-8") as fh:
        events, report = ingest.parse_events(fh, config.columns())
    if report.skipped:
        _log(f"ingest: skipped {report.skipped} of {report.rows} rows")
        for msg in report.errors[:10]:
            _log(f"  {msg}")
    raw = ingest.build_sequences(events, config.grouping)
    corpus = ingest.preprocess(raw, config.min_item_freq, config.min_len)
    stats = ingest.dataset_stats(corpus)
    split = ingest.split_chronological(corpus, config.ratios)

    caches.write_sequence_set(cache / "corpus.crp", corpus)
    caches.write_sequence_set(cache / "train.crp", split.train)
    caches.write_sample_set(cache / "valid.crs", split.valid)
    caches.write_sample_set(cache / "test.crs", split.test)
    for name, sample_set in (("valid", split.valid), ("test", split.test)):
        with open(cache / f"{name}_samples.tsv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("sample_id\tprefix\tlabel\n")
            for s in sample_set:
                prefix = ",".join(corpus.vocab.decode(i) for i in s.prefix)
                fh.write(f"{s.id}\t{prefix}\t{corpus.vocab.decode(s.label)}\n")

    caches.write_json(
        cache / "manifest.json",
        {
            "schema": "crprobe.manifest/1",
            "fingerprint": fingerprint,
            "input_path": str(config.dataset_path),
            "grouping": config.grouping,
            "min_item_freq": config.min_item_freq,
            "min_len": config.min_len,
            "ratios": list(config.ratios),
            "train_sequences": len(split.train.sequences),
            "valid_samples": len(split.valid),
            "test_samples": len(split.test),
        },
    )
    out = Path(config.out_dir)
    caches.write_json(out / "stats.json", stats.to_json_dict())
    _log(
        f"ingest: {stats.n_items} items, {stats.n_interactions} interactions, "
        f"{stats.n_sequences} sequences (avg {stats.avg_length:.2f}); "
        f"train/valid/test = {len(split.train.sequences)}/{len(split.valid)}/{len(split.test)}; "
        f"{time.perf_counter() - started:.1f}s -> {cache}"
    )
    return cache


def _require_cache(config: RunConfig) -> Path:
    cache = _cache_dir(config, _fingerprint(config))
    if not (cache / "manifest.json").is_file():
        raise DataError(
            "no ingest cache matches this configuration and data "
            f"(expected {cache}); run 'crprobe ingest' first"
        )
    return cache


def _load_graph(config: RunConfig, cache: Path, train: ingest.SequenceSet) -> crgraph.GlobalGraph:
    graph_path = cache / "graph.crg"
    if graph_path.is_file():
        return caches.read_graph(graph_path)
    graph = crgraph.build_global_graph(train, clique_cap=config.clique_cap)
    caches.write_graph(graph_path, graph)
    return graph


def _load_label_records(
    config: RunConfig,
    cache: Path,
    graph: crgraph.GlobalGraph,
    test: ingest.SampleSet,
) -> list[analysis.LabelCrRecord]:
    path = cache / f"label_records_h{config.hops}.json"
    if path.is_file():
        payload = caches.read_json(path)
        return [
            analysis.LabelCrRecord(sample_id=sid, crs=crs) for sid, crs in payload["records"]
        ]
    records, _ = analysis.label_cr_records(
        graph, test, config.hops, workers=config.effective_workers()
    )
    caches.write_json(
        path,
        {
            "schema": "crprobe.label_records/1",
            "hops": config.hops,
            "records": [[r.sample_id, r.crs] for r in records],
        },
    )
    return records


def _distribution_from_records(
    records: list[analysis.LabelCrRecord], hops: int
) -> analysis.LabelCrDistribution:
    labels = crgraph.class_labels(hops)
    counts = {label: 0 for label in labels}
    all_none = 0
    for record in records:
        for cr in record.crs:
            counts[cr] += 1
        if all(cr == crgraph.CLASS_NONE for cr in record.crs):
            all_none += 1
    return analysis.LabelCrDistribution(
        counts=counts, hops=hops, n_samples=len(records), all_none_samples=all_none
    )


def cmd_analyze(config: RunConfig) -> Path:
    """Emit the distribution analyses for the cached dataset."""
    cache = _require_cache(config)
    train = caches.read_sequence_set(cache / "train.crp")
    test = caches.read_sample_set(cache / "test.crs")
    graph = _load_graph(config, cache, train)
    workers = config.effective_workers()
    out = Path(config.out_dir) / "analysis"
    out.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    histogram = crgraph.pair_class_histogram(graph, config.hops, workers=workers)
    caches.write_json(out / "pair_classes.json", histogram.to_json_dict(config.cr_denominator))
    _log(f"analyze: pair classes over {histogram.total_pairs} pairs "
         f"({time.perf_counter() - started:.1f}s)")

    caches.write_json(out / "cooc_freq.json", crgraph.cooc_frequency_histogram(graph).to_json_dict())

    records = _load_label_records(config, cache, graph, test)
    dist = _distribution_from_records(records, config.hops)
    caches.write_json(out / "label_cr.json", dist.to_json_dict())

    pure = analysis.pure_partition(records, config.hops)
    mixed = len(records) - sum(len(ids) for ids in pure.slices.values())
    caches.write_json(
        out / "pure_counts.json",
        {
            "schema": "crprobe.pure_counts/1",
            "hops": config.hops,
            "slices": {name: len(ids) for name, ids in pure.slices.items()},
            "excluded_mixed": mixed,
            "samples": len(records),
        },
    )
    di = analysis.direct_indirect_partition(records)
    caches.write_json(
        out / "direct_indirect.json",
        {
            "schema": "crprobe.direct_indirect/1",
            "direct": len(di.slices[analysis.SLICE_DIRECT]),
            "indirect": len(di.slices[analysis.SLICE_INDIRECT]),
            "samples": len(records),
        },
    )
    _log(f"analyze: wrote {out}")
    return out


def _partitions_for_eval(
    config: RunConfig, records: list[analysis.LabelCrRecord]
) -> analysis.SlicePartition:
    pure = analysis.pure_partition(records, config.hops)
    di = analysis.direct_indirect_partition(records)
    return analysis.SlicePartition(slices={**pure.slices, **di.slices})


def cmd_run_model(config: RunConfig, model_name: str) -> Path:
    """Train a built-in model, write predictions, and evaluate per slice."""
    if model_name not in MODELS:
        raise ConfigError(f"unknown model {model_name!r}; choose from {MODELS}")
    cache = _require_cache(config)
    train = caches.read_sequence_set(cache / "train.crp")
    test = caches.read_sample_set(cache / "test.crs")
    if config.k > train.n_items:
        raise ConfigError(f"k={config.k} exceeds catalog size {train.n_items}")
    workers = config.effective_workers()
    out = Path(config.out_dir) / "models"
    out.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    if model_name == "item-knn":
        model = train_item_knn(train, neighbor_cap=config.item_knn_cap)
        caches.write_item_knn(out / "item-knn.model.bin", model)
    elif model_name == "sknn":
        model = train_sknn(train, k_n=config.sknn_k, m_recent=config.sknn_recent)
        caches.write_sknn(out / "sknn.model.bin", model)
    else:
        hp = BprHyperParams(
            dim=config.bpr_dim,
            learning_rate=config.bpr_lr,
            l2=config.bpr_l2,
            epochs=config.bpr_epochs,
            negatives=config.bpr_negatives,
            batch_size=config.bpr_batch,
        )
        model = train_bpr_mf(train, hp, seed=config.seed)
        for epoch, loss in enumerate(model.epoch_losses, start=1):
            _log(f"bpr-mf: epoch {epoch} loss {loss:.6f}")
        caches.write_bpr(out / "bpr-mf.model.bin", model)
    _log(f"run-model: trained {model_name} in {time.perf_counter() - started:.1f}s")

    preds = predict_all(model, test, k=config.k, workers=workers)
    analysis.write_prediction_file(out / f"{model_name}.predictions.tsv", preds, train.vocab)

    graph = _load_graph(config, cache, train)
    records = _load_label_records(config, cache, graph, test)
    report = evaluation.evaluate_slices(
        preds,
        test,
        _partitions_for_eval(config, records),
        k=config.k,
        model=model_name,
        dataset=config.dataset_name,
        min_slice_size=config.min_slice_size,
    )
    caches.write_json(out / f"{model_name}.metrics.json", report.to_json_dict())
    table = report.to_text_table()
    (out / f"{model_name}.metrics.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    return out


def cmd_audit_predictions(config: RunConfig, predictions_path: str, name: str) -> Path:
    """Score an external prediction file and measure its relation-class mix."""
    cache = _require_cache(config)
    train = caches.read_sequence_set(cache / "train.crp")
    test = caches.read_sample_set(cache / "test.crs")
    workers = config.effective_workers()

    pred_file = Path(predictions_path)
    if not pred_file.is_file():
        raise DataError(f"prediction file not found: {predictions_path!r}")
    with open(pred_file, "r", encoding="utf-8") as fh:
        preds, bad, messages = analysis.parse_prediction_file(fh, train.vocab, config.k)
    total_lines = len(preds.lists) + bad
    if bad:
        _log(f"audit: {bad} bad lines of {total_lines}")
        for msg in messages[:10]:
            _log(f"  {msg}")
    if total_lines == 0 or bad > 0.10 * total_lines:
        raise DataError(
            f"prediction file unusable: {bad} bad lines out of {total_lines}"
        )

    out = Path(config.out_dir) / "audit"
    out.mkdir(parents=True, exist_ok=True)
    graph = _load_graph(config, cache, train)
    proportions = analysis.prediction_cr_proportions(
        graph, preds, test, config.hops, mode=config.prediction_mode, workers=workers
    )
    if proportions.skipped_records:
        _log(f"audit: skipped {proportions.skipped_records} predictions with unknown sample ids")
    caches.write_json(out / f"{name}.proportions.json", proportions.to_json_dict())

    records = _load_label_records(config, cache, graph, test)
    report = evaluation.evaluate_slices(
        preds,
        test,
        _partitions_for_eval(config, records),
        k=config.k,
        model=name,
        dataset=config.dataset_name,
        min_slice_size=config.min_slice_size,
    )
    caches.write_json(out / f"{name}.metrics.json", report.to_json_dict())
    table = report.to_text_table()
    (out / f"{name}.metrics.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    return out


def cmd_compare_reports(report_paths: list[str], out_path: str | None) -> None:
    """Merge metrics reports into one ranked matrix."""
    reports = []
    for path in report_paths:
        payload = caches.read_json(path)
        if payload.get("schema") != "crprobe.metrics/1":
            raise DataError(f"{path}: not a crprobe metrics report")
        slices = [
            evaluation.SliceMetrics(
                name=s["name"],
                n=s["n"],
                hits=s["hits"],
                prec_at_k=s["prec_at_k"],
                mrr_at_k=s["mrr_at_k"],
                low_confidence=s["low_confidence"],
            )
            for s in payload["slices"]
        ]
        reports.append(
            evaluation.MetricsReport(
                model=payload["model"],
                dataset=payload["dataset"],
                k=payload["k"],
                slices=slices,
                missing_predictions=payload["missing_predictions"],
            )
        )
    comparison = evaluation.compare_reports(reports)
    if out_path:
        caches.write_json(out_path, comparison)
    print(evaluation.comparison_text(comparison), end="")


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", "-c", help="key-value configuration file")
    parser.add_argument(
        "--set",
        "-s",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a configuration key (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crprobe",
        description="Collaborative-relation analytics for session recommendation datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="parse, preprocess, split, and cache a dataset")
    _add_config_arguments(p_ingest)

    p_analyze = sub.add_parser("analyze", help="emit the distribution analyses")
    _add_config_arguments(p_analyze)

    p_run = sub.add_parser("run-model", help="train and evaluate a built-in baseline")
    _add_config_arguments(p_run)
    p_run.add_argument("--model", "-m", required=True, choices=MODELS)

    p_audit = sub.add_parser(
        "audit-predictions", help="evaluate an external prediction file"
    )
    _add_config_arguments(p_audit)
    p_audit.add_argument("--predictions", "-p", required=True)
    p_audit.add_argument("--name", default=None, help="label for the output files")

    p_compare = sub.add_parser("compare-reports", help="rank metrics reports side by side")
    p_compare.add_argument("reports", nargs="+")
    p_compare.add_argument("--out", default=None, help="also write the matrix as JSON")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "compare-reports":
            cmd_compare_reports(args.reports, args.out)
            return EXIT_OK
        config = load_config(args.config, args.overrides)
        if args.command == "ingest":
            cmd_ingest(config)
        elif args.command == "analyze":
            cmd_analyze(config)
        elif args.command == "run-model":
            cmd_run_model(config, args.model)
        elif args.command == "audit-predictions":
            name = args.name or Path(args.predictions).stem
            cmd_audit_predictions(config, args.predictions, name)
        return EXIT_OK
    except ConfigError as exc:
        _log(f"configuration error: {exc}")
        return EXIT_CONFIG
    except DataError as exc:
        _log(f"data error: {exc}")
        return EXIT_DATA
    except ModelError as exc:
        _log(f"model error: {exc}")
        return EXIT_MODEL
    except CrprobeError as exc:
        _log(f"error: {exc}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
