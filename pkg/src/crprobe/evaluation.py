"""Top-k ranking metrics over the full test set and over sample slices.

Metrics are computed from integer rank histograms, so results are exact and
independent of sample ordering or worker scheduling. Precision is the share
of samples whose label appears in the top k; MRR is the mean reciprocal rank
truncated at k.
"""

from __future__ import annotations

from dataclasses import dataclass

from .analysis import PredictionSet, SlicePartition
from .ingest import SampleSet

OVERALL_SLICE = "overall"
DEFAULT_MIN_SLICE = 30


@dataclass
class SliceMetrics:
    name: str
    n: int
    hits: int
    prec_at_k: float | None
    mrr_at_k: float | None
    low_confidence: bool

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "hits": self.hits,
            "prec_at_k": self.prec_at_k,
            "mrr_at_k": self.mrr_at_k,
            "low_confidence": self.low_confidence,
        }


@dataclass
class MetricsReport:
    model: str
    dataset: str
    k: int
    slices: list[SliceMetrics]
    missing_predictions: int

    def slice(self, name: str) -> SliceMetrics:
        for s in self.slices:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_json_dict(self) -> dict:
        return {
            "schema": "crprobe.metrics/1",
            "model": self.model,
            "dataset": self.dataset,
            "k": self.k,
            "missing_predictions": self.missing_predictions,
            "slices": [s.to_json_dict() for s in self.slices],
        }

    def to_text_table(self) -> str:
        """Aligned table with percentages to two decimals; '*' flags sparse slices."""
        headers = ["slice", "n", f"Prec@{self.k}", f"MRR@{self.k}"]
        rows = []
        for s in self.slices:
            prec = "-" if s.prec_at_k is None else f"{100.0 * s.prec_at_k:.2f}"
            mrr = "-" if s.mrr_at_k is None else f"{100.0 * s.mrr_at_k:.2f}"
            name = s.name + ("*" if s.low_confidence else "")
            rows.append([name, str(s.n), prec, mrr])
        widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
                  for i, h in enumerate(headers)]
        lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
        for r in rows:
            lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(headers))))
        return "\n".join(lines) + "\n"


def rank_histogram(
    preds: PredictionSet, samples: SampleSet, k: int
) -> tuple[list[int], int, int]:
    """Count label ranks 1..k over samples.

    Returns (hist, n, missing) where hist[r] is the number of samples whose
    label sits at rank r; samples without a prediction count as misses and
    are reported in `missing`.
    """
    hist = [0] * (k + 1)
    missing = 0
    n = 0
    for sample in samples:
        n += 1
        items = preds.lists.get(sample.id)
        if items is None:
            missing += 1
            continue
        try:
            rank = items.index(sample.label) + 1
        except ValueError:
            continue
        if rank <= k:
            hist[rank] += 1
    return hist, n, missing


def _metrics_from_hist(hist: list[int], n: int, k: int) -> tuple[int, float | None, float | None]:
    hits = sum(hist[1 : k + 1])
    if n == 0:
        return 0, None, None
    mrr_sum = 0.0
    for r in range(1, k + 1):
        mrr_sum += hist[r] / r
    return hits, hits / n, mrr_sum / n


def precision_at_k(preds: PredictionSet, samples: SampleSet, k: int = 10) -> float | None:
    """Share of samples whose label appears in the top k; None when empty."""
    hist, n, _ = rank_histogram(preds, samples, k)
    return _metrics_from_hist(hist, n, k)[1]


def mrr_at_k(preds: PredictionSet, samples: SampleSet, k: int = 10) -> float | None:
    """Mean of 1/rank for labels ranked within k, else 0; None when empty."""
    hist, n, _ = rank_histogram(preds, samples, k)
    return _metrics_from_hist(hist, n, k)[2]


def evaluate_slices(
    preds: PredictionSet,
    samples: SampleSet,
    partition: SlicePartition | None,
    k: int = 10,
    model: str = "",
    dataset: str = "",
    min_slice_size: int = DEFAULT_MIN_SLICE,
) -> MetricsReport:
    """Metrics per partition slice plus the whole test set as "overall".

    Slices smaller than min_slice_size are flagged low-confidence rather than
    omitted, mirroring how sparse cells are usually excluded from reported
    tables.
    """
    by_id = samples.by_id()
    hist, n, missing = rank_histogram(preds, samples, k)
    hits, prec, mrr = _metrics_from_hist(hist, n, k)
    slices = [
        SliceMetrics(
            name=OVERALL_SLICE, n=n, hits=hits, prec_at_k=prec, mrr_at_k=mrr,
            low_confidence=n < min_slice_size,
        )
    ]
    if partition is not None:
        for name, ids in partition.slices.items():
            subset = SampleSet(samples=[by_id[i] for i in sorted(ids) if i in by_id])
            s_hist, s_n, _ = rank_histogram(preds, subset, k)
            s_hits, s_prec, s_mrr = _metrics_from_hist(s_hist, s_n, k)
            slices.append(
                SliceMetrics(
                    name=name, n=s_n, hits=s_hits, prec_at_k=s_prec, mrr_at_k=s_mrr,
                    low_confidence=s_n < min_slice_size,
                )
            )
    return MetricsReport(
        model=model, dataset=dataset, k=k, slices=slices, missing_predictions=missing
    )


def compare_reports(reports: list[MetricsReport]) -> dict:
    """Merge overall metrics into a ranked model x (dataset, metric) matrix.

    Within each column, rank 1 is the best value; equal values share a rank
    (competition ranking). Mirrors the usual benchmark-table layout with
    per-column rank superscripts.
    """
    datasets = sorted({r.dataset for r in reports})
    models_seen: list[str] = []
    for r in reports:
        if r.model not in models_seen:
            models_seen.append(r.model)
    columns = []
    for ds in datasets:
        for metric in ("prec", "mrr"):
            columns.append({"dataset": ds, "metric": metric})

    def value(model: str, ds: str, metric: str) -> float | None:
        for r in reports:
            if r.model == model and r.dataset == ds:
                overall = r.slice(OVERALL_SLICE)
                return overall.prec_at_k if metric == "prec" else overall.mrr_at_k
        return None

    cells: dict[tuple[str, int], dict] = {}
    for ci, col in enumerate(columns):
        vals = [(m, value(m, col["dataset"], col["metric"])) for m in models_seen]
        scored = [v for _, v in vals if v is not None]
        for m, v in vals:
            if v is None:
                cells[(m, ci)] = {"value": None, "rank": None}
            else:
                rank = 1 + sum(1 for other in scored if other > v)
                cells[(m, ci)] = {"value": v, "rank": rank}
    return {
        "schema": "crprobe.comparison/1",
        "columns": columns,
        "models": models_seen,
        "rows": [
            {"model": m, "cells": [cells[(m, ci)] for ci in range(len(columns))]}
            for m in models_seen
        ],
    }


def comparison_text(comparison: dict) -> str:
    """Render a comparison matrix as an aligned text table, values in percent."""
    columns = comparison["columns"]
    headers = ["model"] + [
        f"{c['dataset']}:{'Prec' if c['metric'] == 'prec' else 'MRR'}" for c in columns
    ]
    rows = []
    for row in comparison["rows"]:
        cells = []
        for cell in row["cells"]:
            if cell["value"] is None:
                cells.append("-")
            else:
                cells.append(f"{100.0 * cell['value']:.2f}^{cell['rank']}")
        rows.append([row["model"]] + cells)
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(headers))))
    return "\n".join(lines) + "\n"
