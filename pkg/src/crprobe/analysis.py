"""Sample-level relation analyses.

Given the global graph and a set of evaluation samples, these operations
compute the relation class between each label and its prefix items, derive
the pure and direct/indirect sample partitions, and measure which relation
classes a model's predictions lean on.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .crgraph import DEFAULT_MAX_HOP, GlobalGraph, HopClassifier, class_labels
from .errors import DataError
from .ingest import SampleSet, Vocab
from .nputil import chunk_bounds

MODE_PER_PAIR = "per-pair"
MODE_NEAREST = "nearest-per-item"

PURE_SLICE_OTHERS = "others"
SLICE_DIRECT = "direct"
SLICE_INDIRECT = "indirect"


@dataclass
class LabelCrRecord:
    """Relation class between a sample's label and each of its prefix items."""

    sample_id: int
    crs: list[str]


@dataclass
class LabelCrDistribution:
    """Aggregate of label-to-prefix relation observations over a sample set."""

    counts: dict[str, int]
    hops: int
    n_samples: int
    all_none_samples: int

    @property
    def observations(self) -> int:
        return sum(self.counts.values())

    def proportions(self) -> dict[str, float]:
        total = self.observations
        if total == 0:
            return {label: 0.0 for label in self.counts}
        return {label: c / total for label, c in self.counts.items()}

    def to_json_dict(self) -> dict:
        return {
            "schema": "crprobe.label_cr/1",
            "hops": self.hops,
            "mode": MODE_PER_PAIR,
            "classes": dict(self.counts),
            "proportions": self.proportions(),
            "observations": self.observations,
            "samples": self.n_samples,
            "all_none_samples": self.all_none_samples,
        }


@dataclass
class SlicePartition:
    """Named sets of sample ids; slices are pairwise disjoint."""

    slices: dict[str, set[int]]

    def to_json_dict(self, schema: str, extra: dict | None = None) -> dict:
        out = {"schema": schema}
        out.update({name: len(ids) for name, ids in self.slices.items()})
        if extra:
            out.update(extra)
        return out


@dataclass
class PredictionSet:
    """Top-k recommendation lists keyed by sample id."""

    k: int
    lists: dict[int, list[int]]

    def validate(self, n_items: int) -> None:
        for sid, items in self.lists.items():
            if len(items) != self.k or len(set(items)) != self.k:
                raise DataError(f"prediction for sample {sid} is not {self.k} distinct items")
            if any(i < 0 or i >= n_items for i in items):
                raise DataError(f"prediction for sample {sid} contains out-of-vocabulary items")


@dataclass
class PredictionCrReport:
    """Distribution of relation classes between predicted and prefix items."""

    counts: dict[str, int]
    hops: int
    mode: str
    skipped_records: int

    @property
    def observations(self) -> int:
        return sum(self.counts.values())

    def proportions(self) -> dict[str, float]:
        total = self.observations
        if total == 0:
            return {label: 0.0 for label in self.counts}
        return {label: c / total for label, c in self.counts.items()}

    def to_json_dict(self) -> dict:
        return {
            "schema": "crprobe.prediction_cr/1",
            "hops": self.hops,
            "mode": self.mode,
            "classes": dict(self.counts),
            "proportions": self.proportions(),
            "observations": self.observations,
            "skipped_records": self.skipped_records,
        }


# Worker state for fork-based parallel classification.
_WORK: dict = {}


def _label_chunk(bounds: tuple[int, int]) -> tuple[list[tuple[int, list[int]]], np.ndarray, int]:
    classifier: HopClassifier = HopClassifier(_WORK["graph"], _WORK["hops"], cache_size=8)
    groups = _WORK["label_groups"]
    hops = _WORK["hops"]
    none_code = hops + 1
    counts = np.zeros(hops + 2, dtype=np.int64)
    out: list[tuple[int, list[int]]] = []
    all_none = 0
    for gi in range(*bounds):
        label, members = groups[gi]
        codes = classifier.codes_from(label)
        for sample_id, prefix in members:
            # a prefix occurrence of the label itself counts as the direct class
            entry = [0 if p == label else int(codes[p]) for p in prefix]
            for c in entry:
                counts[c] += 1
            if all(c == none_code for c in entry):
                all_none += 1
            out.append((sample_id, entry))
    return out, counts, all_none


def label_cr_records(
    g: GlobalGraph,
    samples: SampleSet,
    hops: int = DEFAULT_MAX_HOP,
    workers: int = 1,
) -> tuple[list[LabelCrRecord], LabelCrDistribution]:
    """Classify every (label, prefix item) pair of every sample.

    Returns one record per sample, in sample order, plus the per-pair
    aggregate distribution. Samples are grouped by label so each label costs
    one capped BFS; the sweep is parallel over labels with commutative
    integer aggregation.
    """
    groups: dict[int, list[tuple[int, list[int]]]] = {}
    for sample in samples:
        groups.setdefault(sample.label, []).append((sample.id, sample.prefix))
    group_list = sorted(groups.items())

    global _WORK
    _WORK = {"graph": g, "hops": hops, "label_groups": group_list}
    try:
        bounds = chunk_bounds(len(group_list), max(1, workers) * 4)
        if workers > 1 and len(bounds) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_label_chunk, bounds))
        else:
            parts = [_label_chunk(b) for b in bounds]
    finally:
        _WORK = {}

    labels = class_labels(hops)
    counts = np.zeros(hops + 2, dtype=np.int64)
    all_none = 0
    by_id: dict[int, list[int]] = {}
    for chunk_records, chunk_counts, chunk_none in parts:
        counts += chunk_counts
        all_none += chunk_none
        for sample_id, entry in chunk_records:
            by_id[sample_id] = entry

    records = [
        LabelCrRecord(sample_id=s.id, crs=[labels[c] for c in by_id[s.id]]) for s in samples
    ]
    dist = LabelCrDistribution(
        counts={labels[c]: int(counts[c]) for c in range(hops + 2)},
        hops=hops,
        n_samples=len(samples),
        all_none_samples=all_none,
    )
    return records, dist


def pure_partition(records: Iterable[LabelCrRecord], hops: int = DEFAULT_MAX_HOP) -> SlicePartition:
    """Partition samples whose label relates to every prefix item identically.

    Uniform records in hop levels 0..2 land in "pure-0"/"pure-1"/"pure-2";
    uniform records in any farther class (hop3+, others, none) land in
    "others"; mixed records belong to no slice.
    """
    named_levels = min(3, hops)
    slices: dict[str, set[int]] = {f"pure-{h}": set() for h in range(named_levels)}
    slices[PURE_SLICE_OTHERS] = set()
    for record in records:
        first = record.crs[0]
        if any(cr != first for cr in record.crs):
            continue
        slice_name = None
        for h in range(named_levels):
            if first == f"hop{h}":
                slice_name = f"pure-{h}"
                break
        if slice_name is None:
            slice_name = PURE_SLICE_OTHERS
        slices[slice_name].add(record.sample_id)
    return SlicePartition(slices=slices)


def direct_indirect_partition(records: Iterable[LabelCrRecord]) -> SlicePartition:
    """Split samples by whether the label directly co-occurs with any prefix item."""
    direct: set[int] = set()
    indirect: set[int] = set()
    for record in records:
        if "hop0" in record.crs:
            direct.add(record.sample_id)
        else:
            indirect.add(record.sample_id)
    return SlicePartition(slices={SLICE_DIRECT: direct, SLICE_INDIRECT: indirect})


def _proportions_chunk(bounds: tuple[int, int]) -> tuple[np.ndarray, int]:
    classifier = HopClassifier(_WORK["graph"], _WORK["hops"], cache_size=_WORK["cache_size"])
    items = _WORK["pred_items"]
    prefixes = _WORK["prefixes"]
    mode = _WORK["mode"]
    hops = _WORK["hops"]
    counts = np.zeros(hops + 2, dtype=np.int64)
    skipped = 0
    for i in range(*bounds):
        prefix = prefixes[i]
        if prefix is None:
            skipped += 1
            continue
        predicted = items[i]
        if mode == MODE_PER_PAIR:
            for x in prefix:
                codes = classifier.codes_from(x)
                for y in predicted:
                    if y != x:
                        counts[codes[y]] += 1
        else:
            best = np.full(len(predicted), hops + 2, dtype=np.int64)
            y_arr = np.asarray(predicted, dtype=np.int64)
            for x in prefix:
                codes = classifier.codes_from(x)
                cand = codes[y_arr].astype(np.int64)
                cand[y_arr == x] = hops + 2  # self-pair: not a usable clue
                best = np.minimum(best, cand)
            for b in best:
                if b <= hops + 1:
                    counts[b] += 1
    return counts, skipped


def prediction_cr_proportions(
    g: GlobalGraph,
    preds: PredictionSet,
    samples: SampleSet,
    hops: int = DEFAULT_MAX_HOP,
    mode: str = MODE_PER_PAIR,
    workers: int = 1,
) -> PredictionCrReport:
    """Distribution of relation classes between predictions and prefixes.

    In per-pair mode every (predicted item, prefix item) pair adds one
    observation; in nearest-per-item mode each predicted item contributes its
    closest relation across the prefix. Pairs of identical items are skipped.
    Predictions whose sample id is unknown are skipped and counted.
    """
    if mode not in (MODE_PER_PAIR, MODE_NEAREST):
        raise ValueError(f"unknown counting mode {mode!r}")
    sample_prefixes = {s.id: s.prefix for s in samples}
    ordered_ids = sorted(preds.lists)
    pred_items = [preds.lists[sid] for sid in ordered_ids]
    prefixes = [sample_prefixes.get(sid) for sid in ordered_ids]

    global _WORK
    _WORK = {
        "graph": g,
        "hops": hops,
        "mode": mode,
        "pred_items": pred_items,
        "prefixes": prefixes,
        "cache_size": 1024,
    }
    try:
        bounds = chunk_bounds(len(ordered_ids), max(1, workers) * 4)
        if workers > 1 and len(bounds) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_proportions_chunk, bounds))
        else:
            parts = [_proportions_chunk(b) for b in bounds]
    finally:
        _WORK = {}

    counts = np.zeros(hops + 2, dtype=np.int64)
    skipped = 0
    for chunk_counts, chunk_skipped in parts:
        counts += chunk_counts
        skipped += chunk_skipped
    labels = class_labels(hops)
    return PredictionCrReport(
        counts={labels[c]: int(counts[c]) for c in range(hops + 2)},
        hops=hops,
        mode=mode,
        skipped_records=skipped,
    )


def parse_prediction_file(
    lines: Iterable[str], vocab: Vocab, k: int
) -> tuple[PredictionSet, int, list[str]]:
    """Parse the external-model bridge format: "sample_id<TAB>id,id,...,id".

    Each line must carry exactly k distinct, resolvable opaque item IDs.
    Bad lines are skipped; returns (predictions, bad_line_count, messages).
    """
    lists: dict[int, list[int]] = {}
    bad = 0
    messages: list[str] = []

    def err(line_no: int, reason: str) -> None:
        nonlocal bad
        bad += 1
        if len(messages) < 100:
            messages.append(f"line {line_no}: {reason}")

    for line_no, line in enumerate(lines, start=1):
        text = line.rstrip("\r\n")
        if not text.strip():
            continue
        parts = text.split("\t")
        if len(parts) != 2:
            err(line_no, "expected 'sample_id<TAB>items'")
            continue
        try:
            sample_id = int(parts[0])
        except ValueError:
            err(line_no, f"bad sample id {parts[0]!r}")
            continue
        raw_items = parts[1].split(",")
        if len(raw_items) != k:
            err(line_no, f"expected {k} items, got {len(raw_items)}")
            continue
        try:
            items = [vocab.encode(r) for r in raw_items]
        except KeyError as exc:
            err(line_no, f"unknown item ID {exc.args[0]!r}")
            continue
        if len(set(items)) != k:
            err(line_no, "duplicate items in recommendation list")
            continue
        if sample_id in lists:
            err(line_no, f"duplicate sample id {sample_id}")
            continue
        lists[sample_id] = items
    return PredictionSet(k=k, lists=lists), bad, messages


def write_prediction_file(path, preds: PredictionSet, vocab: Vocab) -> None:
    """Write predictions in the bridge format, ordered by sample id."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sid in sorted(preds.lists):
            opaque = ",".join(vocab.decode(i) for i in preds.lists[sid])
            fh.write(f"{sid}\t{opaque}\n")
