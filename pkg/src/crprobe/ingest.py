"""Interaction-log ingestion.

Parses delimiter-separated event logs into item-ID sequences, applies the
standard frequency/length filters, and produces chronological train/valid/test
splits with leave-last-out evaluation samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence as TypingSequence

import numpy as np

from .errors import ConfigError, DataError

GROUP_SESSION = "session"
GROUP_SESSION_PER_DAY = "session-per-day"
GROUPINGS = (GROUP_SESSION, GROUP_SESSION_PER_DAY)

SECONDS_PER_DAY = 86400
MAX_REPORTED_ROW_ERRORS = 100


@dataclass(frozen=True)
class Event:
    """One interaction row: a session touched an item at a point in time."""

    session_id: str
    item_id: str
    timestamp: int


@dataclass
class ColumnMap:
    """Names (or 0-based positions) of the session / item / timestamp columns."""

    session: str | int = "session_id"
    item: str | int = "item_id"
    time: str | int = "timestamp"

    def resolve(self, header: list[str]) -> tuple[int, int, int]:
        positions = []
        for label, col in (("session", self.session), ("item", self.item), ("time", self.time)):
            if isinstance(col, int):
                if not 0 <= col < len(header):
                    raise ConfigError(
                        f"{label} column index {col} out of range for header with {len(header)} columns"
                    )
                positions.append(col)
            else:
                try:
                    positions.append(header.index(col))
                except ValueError:
                    raise ConfigError(
                        f"{label} column {col!r} not found in header {header!r}"
                    ) from None
        return tuple(positions)  # type: ignore[return-value]


@dataclass
class ParseReport:
    """Row-level accounting from parse_events."""

    rows: int = 0
    skipped: int = 0
    errors: list[str] = field(default_factory=list)

    def add_error(self, line_no: int, reason: str) -> None:
        self.skipped += 1
        if len(self.errors) < MAX_REPORTED_ROW_ERRORS:
            self.errors.append(f"line {line_no}: {reason}")


class Vocab:
    """Bidirectional map between opaque item IDs and dense indices."""

    __slots__ = ("_ids", "_index")

    def __init__(self, ids: TypingSequence[str]):
        self._ids = list(ids)
        self._index = {s: i for i, s in enumerate(self._ids)}
        if len(self._index) != len(self._ids):
            raise ValueError("duplicate opaque item IDs in vocabulary")

    def encode(self, item_id: str) -> int:
        return self._index[item_id]

    def decode(self, index: int) -> str:
        return self._ids[index]

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._index

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def ids(self) -> list[str]:
        return self._ids


@dataclass
class Sequence:
    """An ordered run of item interactions; end_time is the last event's timestamp."""

    id: int
    items: list[int]
    end_time: int


@dataclass
class SequenceSet:
    """A corpus of sequences over a shared dense vocabulary.

    counts[i] is the number of interactions with item i across all sequences.
    Treated as immutable once built; safe to share across workers.
    """

    sequences: list[Sequence]
    vocab: Vocab
    counts: np.ndarray

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    @property
    def n_items(self) -> int:
        return len(self.vocab)

    @property
    def n_interactions(self) -> int:
        return int(sum(len(s.items) for s in self.sequences))

    @classmethod
    def from_item_lists(
        cls,
        lists: TypingSequence[TypingSequence[str]],
        end_times: TypingSequence[int] | None = None,
    ) -> "SequenceSet":
        """Build a SequenceSet directly from opaque-ID lists (test/tooling helper).

        Dense indices are assigned in first-appearance order; end_times default
        to the list position.
        """
        ids: list[str] = []
        index: dict[str, int] = {}
        sequences = []
        for sid, raw in enumerate(lists):
            items = []
            for opaque in raw:
                if opaque not in index:
                    index[opaque] = len(ids)
                    ids.append(opaque)
                items.append(index[opaque])
            end = end_times[sid] if end_times is not None else sid
            sequences.append(Sequence(id=sid, items=items, end_time=int(end)))
        vocab = Vocab(ids)
        counts = _occurrence_counts(sequences, len(vocab))
        return cls(sequences=sequences, vocab=vocab, counts=counts)


@dataclass
class Sample:
    """A leave-last-out evaluation case: predict `label` after seeing `prefix`."""

    id: int
    prefix: list[int]
    label: int
    origin_end_time: int


@dataclass
class SampleSet:
    samples: list[Sample]

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def by_id(self) -> dict[int, Sample]:
        return {s.id: s for s in self.samples}


@dataclass
class DatasetSplit:
    train: SequenceSet
    valid: SampleSet
    test: SampleSet


@dataclass
class StatsReport:
    n_items: int
    n_interactions: int
    n_sequences: int
    avg_length: float

    def to_json_dict(self) -> dict:
        return {
            "schema": "crprobe.stats/1",
            "items": self.n_items,
            "interactions": self.n_interactions,
            "sequences": self.n_sequences,
            "avg_length": round(self.avg_length, 2),
        }


def _occurrence_counts(sequences: Iterable[Sequence], n_items: int) -> np.ndarray:
    counts = np.zeros(n_items, dtype=np.int64)
    for seq in sequences:
        for item in seq.items:
            counts[item] += 1
    return counts


def _parse_timestamp(raw: str) -> int:
    text = raw.strip()
    try:
        value = int(text)
    except ValueError:
        value = int(float(text))  # tolerate "100.0"; still raises on garbage
    if value < 0:
        raise ValueError("negative timestamp")
    return value


def parse_events(
    lines: Iterable[str],
    columns: ColumnMap | None = None,
    delimiter: str = "\t",
) -> tuple[list[Event], ParseReport]:
    """Parse a header-first delimited event log into Events, in file order.

    Malformed rows (bad timestamp, empty IDs, too few columns) are skipped and
    counted in the returned ParseReport. A column mapping that cannot be
    resolved against the header is a fatal ConfigError.
    """
    columns = columns or ColumnMap()
    it = iter(lines)
    try:
        header_line = next(it)
    except StopIteration:
        raise DataError("input is empty: expected a header row") from None
    header = header_line.rstrip("\r\n").split(delimiter)
    s_pos, i_pos, t_pos = columns.resolve(header)
    width = max(s_pos, i_pos, t_pos) + 1

    events: list[Event] = []
    report = ParseReport()
    for line_no, line in enumerate(it, start=2):
        if not line.strip():
            continue
        report.rows += 1
        fields = line.rstrip("\r\n").split(delimiter)
        if len(fields) < width:
            report.add_error(line_no, f"expected at least {width} columns, got {len(fields)}")
            continue
        session_id = fields[s_pos].strip()
        item_id = fields[i_pos].strip()
        if not session_id or not item_id:
            report.add_error(line_no, "empty session or item ID")
            continue
        try:
            timestamp = _parse_timestamp(fields[t_pos])
        except ValueError:
            report.add_error(line_no, f"unparsable timestamp {fields[t_pos]!r}")
            continue
        events.append(Event(session_id=session_id, item_id=item_id, timestamp=timestamp))
    return events, report


def build_sequences(events: list[Event], grouping: str = GROUP_SESSION) -> SequenceSet:
    """Group events into sequences and densify item IDs.

    Within a group, items are ordered by timestamp with ties broken by input
    order. In per-day mode the group key is (session, UTC day of timestamp).
    """
    if grouping not in GROUPINGS:
        raise ConfigError(f"unknown grouping {grouping!r}; expected one of {GROUPINGS}")
    if not events:
        raise DataError("no events to build sequences from")

    ids: list[str] = []
    index: dict[str, int] = {}
    groups: dict[tuple, list[tuple[int, int, int]]] = {}
    for order, ev in enumerate(events):
        if ev.item_id not in index:
            index[ev.item_id] = len(ids)
            ids.append(ev.item_id)
        if grouping == GROUP_SESSION_PER_DAY:
            key = (ev.session_id, ev.timestamp // SECONDS_PER_DAY)
        else:
            key = (ev.session_id,)
        groups.setdefault(key, []).append((ev.timestamp, order, index[ev.item_id]))

    sequences = []
    for sid, rows in enumerate(groups.values()):  # dict preserves first-appearance order
        rows.sort(key=lambda r: (r[0], r[1]))
        items = [item for _, _, item in rows]
        sequences.append(Sequence(id=sid, items=items, end_time=rows[-1][0]))

    vocab = Vocab(ids)
    return SequenceSet(
        sequences=sequences,
        vocab=vocab,
        counts=_occurrence_counts(sequences, len(vocab)),
    )


def preprocess(raw: SequenceSet, min_item_freq: int = 5, min_len: int = 2) -> SequenceSet:
    """Apply the standard corpus filters, once, in order.

    Items whose total interaction count (in `raw`) is below min_item_freq are
    removed from every sequence; sequences then shorter than min_len are
    dropped; the vocabulary is re-densified over the survivors. The filters are
    not iterated to a fixpoint.
    """
    if min_item_freq < 1:
        raise ValueError("min_item_freq must be >= 1")
    if min_len < 2:
        raise ValueError("min_len must be >= 2")

    keep_item = raw.counts >= min_item_freq
    kept_sequences: list[list[int]] = []
    kept_end_times: list[int] = []
    for seq in raw.sequences:
        items = [i for i in seq.items if keep_item[i]]
        if len(items) >= min_len:
            kept_sequences.append(items)
            kept_end_times.append(seq.end_time)

    if not kept_sequences:
        raise DataError("dataset exhausted by filters: no sequences survive preprocessing")

    present = np.zeros(raw.n_items, dtype=bool)
    for items in kept_sequences:
        present[items] = True
    old_indices = np.flatnonzero(present)
    remap = np.full(raw.n_items, -1, dtype=np.int64)
    remap[old_indices] = np.arange(old_indices.size)

    vocab = Vocab([raw.vocab.decode(int(i)) for i in old_indices])
    sequences = [
        Sequence(id=sid, items=[int(remap[i]) for i in items], end_time=end)
        for sid, (items, end) in enumerate(zip(kept_sequences, kept_end_times))
    ]
    return SequenceSet(
        sequences=sequences,
        vocab=vocab,
        counts=_occurrence_counts(sequences, len(vocab)),
    )


def _leave_last_out(
    sequences: list[Sequence], in_train: np.ndarray
) -> SampleSet:
    """Convert sequences to (prefix, label) samples, restricted to train items.

    Items absent from the training set are removed from prefixes; a sample is
    dropped entirely when its label is unseen or its prefix empties.
    """
    samples = []
    for seq in sequences:
        label = seq.items[-1]
        if not in_train[label]:
            continue
        prefix = [i for i in seq.items[:-1] if in_train[i]]
        if not prefix:
            continue
        samples.append(
            Sample(id=len(samples), prefix=prefix, label=label, origin_end_time=seq.end_time)
        )
    return SampleSet(samples=samples)


def split_chronological(
    data: SequenceSet, ratios: tuple[float, float, float] = (7, 2, 1)
) -> DatasetSplit:
    """Split the corpus chronologically by sequence end time.

    The earliest ratio[0] share of sequences becomes the training set; the
    next ratio[1] share the validation set; the rest the test set. Validation
    and test sequences are converted to leave-last-out samples over the
    training item set. The shared dense vocabulary is kept.
    """
    if len(ratios) != 3 or any(r <= 0 or not np.isfinite(r) for r in ratios):
        raise ConfigError(f"split ratios must be three positive numbers, got {ratios!r}")

    ordered = sorted(data.sequences, key=lambda s: (s.end_time, s.id))
    n = len(ordered)
    total = float(sum(ratios))
    b1 = int(n * ratios[0] / total)
    b2 = int(n * (ratios[0] + ratios[1]) / total)
    if b1 == 0:
        raise DataError("training split is empty; not enough sequences for the ratios")

    train_sequences = [
        Sequence(id=i, items=list(seq.items), end_time=seq.end_time)
        for i, seq in enumerate(ordered[:b1])
    ]
    train = SequenceSet(
        sequences=train_sequences,
        vocab=data.vocab,
        counts=_occurrence_counts(train_sequences, data.n_items),
    )
    in_train = train.counts > 0
    return DatasetSplit(
        train=train,
        valid=_leave_last_out(ordered[b1:b2], in_train),
        test=_leave_last_out(ordered[b2:], in_train),
    )


def dataset_stats(data: SequenceSet | DatasetSplit) -> StatsReport:
    """Corpus-level statistics: item/interaction/sequence counts, mean length.

    Benchmark tables report these over the full preprocessed corpus before
    splitting; pass the SequenceSet from preprocess() for that reading. Given a
    DatasetSplit, the valid/test samples are counted as prefix+label.
    """
    if isinstance(data, SequenceSet):
        if not data.sequences:
            raise DataError("empty corpus")
        n_inter = data.n_interactions
        n_seq = len(data.sequences)
        n_items = data.n_items
    else:
        lengths = [len(s.items) for s in data.train.sequences]
        present = set()
        for s in data.train.sequences:
            present.update(s.items)
        for sample_set in (data.valid, data.test):
            for sample in sample_set:
                lengths.append(len(sample.prefix) + 1)
                present.update(sample.prefix)
                present.add(sample.label)
        if not lengths:
            raise DataError("empty split")
        n_inter = sum(lengths)
        n_seq = len(lengths)
        n_items = len(present)
    return StatsReport(
        n_items=n_items,
        n_interactions=n_inter,
        n_sequences=n_seq,
        avg_length=n_inter / n_seq,
    )
