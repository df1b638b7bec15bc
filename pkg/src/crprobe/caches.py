"""Versioned binary caches and canonical JSON output.

All binary formats are little-endian with a 4-byte magic: "CRP1" for
sequence corpora, "CRS1" for sample sets, "CRG1" for the global graph, and
"IKN1"/"SKN1"/"BPR1" for trained models. JSON artifacts all go through
write_json so reruns are byte-identical.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .crgraph import GlobalGraph
from .errors import DataError
from .ingest import Sample, SampleSet, Sequence, SequenceSet, Vocab
from .recommenders import BprHyperParams, BprMfModel, ItemKnnModel, SknnModel

MAGIC_CORPUS = b"CRP1"
MAGIC_SAMPLES = b"CRS1"
MAGIC_GRAPH = b"CRG1"
MAGIC_ITEM_KNN = b"IKN1"
MAGIC_SKNN = b"SKN1"
MAGIC_BPR = b"BPR1"


def write_json(path: str | Path, payload: dict) -> None:
    text = json.dumps(payload, ensure_ascii=False, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _expect_magic(fh: BinaryIO, magic: bytes, path: str | Path) -> None:
    got = fh.read(4)
    if got != magic:
        raise DataError(f"{path}: bad magic {got!r}, expected {magic!r}")


def _write_u32(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<I", value))


def _write_u64(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<Q", value))


def _read_u32(fh: BinaryIO) -> int:
    return struct.unpack("<I", fh.read(4))[0]


def _read_u64(fh: BinaryIO) -> int:
    return struct.unpack("<Q", fh.read(8))[0]


def _write_array(fh: BinaryIO, arr: np.ndarray, dtype: str) -> None:
    fh.write(np.ascontiguousarray(arr, dtype=dtype).tobytes())


def _read_array(fh: BinaryIO, dtype: str, count: int) -> np.ndarray:
    itemsize = np.dtype(dtype).itemsize
    buf = fh.read(itemsize * count)
    if len(buf) != itemsize * count:
        raise DataError("truncated cache file")
    return np.frombuffer(buf, dtype=dtype).copy()


# ---------------------------------------------------------------------------
# Corpus (CRP1): vocab size, vocab strings, then length-prefixed sequences.


def write_sequence_set(path: str | Path, data: SequenceSet) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC_CORPUS)
        _write_u32(fh, len(data.vocab))
        for opaque in data.vocab.ids:
            raw = opaque.encode("utf-8")
            _write_u32(fh, len(raw))
            fh.write(raw)
        _write_u32(fh, len(data.sequences))
        for seq in data.sequences:
            _write_u64(fh, seq.end_time)
            _write_u32(fh, len(seq.items))
            _write_array(fh, np.asarray(seq.items), "<u4")


def read_sequence_set(path: str | Path) -> SequenceSet:
    with open(path, "rb") as fh:
        _expect_magic(fh, MAGIC_CORPUS, path)
        vocab_size = _read_u32(fh)
        ids = []
        for _ in range(vocab_size):
            length = _read_u32(fh)
            ids.append(fh.read(length).decode("utf-8"))
        vocab = Vocab(ids)
        n_sequences = _read_u32(fh)
        sequences = []
        for sid in range(n_sequences):
            end_time = _read_u64(fh)
            length = _read_u32(fh)
            items = _read_array(fh, "<u4", length)
            sequences.append(Sequence(id=sid, items=[int(i) for i in items], end_time=end_time))
    counts = np.zeros(vocab_size, dtype=np.int64)
    for seq in sequences:
        for item in seq.items:
            counts[item] += 1
    return SequenceSet(sequences=sequences, vocab=vocab, counts=counts)


# ---------------------------------------------------------------------------
# Samples (CRS1)


def write_sample_set(path: str | Path, data: SampleSet) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC_SAMPLES)
        _write_u32(fh, len(data.samples))
        for sample in data.samples:
            _write_u32(fh, sample.id)
            _write_u64(fh, sample.origin_end_time)
            _write_u32(fh, sample.label)
            _write_u32(fh, len(sample.prefix))
            _write_array(fh, np.asarray(sample.prefix), "<u4")


def read_sample_set(path: str | Path) -> SampleSet:
    with open(path, "rb") as fh:
        _expect_magic(fh, MAGIC_SAMPLES, path)
        n = _read_u32(fh)
        samples = []
        for _ in range(n):
            sid = _read_u32(fh)
            end_time = _read_u64(fh)
            label = _read_u32(fh)
            length = _read_u32(fh)
            prefix = [int(i) for i in _read_array(fh, "<u4", length)]
            samples.append(
                Sample(id=sid, prefix=prefix, label=int(label), origin_end_time=end_time)
            )
    return SampleSet(samples=samples)


# ---------------------------------------------------------------------------
# Graph (CRG1): n, undirected edge count, CSR offsets, neighbors, cooc.


def write_graph(path: str | Path, g: GlobalGraph) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC_GRAPH)
        _write_u32(fh, g.n)
        _write_u64(fh, g.edge_count)
        _write_array(fh, g.indptr, "<u8")
        _write_array(fh, g.indices, "<u4")
        _write_array(fh, g.cooc, "<u4")


def read_graph(path: str | Path) -> GlobalGraph:
    from .crgraph import _connected_components

    with open(path, "rb") as fh:
        _expect_magic(fh, MAGIC_GRAPH, path)
        n = _read_u32(fh)
        edges = _read_u64(fh)
        indptr = _read_array(fh, "<u8", n + 1).astype(np.int64)
        if indptr[-1] != 2 * edges:
            raise DataError(f"{path}: CSR offsets inconsistent with edge count")
        indices = _read_array(fh, "<u4", 2 * edges).astype(np.int32)
        cooc = _read_array(fh, "<u4", 2 * edges).astype(np.int32)
    g = GlobalGraph(
        n=n,
        indptr=indptr,
        indices=indices,
        cooc=cooc,
        comp=np.zeros(n, dtype=np.int32),
        comp_sizes=np.zeros(0, dtype=np.int64),
    )
    g.comp, g.comp_sizes = _connected_components(g)
    return g


# ---------------------------------------------------------------------------
# Model caches


def write_item_knn(path: str | Path, model: ItemKnnModel) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC_ITEM_KNN)
        _write_u32(fh, model.n_items)
        _write_u64(fh, model.neighbor_items.size)
        _write_array(fh, model.indptr, "<u8")
        _write_array(fh, model.neighbor_items, "<u4")
        _write_array(fh, model.neighbor_sims, "<f8")
        _write_array(fh, model.seq_freq, "<u8")


def read_item_knn(path: str | Path) -> ItemKnnModel:
    with open(path, "rb") as fh:
        _expect_magic(fh, MAGIC_ITEM_KNN, path)
        n = _read_u32(fh)
        nnz = _read_u64(fh)
        indptr = _read_array(fh, "<u8", n + 1).astype(np.int64)
        items = _read_array(fh, "<u4", nnz).astype(np.int32)
        sims = _read_array(fh, "<f8", nnz)
        freq = _read_array(fh, "<u8", n).astype(np.int64)
    return ItemKnnModel(
        n_items=n, indptr=indptr, neighbor_items=items, neighbor_sims=sims, seq_freq=freq
    )


def write_sknn(path: str | Path, model: SknnModel) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC_SKNN)
        _write_u32(fh, model.n_items)
        _write_u32(fh, model.k_n)
        _write_u32(fh, model.m_recent)
        _write_u32(fh, model.session_ids.size)
        _write_u64(fh, model.session_items.size)
        _write_array(fh, model.session_ids, "<u8")
        _write_array(fh, model.session_indptr, "<u8")
        _write_array(fh, model.session_items, "<u4")


def read_sknn(path: str | Path) -> SknnModel:
    with open(path, "rb") as fh:
        _expect_magic(fh, MAGIC_SKNN, path)
        n_items = _read_u32(fh)
        k_n = _read_u32(fh)
        m_recent = _read_u32(fh)
        n_sessions = _read_u32(fh)
        nnz = _read_u64(fh)
        session_ids = _read_array(fh, "<u8", n_sessions).astype(np.int64)
        indptr = _read_array(fh, "<u8", n_sessions + 1).astype(np.int64)
        items = _read_array(fh, "<u4", nnz).astype(np.int32)
    return SknnModel(
        n_items=n_items,
        k_n=k_n,
        m_recent=m_recent,
        session_ids=session_ids,
        session_indptr=indptr,
        session_items=items,
    )


def write_bpr(path: str | Path, model: BprMfModel) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC_BPR)
        _write_u32(fh, model.n_items)
        _write_u32(fh, model.hp.dim)
        _write_u64(fh, model.seed)
        fh.write(struct.pack("<ddIII", model.hp.learning_rate, model.hp.l2,
                             model.hp.epochs, model.hp.negatives, model.hp.batch_size))
        fh.write(struct.pack("<d", model.initial_loss))
        _write_u32(fh, len(model.epoch_losses))
        _write_array(fh, np.asarray(model.epoch_losses, dtype=np.float64), "<f8")
        _write_array(fh, model.factors, "<f8")


def read_bpr(path: str | Path) -> BprMfModel:
    with open(path, "rb") as fh:
        _expect_magic(fh, MAGIC_BPR, path)
        n = _read_u32(fh)
        dim = _read_u32(fh)
        seed = _read_u64(fh)
        lr, l2, epochs, negatives, batch_size = struct.unpack("<ddIII", fh.read(28))
        (initial_loss,) = struct.unpack("<d", fh.read(8))
        n_losses = _read_u32(fh)
        losses = list(_read_array(fh, "<f8", n_losses))
        factors = _read_array(fh, "<f8", n * dim).reshape(n, dim)
    hp = BprHyperParams(
        dim=dim, learning_rate=lr, l2=l2, epochs=epochs,
        negatives=negatives, batch_size=batch_size,
    )
    return BprMfModel(
        factors=factors, hp=hp, seed=seed, initial_loss=initial_loss,
        epoch_losses=[float(x) for x in losses],
    )
