"""Traditional recommender baselines under the full-ranking protocol.

All three models score the entire item catalog for a given prefix and are
deterministic: ties in rankings break by ascending item index, and BPR-MF
training is single-threaded with a seeded generator.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .crgraph import build_global_graph
from .errors import ModelError
from .ingest import Sample, SampleSet, SequenceSet
from .nputil import chunk_bounds, gather_ranges

DEFAULT_NEIGHBOR_CAP = 100
DEFAULT_SKNN_K = 500
DEFAULT_SKNN_RECENT = 5000


@dataclass
class RecommendationList:
    """Top-k items with scores, best first; ties resolved by item index."""

    items: list[int]
    scores: list[float]


def top_k_indices(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k best scores; equal scores order by ascending index."""
    order = np.lexsort((np.arange(scores.size), -scores))
    return order[:k]


def recommend_topk(model, sample: Sample | list[int], k: int = 10) -> RecommendationList:
    """Rank the full catalog for a sample's prefix and keep the top k.

    Items already in the prefix are not excluded: the protocol ranks every
    item in the set.
    """
    prefix = sample.prefix if isinstance(sample, Sample) else list(sample)
    scores = model.score(prefix)
    if k > scores.size:
        raise ValueError(f"k={k} exceeds catalog size {scores.size}")
    top = top_k_indices(scores, k)
    return RecommendationList(items=[int(i) for i in top], scores=[float(scores[i]) for i in top])


# ---------------------------------------------------------------------------
# Item-KNN


@dataclass
class ItemKnnModel:
    """Item-to-item cosine similarity over binary sequence membership.

    sim(i, j) = cooc(i, j) / sqrt(freq(i) * freq(j)) where freq counts the
    training sequences containing an item. Per-item neighbor lists are kept
    descending by similarity, ties by ascending index, truncated to the cap.
    """

    n_items: int
    indptr: np.ndarray  # int64, n_items + 1
    neighbor_items: np.ndarray  # int32
    neighbor_sims: np.ndarray  # float64
    seq_freq: np.ndarray  # int64

    def neighbors(self, item: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[item], self.indptr[item + 1]
        return self.neighbor_items[lo:hi], self.neighbor_sims[lo:hi]

    def similarity(self, a: int, b: int) -> float:
        items, sims = self.neighbors(a)
        hit = np.flatnonzero(items == b)
        return float(sims[hit[0]]) if hit.size else 0.0

    def score(self, prefix: list[int]) -> np.ndarray:
        """Similarity of every item to the last prefix item."""
        if not prefix:
            raise ValueError("prefix must be nonempty")
        scores = np.zeros(self.n_items, dtype=np.float64)
        items, sims = self.neighbors(prefix[-1])
        scores[items] = sims
        return scores


def sequence_frequencies(train: SequenceSet) -> np.ndarray:
    """Number of training sequences containing each item (distinct per sequence)."""
    freq = np.zeros(train.n_items, dtype=np.int64)
    for seq in train.sequences:
        for item in set(seq.items):
            freq[item] += 1
    return freq


def train_item_knn(train: SequenceSet, neighbor_cap: int = DEFAULT_NEIGHBOR_CAP) -> ItemKnnModel:
    graph = build_global_graph(train)
    freq = sequence_frequencies(train)
    sqrt_freq = np.sqrt(np.maximum(freq, 1).astype(np.float64))

    chunks_items: list[np.ndarray] = []
    chunks_sims: list[np.ndarray] = []
    row_lens = np.zeros(train.n_items, dtype=np.int64)
    for i in range(train.n_items):
        lo, hi = graph.indptr[i], graph.indptr[i + 1]
        nbrs = graph.indices[lo:hi]
        if nbrs.size == 0:
            continue
        sims = graph.cooc[lo:hi].astype(np.float64) / (sqrt_freq[i] * sqrt_freq[nbrs])
        if nbrs.size > neighbor_cap:
            keep = np.lexsort((nbrs, -sims))[:neighbor_cap]
        else:
            keep = np.lexsort((nbrs, -sims))
        chunks_items.append(nbrs[keep].astype(np.int32))
        chunks_sims.append(sims[keep])
        row_lens[i] = keep.size

    indptr = np.zeros(train.n_items + 1, dtype=np.int64)
    np.cumsum(row_lens, out=indptr[1:])
    return ItemKnnModel(
        n_items=train.n_items,
        indptr=indptr,
        neighbor_items=(
            np.concatenate(chunks_items) if chunks_items else np.zeros(0, dtype=np.int32)
        ),
        neighbor_sims=(
            np.concatenate(chunks_sims) if chunks_sims else np.zeros(0, dtype=np.float64)
        ),
        seq_freq=freq,
    )


# ---------------------------------------------------------------------------
# Session-KNN


@dataclass
class SknnModel:
    """Nearest-session scoring over a window of the most recent sequences.

    Neighbor sessions are the top k_n by cosine similarity between the prefix
    item set and the session item set; the window holds the m_recent most
    recent training sequences. Candidate items score the sum of their
    neighbor sessions' similarities.
    """

    n_items: int
    k_n: int
    m_recent: int
    session_ids: np.ndarray  # int64, original sequence ids, window order
    session_indptr: np.ndarray  # int64, W + 1
    session_items: np.ndarray  # int32, distinct sorted items per session
    inv_indptr: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    inv_positions: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.inv_indptr is None:
            self._build_inverted_index()

    def _build_inverted_index(self) -> None:
        sizes = np.diff(self.session_indptr)
        positions = np.repeat(np.arange(self.session_ids.size, dtype=np.int32), sizes)
        order = np.argsort(self.session_items, kind="stable")
        self.inv_positions = positions[order]
        self.inv_indptr = np.zeros(self.n_items + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.session_items, minlength=self.n_items), out=self.inv_indptr[1:])

    def score(self, prefix: list[int]) -> np.ndarray:
        if not prefix:
            raise ValueError("prefix must be nonempty")
        prefix_set = np.unique(np.asarray(prefix, dtype=np.int64))
        starts = self.inv_indptr[prefix_set]
        lens = self.inv_indptr[prefix_set + 1] - starts
        touched = gather_ranges(starts, lens, self.inv_positions)
        scores = np.zeros(self.n_items, dtype=np.float64)
        if touched.size == 0:
            return scores
        overlap = np.bincount(touched, minlength=self.session_ids.size)
        cand = np.flatnonzero(overlap)
        sizes = np.diff(self.session_indptr)
        sims = overlap[cand] / np.sqrt(float(prefix_set.size) * sizes[cand])
        order = np.lexsort((self.session_ids[cand], -sims))[: self.k_n]
        picked = cand[order]
        picked_sims = sims[order]
        cat_items = gather_ranges(
            self.session_indptr[picked], sizes[picked], self.session_items
        )
        weights = np.repeat(picked_sims, sizes[picked])
        scores = np.bincount(cat_items, weights=weights, minlength=self.n_items)
        return scores.astype(np.float64)


def train_sknn(
    train: SequenceSet,
    k_n: int = DEFAULT_SKNN_K,
    m_recent: int = DEFAULT_SKNN_RECENT,
) -> SknnModel:
    if k_n < 1:
        raise ValueError("k_n must be >= 1")
    ordered = sorted(train.sequences, key=lambda s: (s.end_time, s.id))
    window = ordered[-m_recent:] if m_recent > 0 else ordered
    session_ids = np.array([s.id for s in window], dtype=np.int64)
    item_sets = [np.array(sorted(set(s.items)), dtype=np.int32) for s in window]
    indptr = np.zeros(len(window) + 1, dtype=np.int64)
    np.cumsum([arr.size for arr in item_sets], out=indptr[1:])
    items = np.concatenate(item_sets) if item_sets else np.zeros(0, dtype=np.int32)
    return SknnModel(
        n_items=train.n_items,
        k_n=k_n,
        m_recent=m_recent,
        session_ids=session_ids,
        session_indptr=indptr,
        session_items=items,
    )


def score_sknn(model: SknnModel, prefix: list[int]) -> np.ndarray:
    return model.score(prefix)


def score_item_knn(model: ItemKnnModel, prefix: list[int]) -> np.ndarray:
    return model.score(prefix)


# ---------------------------------------------------------------------------
# BPR-MF


@dataclass
class BprHyperParams:
    dim: int = 128
    learning_rate: float = 0.05
    l2: float = 1e-5
    epochs: int = 30
    negatives: int = 1
    batch_size: int = 256

    def validate(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class BprMfModel:
    """Item factors trained with the pairwise ranking objective.

    A sequence (or test prefix) is represented as the mean of its items'
    factors; scores are dot products against that mean.
    """

    factors: np.ndarray  # (n_items, dim) float64
    hp: BprHyperParams
    seed: int
    initial_loss: float
    epoch_losses: list[float]

    @property
    def n_items(self) -> int:
        return self.factors.shape[0]

    def score(self, prefix: list[int]) -> np.ndarray:
        if not prefix:
            raise ValueError("prefix must be nonempty")
        rep = self.factors[np.asarray(prefix, dtype=np.int64)].mean(axis=0)
        return self.factors @ rep


def _bpr_epoch(
    factors: np.ndarray,
    flat_items: np.ndarray,
    seq_offsets: np.ndarray,
    seq_lens: np.ndarray,
    item_sets: list[frozenset],
    order: np.ndarray,
    rng: np.random.Generator,
    hp: BprHyperParams,
    update: bool,
) -> float:
    """One pass over the (sequence, position) examples; returns mean loss.

    Mini-batches compute every gradient from the factor snapshot at batch
    start, then scatter-add, so a fixed seed reproduces factors bit for bit.
    """
    n_items = factors.shape[0]
    lr, l2 = hp.learning_rate, hp.l2
    ex_seq_all = np.repeat(np.arange(seq_lens.size, dtype=np.int64), seq_lens)
    total_loss = 0.0
    total_pairs = 0
    for lo in range(0, order.size, hp.batch_size):
        batch = order[lo : lo + hp.batch_size]
        seqs = ex_seq_all[batch]
        pos = flat_items[batch]
        m = seq_lens[seqs].astype(np.float64)

        for _ in range(hp.negatives):
            negs = rng.integers(0, n_items, size=batch.size)
            for j in range(batch.size):
                while negs[j] in item_sets[seqs[j]]:
                    negs[j] = rng.integers(0, n_items)

            uniq, inv = np.unique(seqs, return_inverse=True)
            cat = gather_ranges(seq_offsets[uniq], seq_lens[uniq], flat_items)
            bounds = np.zeros(uniq.size, dtype=np.int64)
            np.cumsum(seq_lens[uniq][:-1], out=bounds[1:])
            sums = np.add.reduceat(factors[cat], bounds, axis=0)

            v_pos = factors[pos]
            v_neg = factors[negs]
            ctx = (sums[inv] - v_pos) / (m - 1.0)[:, None]
            diff = np.einsum("ij,ij->i", ctx, v_pos - v_neg)
            total_loss += float(np.logaddexp(0.0, -diff).sum())
            total_pairs += batch.size
            if not update:
                continue

            g = np.exp(-np.logaddexp(0.0, diff))  # sigmoid(-diff), overflow-safe
            d_vec = v_pos - v_neg
            seq_rows = gather_ranges(seq_offsets[seqs], seq_lens[seqs], flat_items)
            row_w = np.repeat(g / (m - 1.0), seq_lens[seqs])
            row_delta = lr * (
                row_w[:, None] * np.repeat(d_vec, seq_lens[seqs], axis=0)
                - l2 * factors[seq_rows]
            )
            pos_delta = lr * (g[:, None] * ctx - (g / (m - 1.0))[:, None] * d_vec)
            neg_delta = lr * (-g[:, None] * ctx - l2 * v_neg)
            np.add.at(factors, seq_rows, row_delta)
            np.add.at(factors, pos, pos_delta)
            np.add.at(factors, negs, neg_delta)

    return total_loss / max(total_pairs, 1)


def train_bpr_mf(
    train: SequenceSet, hp: BprHyperParams | None = None, seed: int = 0
) -> BprMfModel:
    """Train item factors with pairwise ranking SGD.

    Each item of each sequence serves as a positive once per epoch, with the
    rest of the sequence as context and uniformly sampled negatives from
    outside the sequence. Non-finite loss aborts with a diagnostic.
    """
    hp = hp or BprHyperParams()
    hp.validate()
    n = train.n_items
    flat_items = np.concatenate(
        [np.asarray(s.items, dtype=np.int64) for s in train.sequences]
    )
    seq_lens = np.array([len(s.items) for s in train.sequences], dtype=np.int64)
    seq_offsets = np.zeros(seq_lens.size, dtype=np.int64)
    np.cumsum(seq_lens[:-1], out=seq_offsets[1:])
    item_sets = [frozenset(s.items) for s in train.sequences]
    if any(len(s) >= n for s in item_sets):
        raise ModelError("a sequence covers the whole catalog; cannot sample negatives")

    init_rng = np.random.default_rng(seed)
    factors = init_rng.normal(0.0, 0.1, size=(n, hp.dim))
    rng = np.random.default_rng(seed)
    rng.normal(0.0, 0.1, size=(n, hp.dim))  # keep the two streams aligned

    # The initialization loss walks the exact example/negative stream epoch 1
    # will see (paired evaluation), so epoch 1 beating it reflects the
    # updates, not sampling noise.
    initial_loss = _bpr_epoch(
        factors,
        flat_items,
        seq_offsets,
        seq_lens,
        item_sets,
        init_rng.permutation(flat_items.size),
        init_rng,
        hp,
        update=False,
    )
    epoch_losses: list[float] = []
    for epoch in range(hp.epochs):
        order = rng.permutation(flat_items.size)
        loss = _bpr_epoch(
            factors, flat_items, seq_offsets, seq_lens, item_sets, order, rng, hp, update=True
        )
        if not np.isfinite(loss) or not np.all(np.isfinite(factors)):
            raise ModelError(
                f"BPR-MF diverged at epoch {epoch + 1}: loss={loss!r}; "
                f"try a smaller learning rate (current {hp.learning_rate})"
            )
        epoch_losses.append(loss)
    return BprMfModel(
        factors=factors, hp=hp, seed=seed, initial_loss=initial_loss, epoch_losses=epoch_losses
    )


# ---------------------------------------------------------------------------
# Batch prediction

_PREDICT: dict = {}


def _predict_chunk(bounds: tuple[int, int]) -> list[tuple[int, list[int]]]:
    model = _PREDICT["model"]
    samples: list[Sample] = _PREDICT["samples"]
    k: int = _PREDICT["k"]
    out = []
    for i in range(*bounds):
        sample = samples[i]
        rec = recommend_topk(model, sample, k)
        out.append((sample.id, rec.items))
    return out


def predict_all(model, samples: SampleSet, k: int = 10, workers: int = 1):
    """Produce top-k lists for every sample; parallel over samples.

    Returns an analysis.PredictionSet. Chunks are deterministic and results
    are keyed by sample id, so the worker count cannot change the output.
    """
    from .analysis import PredictionSet

    sample_list = list(samples)
    global _PREDICT
    _PREDICT = {"model": model, "samples": sample_list, "k": k}
    try:
        bounds = chunk_bounds(len(sample_list), max(1, workers) * 4)
        if workers > 1 and len(bounds) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_predict_chunk, bounds))
        else:
            parts = [_predict_chunk(b) for b in bounds]
    finally:
        _PREDICT = {}
    lists: dict[int, list[int]] = {}
    for part in parts:
        for sid, items in part:
            lists[sid] = items
    return PredictionSet(k=k, lists=lists)
